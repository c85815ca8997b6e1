public abstract class Shape
{
    public abstract double Area();

    public string Describe()
    {
        return "Area: " + Area();
    }
}

public class Rectangle : Shape
{
    public double Width;
    public double Height;

    public Rectangle(double width, double height)
    {
        Width = width;
        Height = height;
    }

    public override double Area()
    {
        return Width + Height;
    }
}

public class Square : Rectangle
{
    public Square(double side) : base(side, side)
    {
    }
}
