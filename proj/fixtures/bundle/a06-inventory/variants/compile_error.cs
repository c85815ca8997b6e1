public class Item
{
    public string Name;
    public int Quantity;
    public decimal Price;

    public Item(string name, int quantity, decimal price)
    {
        Name = name;
        Quantity = quantity;
        Price = price;
    }

    public decimal Total(
    {
        return Quantity * Price;
    }
}

public static class Inventory
{
    public static decimal Value(int q1, decimal p1, int q2, decimal p2)
    {
        Item a = new Item("a", q1, p1);
        Item b = new Item("b", q2, p2);
        return a.Total() + b.Totl();
    }

    public static int Restock(int quantity, int minimum)
    {
        if (quantity < 0)
        {
            throw new ArgumentException("Quantity cannot be negative");
        }
        if (quantity >= minimum)
        {
            return 0;
        }
        return minimum - quantity;
    }

    public static string Label(string name, int quantity)
    {
        return $"{name} x{quantity}";
    }
}
