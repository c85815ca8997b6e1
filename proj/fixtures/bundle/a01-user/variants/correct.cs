public class User
{
    public string Name;
    public int Age;

    public User(string name, int age)
    {
        Name = name;
        Age = age;
    }

    public bool IsAdult()
    {
        return Age >= 18;
    }

    public string Greet()
    {
        return "Hello, " + Name;
    }
}
