public class User
{
    public string Name
    public int Age;
    public User(string name)
    {
        Name = name
    }
}
