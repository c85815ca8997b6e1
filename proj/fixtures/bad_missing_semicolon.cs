using System;

public class User
{
    public string name
    public int Age;
}
