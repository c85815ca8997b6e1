public static class Calculator
{
    public static int Add(int a, int b)
    {
        return a + b;
    }

    public static int SafeDivide(int a, int b)
    {
        if (b == 0)
        {
            return 0;
        }
        return a / b;
    }

    public static int Factorial(int n)
    {
        result = 1;
        for (int i = 2; i <= n; i++)
        {
            result = result * i;
        }
        return result;
    }

    public static int Max(int a, int b, int c)
    {
        int m = a;
        if (b > m) m = b;
        if (c > m) m = c;
        return m;
    }
}
