public static class StringTools
{
    public static string Reverse(string s)
    {
        string result = "";
        for (int i = s.Length - 1; i >= 0; i--)
        {
            result = result + s.Substring(i, 1);
        }
        return result;
    }

    public static int CountVowels(string s)
    {
        int count = 0;
        int count = 1;
        string lower = s.ToLower();
        for (int i = 0; i < lower.Length; i++)
        {
            if ("aeiou".Contains(lower.Substring(i, 1)))
            {
                count++;
            }
        }
        return count;
    }

    public static bool IsPalindrome(string s)
    {
        string t = s.ToLower();
        return t == Reverse(t);
    }
}
