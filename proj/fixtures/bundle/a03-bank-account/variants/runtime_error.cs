public class InsufficientFundsException : Exception
{
    public InsufficientFundsException(string message) : base(message)
    {
    }
}

public class BankAccount
{
    public decimal Balance { get; private set; }

    public BankAccount()
    {
        Balance = 0;
    }

    public void Deposit(decimal amount)
    {
        if (amount <= 0)
        {
            throw new ArgumentException("Amount must be positive");
        }
        Balance = Balance + amount;
    }

    public bool TryWithdraw(decimal amount)
    {
        if (amount > Balance)
        {
            return false;
        }
        Balance = Balance - amount;
        return true;
    }

    public static decimal AfterDeposits(decimal a, decimal b)
    {
        BankAccount acc = new BankAccount();
        acc.Deposit(a);
        acc.Deposit(b);
        return acc.Balance;
    }

    public static bool WithdrawTooMuch()
    {
        BankAccount acc = new BankAccount();
        acc.Deposit(0);
        return acc.TryWithdraw(25);
    }
}
