int main()
    //@ requires true;
    //@ ensures true;
{
    int x = 1;
    while (0 < x)
    {
        x = x - 1;
    }
    return x;
}
