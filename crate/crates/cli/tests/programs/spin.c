int main()
    //@ requires true;
    //@ ensures true;
{
    int x = 0;
    while (true)
        //@ invariant true;
    {
        x = 1 - x;
    }
    return x;
}
