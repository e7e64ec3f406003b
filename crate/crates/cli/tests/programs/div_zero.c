int main()
    //@ requires true;
    //@ ensures true;
{
    int d = 0;
    return 7 / d;
}
