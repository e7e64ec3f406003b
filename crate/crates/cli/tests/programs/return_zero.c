int main()
    //@ requires true;
    //@ ensures result == 0;
{
    return 0;
}
