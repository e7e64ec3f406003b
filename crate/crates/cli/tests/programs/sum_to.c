int main(int n)
    //@ requires 0 <= n && n <= 1000;
    //@ ensures 0 <= result;
{
    int i = 0;
    int s = 0;
    while (i < n)
        //@ invariant 0 <= i && i <= n && 0 <= s && s <= i * 1000;
    {
        i = i + 1;
        s = s + i;
    }
    return s;
}
