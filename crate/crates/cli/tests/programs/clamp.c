int main(int a, int b)
    //@ requires -1000 <= a && a <= 1000 && 0 <= b && b <= 100;
    //@ ensures result <= b;
{
    int r = a;
    if (b < r) {
        r = b;
    }
    return r;
}
