package demo;

public class Ticker {
    private int count;

    public int next() {
        return ++count;
    }

    public int twice() {
        int v = next();
        return v + v;
    }
}
