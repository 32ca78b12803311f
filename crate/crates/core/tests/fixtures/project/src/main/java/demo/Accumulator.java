package demo;

public class Accumulator {

    public int sumPrefix(int[] values, int limit) {
        int sum = 0;
        for (int i = 0; i < limit && i < values.length; i++) {
            sum += values[i];
        }
        return sum;
    }

    public void emitDoubled(double[] values, Sink sink) {
        if (sink != null && values != null) {
            for (int i = 0; i < values.length; i++) {
                sink.accept(values[i] * 2);
            }
        }
    }

    public interface Sink {
        void accept(double v);
    }
}
