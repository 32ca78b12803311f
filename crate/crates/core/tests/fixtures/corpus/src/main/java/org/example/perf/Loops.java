package org.example.perf;

import java.util.ArrayList;
import java.util.List;

/** Loop shapes. */
public class Loops {

    public int firstNegative(int[] xs, int limit) {
        int i = 0;
        while (i < limit && xs[i] >= 0) {
            i++;
        }
        return i;
    }

    public long sum(long[] xs) {
        long total = 0L;
        for (int i = 0; i < xs.length; i++) {
            total += xs[i];
        }
        return total;
    }

    public List<String> upper(List<String> words) {
        List<String> out = new ArrayList<>(words.size());
        for (int i = 0; i < words.size(); i++) {
            out.add(words.get(i).toUpperCase());
        }
        return out;
    }

    public boolean anyBlank(List<String> words) {
        for (String w : words) {
            if (w != null && w.isBlank()) {
                return true;
            }
        }
        return false;
    }
}
