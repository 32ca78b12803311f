package org.example.perf;

import java.util.HashMap;
import java.util.Map;

public class Buffers {

    public int[] histogram(int[] data, int buckets) {
        int[] counts = new int[buckets];
        double scale = buckets / 256.0;
        for (int v : data) {
            counts[(int) (v * scale)]++;
        }
        return counts;
    }

    public Map<String, Integer> index(String[] keys) {
        Map<String, Integer> m = new HashMap<>(keys.length);
        for (int i = 0; i < keys.length; i++) {
            m.put(keys[i], i);
        }
        return m;
    }
}
