package org.example.perf;

import java.util.Map;

public class Strings {

    public String render(Map<String, Integer> counts, String sep) {
        StringBuilder sb = new StringBuilder();
        for (Map.Entry<String, Integer> e : counts.entrySet()) {
            sb.append(e.getKey()).append(sep).append(e.getValue());
        }
        return sb.toString();
    }

    public int longest(String[] lines) {
        int best = 0;
        StringBuilder scratch = new StringBuilder();
        for (String line : lines) {
            scratch.setLength(0);
            scratch.append(line.trim());
            best = Math.max(best, scratch.length());
        }
        return best;
    }

    public String banner(String title) {
        String trimmed = title.trim();
        return trimmed + "\n" + "=".repeat(trimmed.length());
    }
}
