package demo;

public class Text {

    public String join(String[] parts) {
        StringBuilder sb = new StringBuilder();
        appendAll(sb, parts);
        return sb.toString();
    }

    static void appendAll(StringBuilder out, String[] parts) {
        for (String p : parts) {
            out.append(p);
        }
    }
}
