package org.example.perf;

import java.io.IOException;
import java.nio.file.Files;
import java.nio.file.Path;
import java.util.List;
import java.util.logging.Logger;

public class Io {
    private static final Logger LOG = Logger.getLogger("io");

    public void save(Path target, List<String> lines) throws IOException {
        Files.write(target, lines);
        LOG.info("saved " + lines.size());
    }
}
