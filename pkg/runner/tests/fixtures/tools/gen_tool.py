"""Mock mesh generator: writes one integer per line, 1..size."""

import sys

size, out_path = int(sys.argv[1]), sys.argv[2]
with open(out_path, "w", encoding="utf-8") as fh:
    for i in range(1, size + 1):
        fh.write(f"{i}\n")
