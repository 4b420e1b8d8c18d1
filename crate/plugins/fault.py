"""Misbehaving plugin for bridge tests.

Usage: fault.py MODE [AFTER]
MODE is one of exit, garbage, nan, hang. The first AFTER requests (default
0) are echoed normally before the fault triggers.
"""

import struct
import sys
import time

from _frames import requests, respond


def main():
    mode = sys.argv[1]
    after = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    for count, (_noise, x) in enumerate(requests()):
        if count < after:
            respond(x)
            continue
        if mode == "exit":
            sys.exit(3)
        if mode == "garbage":
            # header announces one value more than the request carried
            out = sys.stdout.buffer
            out.write(struct.pack("<I", len(x) + 1))
            out.write(b"\x00" * (8 * (len(x) + 1)))
            out.flush()
        elif mode == "nan":
            respond([float("nan")] + x[1:])
        elif mode == "hang":
            time.sleep(3600)
        else:
            sys.stderr.write("unknown mode %s\n" % mode)
            sys.exit(2)


main()
