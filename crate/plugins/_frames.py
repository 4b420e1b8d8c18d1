"""Frame helpers shared by the bundled plugins."""

import struct
import sys

MAGIC = b"GPDN"
VERSION = 1


def _read_exact(stream, n):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def requests():
    """Yields (noise_level, values) for every request on stdin."""
    stdin = sys.stdin.buffer
    while True:
        head = _read_exact(stdin, 17)
        if head is None:
            return
        if head[:4] != MAGIC or head[4] != VERSION:
            sys.stderr.write("bad request header\n")
            sys.exit(2)
        n = struct.unpack_from("<I", head, 5)[0]
        noise = struct.unpack_from("<d", head, 9)[0]
        payload = _read_exact(stdin, 8 * n)
        if payload is None:
            return
        yield noise, list(struct.unpack("<%dd" % n, payload))


def respond(values):
    out = sys.stdout.buffer
    out.write(struct.pack("<I", len(values)))
    out.write(struct.pack("<%dd" % len(values), *values))
    out.flush()
