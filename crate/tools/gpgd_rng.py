"""Reference port of the Rust `RngStream` (SplitMix64 streams)."""

import math

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


class RngStream:
    def __init__(self, seed, stream_id):
        self.seed = seed
        self.stream_id = stream_id
        self.state = mix64(seed ^ mix64((stream_id + GAMMA) & MASK))
        self.spare = None

    def substream(self, index):
        return RngStream(self.seed, mix64(self.stream_id ^ mix64((index + 1) & MASK)))

    def next_u64(self):
        self.state = (self.state + GAMMA) & MASK
        return mix64(self.state)

    def next_f64(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_below(self, n):
        zone = MASK - ((MASK % n) + 1) % n
        while True:
            x = self.next_u64()
            if x <= zone:
                return x % n

    def normal(self):
        if self.spare is not None:
            v, self.spare = self.spare, None
            return v
        u1 = 1.0 - self.next_f64()
        u2 = self.next_f64()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self.spare = r * math.sin(theta)
        return r * math.cos(theta)


if __name__ == "__main__":
    rng = RngStream(0, 0)
    print([hex(rng.next_u64()) for _ in range(3)])
    rng = RngStream(7, 3)
    print([rng.normal() for _ in range(3)])
