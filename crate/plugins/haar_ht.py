"""Haar-domain hard thresholding: keep the k largest coefficients.

Usage: haar_ht.py K
Mirrors the builtin projection, including lowest-index tie breaking.
"""

import math
import sys

from _frames import requests, respond

R = 1.0 / math.sqrt(2.0)


def forward(x):
    out = list(x)
    length = len(out)
    while length > 1:
        half = length // 2
        scratch = [0.0] * length
        for i in range(half):
            a, b = out[2 * i], out[2 * i + 1]
            scratch[i] = (a + b) * R
            scratch[half + i] = (a - b) * R
        out[:length] = scratch
        length = half
    return out


def inverse(c):
    out = list(c)
    length = 2
    while length <= len(out):
        half = length // 2
        scratch = [0.0] * length
        for i in range(half):
            a, d = out[i], out[half + i]
            scratch[2 * i] = (a + d) * R
            scratch[2 * i + 1] = (a - d) * R
        out[:length] = scratch
        length *= 2
    return out


def keep_largest(c, k):
    order = sorted(range(len(c)), key=lambda i: (-abs(c[i]), i))
    kept = set(order[:k])
    return [v if i in kept else 0.0 for i, v in enumerate(c)]


def main():
    k = int(sys.argv[1])
    for _noise, x in requests():
        n = len(x)
        if n & (n - 1) or n == 0:
            sys.stderr.write("length %d is not a power of two\n" % n)
            sys.exit(2)
        respond(inverse(keep_largest(forward(x), min(k, n))))


main()
