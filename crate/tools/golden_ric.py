"""Independent enumeration of the restricted isometry constant of the seeded
Gaussian operator used by the CLI golden test (m = 6, N = 8, k = 1)."""

import itertools
import json
import sys

import numpy as np
from scipy.optimize import minimize_scalar

from gpgd_rng import RngStream


def gaussian(m, n, seed):
    rng = RngStream(seed, 0)
    scale = 1.0 / np.sqrt(m)
    return np.array([rng.normal() * scale for _ in range(m * n)]).reshape(m, n)


def delta(a, mu, s):
    n = a.shape[1]
    b = np.eye(n) - mu * a.T @ a
    return max(np.linalg.norm(b[:, list(sup)], 2) for sup in itertools.combinations(range(n), s))


def main(m=6, n=8, k=1, seed=0):
    a = gaussian(m, n, seed)
    s = 2 * k
    g = a.T @ a
    lo, hi = np.inf, -np.inf
    for sup in itertools.combinations(range(n), s):
        ev = np.linalg.eigvalsh(g[np.ix_(sup, sup)])
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    top = np.linalg.eigvalsh(g)[-1]
    grid = np.linspace(0, 4 / top, 4001)[1:]
    start = grid[np.argmin([delta(a, mu, s) for mu in grid])]
    step = grid[1] - grid[0]
    best = minimize_scalar(lambda mu: delta(a, mu, s), bounds=(start - step, start + step), method="bounded",
                           options={"xatol": 1e-12})
    out = {
        "m": m, "N": n, "k": k, "seed": seed,
        "delta_at_mu_1": delta(a, 1.0, s),
        "closed_form_mu": 2.0 / (lo + hi),
        "optimal_mu": best.x,
        "optimal_delta": best.fun,
    }
    json.dump(out, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
