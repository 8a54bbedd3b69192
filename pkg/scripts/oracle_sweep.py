"""Compare closed-form shrinkers with brute-force minimization of the 2x2 loss.

Prints the worst eta and loss discrepancy per (framework, norm).

    python scripts/oracle_sweep.py [--points 200]
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from spectral_shrink.shrinkage import Flavor, Norm, optimal_eta_formal, optimal_loss_formal, two_by_two_loss
from spectral_shrink.spike_maps import Framework, FrameworkKind, cosine2

LD = np.longdouble


def golden(f, a, b, iters=160):
    a = np.asarray(a, dtype=LD).copy()
    b = np.asarray(b, dtype=LD).copy()
    r = (np.sqrt(LD(5)) - 1) / 2
    for _ in range(iters):
        c, d = b - r * (b - a), a + r * (b - a)
        left = f(c) < f(d)
        b, a = np.where(left, d, b), np.where(left, a, c)
    return (a + b) / 2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200)
    k = ap.parse_args().points
    cases = [
        ("dzero", Framework.dzero(), np.linspace(0.05, 10, k)),
        ("dinf", Framework.dinf(), np.linspace(0.01, 10, k)),
        ("wigner", Framework.wigner(), np.linspace(-10, 10, k)),
    ] + [(f"prop:{g:g}", Framework.proportional(g), np.linspace(1, 1 + 10 * math.sqrt(g), k)) for g in (0.25, 1.0, 4.0)]
    print(f"{'framework':10s} norm  max|eta err|  max|loss err|")
    for name, fw, grid in cases:
        prop = fw.kind is FrameworkKind.PROPORTIONAL
        flavor = Flavor.PROPORTIONAL_A if prop else Flavor.TILDE_A
        x = grid.astype(LD)
        c2 = np.asarray(cosine2(x, fw), dtype=LD)
        for norm in Norm:
            def loss(e):
                return two_by_two_loss(x, c2, e, norm, flavor)

            lo, hi = (np.zeros_like(x), 2 * x + 2) if prop else (-2 * np.abs(x) - 2, 2 * np.abs(x) + 2)
            eta = golden(loss, lo, hi)
            unique = ~((norm is Norm.O) & (np.asarray(cosine2(grid, fw)) == 0))
            de = np.abs(eta.astype(float) - optimal_eta_formal(grid, norm, fw))[unique]
            dl = np.abs(loss(eta).astype(float) - optimal_loss_formal(grid, norm, fw))
            print(f"{name:10s} {norm.value:4s}  {de.max():.2e}      {dl.max():.2e}")


if __name__ == "__main__":
    main()
