"""Asymptotic targets next to their exact finite-aspect-ratio counterparts.

The Monte Carlo checks compare against small-aspect limits; at the desk-scale
sizes used (aspect ratio 0.01) the proportional-regime formulas evaluated at
the actual ratio give the values the simulation converges to.

    python scripts/finite_size_predictions.py [--beta 0.01]
"""

from __future__ import annotations

import argparse
import math

from spectral_shrink.spike_maps import Framework, cosine2, eigmap, signal_plus_noise_cosines, signal_plus_noise_normalized_limit


def spn_finite(tau: float, beta: float) -> tuple[float, float, float]:
    """Normalized eigenvalue and (left, right) squared cosines at finite beta."""
    t2 = tau * tau * math.sqrt(beta)
    if tau <= 1:
        return 2 + math.sqrt(beta), 0.0, 0.0
    lam = (1 + t2) * (beta + t2) / t2
    left = 1 - beta * (1 + t2) / (t2 * (t2 + beta))
    right = 1 - (beta + t2) / (t2 * (t2 + 1))
    return (lam - 1) / math.sqrt(beta), left, right


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.01)
    b = ap.parse_args().beta
    print(f"signal-plus-noise, beta={b:g}")
    print("  tau    limit(eig, left, right)          finite(eig, left, right)")
    for tau in (0.5, math.sqrt(2), 2.0, 3.0):
        lim = (float(signal_plus_noise_normalized_limit(tau)), *signal_plus_noise_cosines(tau))
        fin = spn_finite(tau, b)
        print(f"  {tau:5.3f}  " + ", ".join(f"{v:.4f}" for v in lim) + "        " + ", ".join(f"{v:.4f}" for v in fin))

    print(f"\nspiked covariance, gamma={b:g} (hat scale)")
    print("  lhat   limit(eig, cos2)     finite(eig, cos2)")
    dz, prop = Framework.dzero(), Framework.proportional(b)
    for lh in (0.5, 1.0, 1.5, 2.0, 3.0):
        ell = 1 + lh * math.sqrt(b)
        fin_eig = (float(eigmap(ell, prop)) - 1 - b) / math.sqrt(b)
        print(f"  {lh:4.1f}   {float(eigmap(lh, dz)):.4f}, {float(cosine2(lh, dz)):.4f}     "
              f"{fin_eig:.4f}, {float(cosine2(ell, prop)):.4f}")


if __name__ == "__main__":
    main()
