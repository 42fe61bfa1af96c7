"""Print the singlet correlation table E(theta) next to -cos(theta).

    python scripts/epr_table.py [n_angles]
"""

import math
import sys

from layerfield import epr
from layerfield.multilayer import layer_count


def main(n: int = 8):
    m = epr.singlet()
    print(f"singlet: {layer_count(m)} layers, <psi|psi> = {m.norm() ** 2:.15g}")
    print(f"{'theta':>8} {'E':>20} {'-cos':>20} {'P(++)':>8} {'P(+-)':>8} {'P(-+)':>8} {'P(--)':>8}")
    for row in epr.epr_table([k * math.pi / n for k in range(n + 1)], m):
        print(f"{row.theta:8.4f} {row.E:20.16f} {-math.cos(row.theta):20.16f} "
              f"{row.p_pp:8.5f} {row.p_pm:8.5f} {row.p_mp:8.5f} {row.p_mm:8.5f}")
    zero = epr.epr_table([0.0], m)[0]
    print("layers left after projecting both spins along z:", [n for n in zero.post_layers if n])


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 8)
