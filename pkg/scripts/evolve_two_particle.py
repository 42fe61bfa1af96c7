"""Two packets with softened Coulomb repulsion: Crank-Nicolson vs the dense propagator.

    python scripts/evolve_two_particle.py [nx] [steps]
"""

import sys
import time

from layerfield.lattice import Lattice3D
from layerfield.multilayer import layer_count, ml_inner
from layerfield.operators import evolve, evolve_steps, expectation
from layerfield.suites import two_particle_run


def main(nx: int = 8, steps: int = 100, dt: float = 0.01):
    m, h = two_particle_run(Lattice3D((nx, 1, 1)))
    n0, e0 = m.norm(), expectation(h, m).real
    t0 = time.perf_counter()
    drift_n = drift_e = 0.0
    state = m
    for k, state in enumerate(evolve_steps(m, h, dt, steps), start=1):
        drift_n = max(drift_n, abs(state.norm() - n0))
        drift_e = max(drift_e, abs(expectation(h, state).real - e0))
        if k % max(1, steps // 5) == 0:
            print(f"t={k * dt:6.3f}  norm={state.norm():.16f}  <H>={expectation(h, state).real:.16f}  "
                  f"layers={layer_count(state)}")
    cn_time = time.perf_counter() - t0
    exact = evolve(m, h, steps * dt, dt, scheme="dense_expm")
    fid = abs(ml_inner(state, exact)) ** 2 / (ml_inner(state, state).real * ml_inner(exact, exact).real)
    print(f"max norm drift {drift_n:.2e}, max energy drift {drift_e:.2e}, "
          f"1 - fidelity vs dense expm {1 - fid:.2e}, CN time {cn_time:.2f}s")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    main(*args)
