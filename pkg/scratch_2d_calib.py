import sys
import time
import numpy as np
import undulate as U
from undulate.solver2d import Solver2D, SolverConfig2D, perturbed_state2d, classify_pattern, masses

eps = float(sys.argv[1]) if len(sys.argv) > 1 else 0.01
dt = float(sys.argv[2]) if len(sys.argv) > 2 else 1e-3
seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0
N = 256
p = U.Parameters(eps=eps, delta=1.5)
state = perturbed_state2d(p, N, 0.1, seed=seed)
sol = Solver2D(p, N, SolverConfig2D(dt=dt, t_end=4.0, trace_stride=100, stop_tol=1e-12))
t = 0.0
t0 = time.time()
print(f"eps={eps} dt={dt} seed={seed} E0={U.planar_energy(state, p).total:.3f}", flush=True)
for seg in range(20):
    state, trace = sol.run(state)
    t += trace.t[-1]
    kind, conf = classify_pattern(state)
    m1, m2, n3sq = masses(state)
    print(f"t={t:.1f} E={trace.energy[-1].total:.4f} {kind} conf={conf:.2f} "
          f"m=({m1:.1e},{m2:.1e}) n3sq={n3sq:.2e} wall={time.time()-t0:.0f}s", flush=True)
