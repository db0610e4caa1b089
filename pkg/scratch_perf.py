import time
import numpy as np
import undulate as U
from undulate.solver3d import Solver3D, SolverConfig3D

p = U.Parameters(eps=0.3, tau=2.5, c=np.sqrt(5), g=0.25, a=2 / 3, b=2 / 3)
grid = U.Grid3D.from_parameters(p, 64, 64, 63)
state = U.perturbed_state(p, grid, 0.1, seed=0)

for workers in (1, 2, 4):
    sol = Solver3D(p, grid, SolverConfig3D(dt=1e-3, workers=workers))
    prepared = sol._variational(state)
    s = state
    t0 = time.time()
    nrep = 10
    for _ in range(nrep):
        c = sol._advance(s, 1e-3, prepared)
        prepared = sol._variational(c)
        s = c
    dt_step = (time.time() - t0) / nrep
    print(f"workers={workers}: {dt_step*1e3:.1f} ms/step -> "
          f"{dt_step*15000/60:.1f} min per 15k steps")
print("E after 10 steps:", prepared[2].total)
