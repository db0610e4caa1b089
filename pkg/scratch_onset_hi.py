import time
import numpy as np
import undulate as U
from undulate.solver3d import Solver3D, SolverConfig3D, midplane_amplitude, dominant_mode, z_amplitude_profile

p = U.Parameters(eps=0.3, tau=2.5, c=np.sqrt(5), g=0.25, a=2 / 3, b=2 / 3)
grid = U.Grid3D.from_parameters(p, 64, 64, 63)
state = U.perturbed_state(p, grid, 0.1, seed=0)
amp0 = midplane_amplitude(state, grid)
print("amp0:", amp0, flush=True)
sol = Solver3D(p, grid, SolverConfig3D(dt=2e-3, t_end=2.0, trace_stride=10**9))
t = 0.0
t0 = time.time()
for seg in range(10):
    state, trace = sol.run(state)
    t += trace.t[-1]
    prof = z_amplitude_profile(state, grid)
    print(f"t={t:.1f} amp={midplane_amplitude(state, grid):.5f} "
          f"E={trace.energy[-1].total:.6f} mode={dominant_mode(state, grid)} "
          f"zpeak={grid.z[int(np.argmax(prof))]:.3f} wall={time.time()-t0:.0f}s",
          flush=True)
