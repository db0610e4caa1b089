import time
import numpy as np
import undulate as U
from undulate.solver2d import Solver2D, SolverConfig2D, perturbed_state2d, classify_pattern, masses

p = U.Parameters(eps=0.01, delta=1.5)

# stationarity of (e3, 0) modulo projection
N = 64
s0 = U.Field2D(phi=np.zeros((N, N)), n=np.zeros((N, N, 3)))
s0.n[..., 2] = 1.0
sol = Solver2D(p, N, SolverConfig2D(dt=1e-4))
s1 = sol.step(s0)
print("uniform-2d dev:", np.abs(s1.n - s0.n).max(), np.abs(s1.phi).max())

# energy decrease at dt = 1e-4 (spec example) on N=64
state = perturbed_state2d(p, N, 0.1, seed=0)
E = [U.planar_energy(state, p).total]
for _ in range(200):
    state = sol.step(state)
    E.append(U.planar_energy(state, p).total)
mono = all(E[i + 1] <= E[i] + 1e-10 * (1 + abs(E[i])) for i in range(len(E) - 1))
print("2d monotone:", mono, "E0:", E[0], "E200:", E[-1])

# classification anchors
print("classify square:", classify_pattern(U.square_limit_field(128)))
print("classify stripe:", classify_pattern(U.stripe_limit_field(128)))

# timing at N=256
state = perturbed_state2d(p, 256, 0.1, seed=0)
sol = Solver2D(p, 256, SolverConfig2D(dt=2e-4))
t0 = time.time()
from undulate.energy import planar_energy
for _ in range(50):
    cand, e = sol._step_energy(state, 2e-4)
    e2 = planar_energy(cand, p)
    state = cand
print("256 step+energy ms:", (time.time() - t0) / 50 * 1e3)
