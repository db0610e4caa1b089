import time
import numpy as np
import undulate as U
from undulate.solver3d import Solver3D, SolverConfig3D
from undulate.energy import displacement_to_state
from undulate.core import impose_boundary

p0 = U.Parameters(eps=0.3, tau=2.0, c=np.sqrt(5), g=0.25, a=2 / 3, b=2 / 3)
grid = U.Grid3D.from_parameters(p0, 24, 24, 31)

# fixed point at the uniform state
cfg = SolverConfig3D(dt=1e-3)
sol = Solver3D(p0, grid, cfg)
s0 = U.uniform_state(p0, grid)
s1 = sol.step(s0)
print("fixed point dev:", np.abs(s1.psi - s0.psi).max(), np.abs(s1.n - s0.n).max())

# |n| = 1 after a step from a perturbed state
sp = U.perturbed_state(p0, grid, 0.1, seed=0)
s2 = sol.step(sp)
print("unit norm dev:", np.abs(np.linalg.norm(s2.n, axis=-1) - 1).max())

# linear rate: seed eigenmode of (1,2,1), measure growth/decay vs lambda(tau)
mode = U.ModeIndex(1, 2, 1)
tau_c = U.critical_field(mode, p0)
print("tau_c(1,2,1):", tau_c)


def measure_rate(tau, t_end=0.8, dt=1e-3, amp=1e-4):
    p = p0.with_tau(tau)
    lam = U.eigenvalues(mode, tau, p)[0]
    g = grid
    u = U.mode_displacement(mode, 0.0, p, g, coeff=0.5 * amp)
    state = impose_boundary(displacement_to_state(u, p, g), p)
    solver = Solver3D(p, g, SolverConfig3D(dt=dt, t_end=t_end))
    prof = U.eigenfunction(mode, 0.0, p, g).profile
    theta = p.a * mode.m * g.x[:, None] + p.b * mode.n * g.y[None, :]
    wave = np.exp(-1j * theta)

    def amplitude(s):
        w1 = s.n[..., 0]
        coef = (wave[:, :, None] * w1).mean(axis=(0, 1))  # Fourier coefficient vs z
        return abs(coef @ prof) / (prof @ prof)

    ts, amps = [0.0], [amplitude(state)]
    t = 0.0
    nsteps = int(round(t_end / dt))
    for k in range(nsteps):
        state = solver.step(state)
        t += dt
        if (k + 1) % 50 == 0:
            ts.append(t)
            amps.append(amplitude(state))
    ts, amps = np.array(ts), np.array(amps)
    fit = np.polyfit(ts[2:], np.log(amps[2:]), 1)
    return -fit[0], lam


for tau in (1.5, 2.5):
    t0 = time.time()
    rate, lam = measure_rate(tau)
    print(f"tau={tau}: measured rate {rate:.6f} vs lambda {lam:.6f} "
          f"rel err {abs(rate - lam) / abs(lam):.4%}  ({time.time()-t0:.1f}s)")

# energy decrease on a short run
p = p0.with_tau(2.5)
solr = Solver3D(p, grid, SolverConfig3D(dt=1e-3, t_end=0.5, trace_stride=20))
final, trace = solr.run(U.perturbed_state(p, grid, 0.1, seed=0))
E = [e.total for e in trace.energy]
print("energies:", ["%.6f" % e for e in E])
print("monotone:", all(E[i + 1] <= E[i] + 1e-10 * (1 + abs(E[i])) for i in range(len(E) - 1)))
