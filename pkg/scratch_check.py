import numpy as np
import undulate as U
from undulate.solver3d import rhs
from undulate.energy import displacement_to_state
from undulate._ops import trapezoid_weights

rng = np.random.default_rng(1)
p = U.Parameters(eps=0.3, tau=2.0, c=np.sqrt(5), g=0.25, a=2 / 3, b=2 / 3)
grid = U.Grid3D.from_parameters(p, 16, 16, 15)

# 1. uniform state: variational rhs exactly zero
s0 = U.uniform_state(p, grid)
dn, dpsi = rhs(s0, p, grid, "variational")
print("uniform rhs max:", np.abs(dn).max(), np.abs(dpsi).max())

# 2. FD directional-derivative check at a perturbed state:
#    dE/dt along (delta_n tangent curve, delta_psi) vs the mobility-weighted rhs
s = U.perturbed_state(p, grid, 0.1, seed=3)
dn, dpsi = rhs(s, p, grid, "variational")
GN, GP = 0.5, 1.0 / (p.c * p.eps) ** 2
mu = grid.hx * grid.hy
wz = trapezoid_weights(grid.nzt, grid.hz)
W = mu * wz[None, None, :]  # node quadrature weights

for trial in range(3):
    delta_n = rng.standard_normal(s.n.shape)
    delta_n[:, :, 0, :] = 0
    delta_n[:, :, -1, :] = 0
    delta_psi = (rng.standard_normal(s.psi.shape) + 1j * rng.standard_normal(s.psi.shape))
    delta_psi[:, :, 0] = 0
    delta_psi[:, :, -1] = 0

    def state_at(t):
        n = s.n + t * delta_n
        n = n / np.linalg.norm(n, axis=-1, keepdims=True)
        return U.Field3D(psi=s.psi + t * delta_psi, n=n)

    t = 1e-5
    fd = (U.total_energy(state_at(t), p, grid).total
          - U.total_energy(state_at(-t), p, grid).total) / (2 * t)
    # tangential projection of delta_n (normalize-curve derivative)
    ndot = (s.n * delta_n).sum(axis=-1, keepdims=True)
    pi_dn = delta_n - ndot * s.n
    analytic = -(np.sum(W[..., None] * dn / GN * pi_dn)
                 + 2.0 * np.sum(W * np.real(np.conj(dpsi / GP) * delta_psi)))
    print("FD trial", trial, "fd:", fd, "analytic:", analytic,
          "rel err:", abs(fd - analytic) / abs(fd))

# 3. apply_L identities
u = rng.standard_normal(grid.shape() + (3,))
u[:, :, 0, :] = 0
u[:, :, -1, :] = 0
v = rng.standard_normal(grid.shape() + (3,))
v[:, :, 0, :] = 0
v[:, :, -1, :] = 0
Lu = U.apply_L(u, p.tau, p, grid)
Lv = U.apply_L(v, p.tau, p, grid)
ip = lambda f, g: np.sum(W[..., None] * f * g)
print("self-adjoint:", abs(ip(Lu, v) - ip(u, Lv)) / abs(ip(Lu, v)))
print("<Lu,u> vs Q(u):", ip(Lu, u), U.second_variation(u, p.tau, p, grid),
      abs(ip(Lu, u) - U.second_variation(u, p.tau, p, grid)) / abs(ip(Lu, u)))

# 4. quadratic expansion: F(tu) - F(0) = t^2 Q(u) + O(t^3)
su = 0.05 * u
rep = U.quadratic_expansion_check(su, p, grid)
print("quadratic fit:", rep.fitted, rep.target, rep.rel_error)

# 5. eigen-relation residual ratio (criterion 3 core)
mode = U.ModeIndex(1, 2, 1)
tau_c = U.critical_field(mode, p)
for nz in (15, 31, 63):
    g2 = U.Grid3D.from_parameters(p, 16, 16, nz)
    ue = U.mode_displacement(mode, 0.0, p, g2, coeff=0.5)
    res = U.apply_L(ue, tau_c, p, g2)
    print("nz", nz, "residual:", np.abs(res).max())
