"""Shared discrete operators: spectral derivatives, z-quadrature, tridiagonal solves.

Conventions used throughout the package:

* Periodic directions (x, y) are the first two array axes; FFTs act on
  ``axes=(0, 1)``.  Derivative multipliers have the Nyquist mode zeroed so
  that D is exactly skew-adjoint and commutes with lattice reflections; the
  implicit solvers use the same symbol, which keeps the variational right-hand
  sides exact discrete gradients of the discrete energies.
* The bounded direction z is the third axis with nodes
  ``z_k = linspace(-pi/2, pi/2, Nz + 2)`` (indices 0 and Nz+1 are boundary).
  Second derivatives are 3-point stencils on interior nodes; first-derivative
  quadratic terms in the energies live on the staggered half-nodes.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as spfft


def wavenumbers(n: int, length_factor: float) -> np.ndarray:
    """Signed integer FFT modes times ``length_factor``, Nyquist zeroed.

    For a periodic coordinate of length 2*pi/length_factor sampled at n points
    the spectral derivative multiplier is ``1j * wavenumbers(n, length_factor)``.
    """
    k = np.fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., -n/2, ..., -1
    if n % 2 == 0:
        k[n // 2] = 0.0
    return length_factor * k


def rwavenumbers(n: int, length_factor: float) -> np.ndarray:
    """Like :func:`wavenumbers` but for the last rfft axis (n//2+1 entries)."""
    k = np.fft.rfftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[-1] = 0.0
    return length_factor * k


class LateralSpectral:
    """Spectral x,y-derivative toolbox for fields with axes (x, y, ...)."""

    def __init__(self, nx: int, ny: int, a: float, b: float, workers: int = 1):
        self.nx, self.ny = nx, ny
        self.workers = workers
        kx = wavenumbers(nx, a)
        ky = wavenumbers(ny, b)
        kyr = rwavenumbers(ny, b)
        # shapes broadcast against (nx, ny, ...) and (nx, ny//2+1, ...)
        self.ikx = (1j * kx)[:, None]
        self.iky = (1j * ky)[None, :]
        self.ikxr = (1j * kx)[:, None]
        self.ikyr = (1j * kyr)[None, :]
        self.k2 = (kx**2)[:, None] + (ky**2)[None, :]
        self.k2r = (kx**2)[:, None] + (kyr**2)[None, :]
        # Parseval column weights for rfft2 (doubled except self-conjugate cols)
        w = np.full(ny // 2 + 1, 2.0)
        w[0] = 1.0
        if ny % 2 == 0:
            w[-1] = 1.0
        self.rcol_weight = w[None, :]

    def _pad(self, mult: np.ndarray, ndim: int) -> np.ndarray:
        return mult.reshape(mult.shape + (1,) * (ndim - 2))

    def fft(self, f: np.ndarray) -> np.ndarray:
        return spfft.fft2(f, axes=(0, 1), workers=self.workers)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return spfft.ifft2(fh, axes=(0, 1), workers=self.workers)

    def rfft(self, f: np.ndarray) -> np.ndarray:
        return spfft.rfft2(f, axes=(0, 1), workers=self.workers)

    def irfft(self, fh: np.ndarray) -> np.ndarray:
        return spfft.irfft2(fh, s=(self.nx, self.ny), axes=(0, 1), workers=self.workers)

    def dx(self, f: np.ndarray) -> np.ndarray:
        """Spectral d/dx of a complex field (complex in, complex out)."""
        return self.ifft(self._pad(self.ikx, f.ndim) * self.fft(f))

    def dy(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(self._pad(self.iky, f.ndim) * self.fft(f))

    def grad_real(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(d/dx, d/dy) of a real field via one rfft."""
        fh = self.rfft(f)
        gx = self.irfft(self._pad(self.ikxr, fh.ndim) * fh)
        gy = self.irfft(self._pad(self.ikyr, fh.ndim) * fh)
        return gx, gy

    def lap_real(self, f: np.ndarray) -> np.ndarray:
        fh = self.rfft(f)
        return self.irfft(-self._pad(self.k2r, fh.ndim) * fh)

    def lap_complex(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(-self._pad(self.k2, f.ndim) * self.fft(f))

    def grad_sq_sum_real(self, f: np.ndarray, zweights: np.ndarray,
                         fh: np.ndarray | None = None) -> float:
        """sum_xy sum_z w_z (|df/dx|^2 + |df/dy|^2) for real f(x,y,z[,c]).

        Parseval form; exact (to roundoff) match of the real-space sum.  A
        precomputed rfft of f may be passed to avoid the transform.
        """
        if fh is None:
            fh = self.rfft(f)
        mag = (fh.real**2 + fh.imag**2) * self._pad(self.k2r * self.rcol_weight, fh.ndim)
        axes = tuple(i for i in range(fh.ndim) if i != 2)
        return float(np.sum(mag.sum(axis=axes) * zweights) / (self.nx * self.ny))


def trapezoid_weights(nzt: int, hz: float) -> np.ndarray:
    """Trapezoid-in-z quadrature weights over nzt nodes (endpoints halved)."""
    w = np.full(nzt, hz)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def dzz_interior(f: np.ndarray, hz: float) -> np.ndarray:
    """3-point second difference along axis 2 at interior nodes.

    Input has nzt z-levels; output has nzt-2 (interior only).
    """
    return (f[:, :, 2:] - 2.0 * f[:, :, 1:-1] + f[:, :, :-2]) / hz**2


def dz_centered_interior(f: np.ndarray, hz: float) -> np.ndarray:
    """Centered first difference along axis 2 at interior nodes."""
    return (f[:, :, 2:] - f[:, :, :-2]) / (2.0 * hz)


def solve_dirichlet_helmholtz(diag: np.ndarray, off: float, rhs: np.ndarray) -> np.ndarray:
    """Fast direct solve of the same systems as :func:`solve_tridiag_const`.

    The constant-coefficient tridiagonal matrix (diag*I + off*(lower+upper))
    with homogeneous Dirichlet ends is diagonalized by the type-I discrete
    sine transform: eigenvalue diag + 2*off*cos(pi*l/(nz+1)) on the l-th sine
    mode.  Exact same solution as the Thomas sweep up to roundoff.
    """
    nz = rhs.shape[-1]
    lam = np.asarray(diag)[..., None] + 2.0 * off * np.cos(
        np.pi * np.arange(1, nz + 1) / (nz + 1))
    if np.iscomplexobj(rhs):
        spec = (spfft.dst(rhs.real, type=1, axis=-1)
                + 1j * spfft.dst(rhs.imag, type=1, axis=-1))
        spec /= lam
        return (spfft.idst(spec.real, type=1, axis=-1)
                + 1j * spfft.idst(spec.imag, type=1, axis=-1))
    spec = spfft.dst(rhs, type=1, axis=-1)
    spec /= lam
    return spfft.idst(spec, type=1, axis=-1)


def solve_tridiag_const(diag: np.ndarray, off: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (diag*I + off*(lower+upper)) x = rhs along the last axis.

    ``diag`` broadcasts over the batch axes of ``rhs`` and is constant along
    the solve axis; ``off`` is a scalar (homogeneous Dirichlet ends assumed,
    i.e. no coupling beyond the array).  Thomas algorithm, vectorized over the
    batch.
    """
    nz = rhs.shape[-1]
    diag = np.broadcast_to(np.asarray(diag), rhs.shape[:-1])
    c = np.empty(rhs.shape[:-1] + (nz,), dtype=rhs.dtype)
    y = np.empty_like(c)
    denom = diag.astype(rhs.dtype, copy=True)
    c[..., 0] = off / denom
    y[..., 0] = rhs[..., 0] / denom
    for k in range(1, nz):
        denom = diag - off * c[..., k - 1]
        c[..., k] = off / denom
        y[..., k] = (rhs[..., k] - off * y[..., k - 1]) / denom
    x = np.empty_like(y)
    x[..., -1] = y[..., -1]
    for k in range(nz - 2, -1, -1):
        x[..., k] = y[..., k] - c[..., k] * x[..., k + 1]
    return x
