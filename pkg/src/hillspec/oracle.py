"""Independent verification engines.

Everything here reaches the spectral objects from the resolvent side:
the quasiperiodic Green kernel assembled from fundamental solutions,
total projections T_n over circles around band pairs, the small-band
partial sum S_N over one large enclosing contour, and a dense Galerkin
eigensolve in the free exponential basis.  None of it shares arithmetic
with the band machinery beyond the propagator itself, so agreement
between the two routes is evidence, not tautology.

Sign conventions.  The kernel solves (l - lam) y = f with the fiber
boundary conditions y(1) = e^{it} y(0), y'(1) = e^{it} y'(0), where
l = -d^2/dx^2 + q.  Its x-derivative therefore drops by one across the
diagonal.  Projections carry the resolvent-calculus factor

    T_n(x, t) = -(1/2 pi i) integral over C(n) of (R_lam f_t)(x) dlam,

so that for the free potential T_n is exactly the two-term Fourier
projection of the fiber (the calibration the tests pin down).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .discriminant import characteristic_determinant, discriminant_batch
from .errors import MalformedConfig, QuadratureFailure, ResolventPole
from .expansion import _SliceTable, load_function
from .odecore import integrate_fundamental_batch
from .potential import Potential, load_potential
from .quadrature import boole_weights, cumulative_simpson_uniform
from .spectrum import determine_asymptotic_window, free_seed

_POLE_TOL = 1e-8


# -- Green kernel -------------------------------------------------------------

@dataclass
class GreenKernel:
    """Resolvent kernel of one fiber on the product grid [0,1]^2.

    values[i, j] = G(x_i, xi_j); integrating G against f over xi solves
    (l - lam) y = f with the e^{it}-quasiperiodic boundary conditions.
    """
    lam: complex
    t: complex
    grid: np.ndarray
    values: np.ndarray
    delta: complex

    def apply(self, f_values: np.ndarray) -> np.ndarray:
        w = boole_weights(self.grid.size)
        return self.values @ (w * np.asarray(f_values))


def _boundary_coefficients(monodromy: np.ndarray, theta: np.ndarray,
                           phi: np.ndarray, e: complex):
    """Rows a_A(xi), a_B(xi) of the quasiperiodicity correction.

    A particular solution with zero Cauchy data at 0 is corrected by
    A theta + B phi; solving the two boundary conditions for (A, B)
    gives linear functionals of f whose kernels are returned here.
    The 2x2 system's determinant is exactly Delta(lam, t).
    """
    M = monodromy
    btil = M[0, 0] * phi - M[0, 1] * theta      # theta(1) phi(xi) - phi(1) theta(xi)
    ctil = M[1, 0] * phi - M[1, 1] * theta      # theta'(1) phi(xi) - phi'(1) theta(xi)
    a_A = -((M[1, 1] - e) * btil - M[0, 1] * ctil)
    a_B = -(-M[1, 0] * btil + (M[0, 0] - e) * ctil)
    return a_A, a_B


def green_kernel(potential: Potential, lam: complex, t,
                 grid_size: int = 257, tol: float = 1e-10) -> GreenKernel:
    """Quasiperiodic Green kernel at one resolvent point (lam, t)."""
    potential = load_potential(potential)
    lam = complex(lam)
    t = complex(t)
    fsb = integrate_fundamental_batch(potential, np.array([lam]), tol=tol,
                                      grid_size=grid_size, want_deriv=False)
    th = fsb.theta[:, 0]
    ph = fsb.phi[:, 0]
    M = fsb.monodromy[:, :, 0]
    F = M[0, 0] + M[1, 1]
    delta = complex(characteristic_determinant(F, t))
    if abs(delta) < _POLE_TOL * (1.0 + abs(F)):
        raise ResolventPole(
            f"Delta(lam, t) = {delta:.3e} at lam={lam:.8g}, t={t:.8g}; "
            "the point is too close to the fiber spectrum")
    e = cmath.exp(1j * t)
    a_A, a_B = _boundary_coefficients(M, th, ph, e)
    G = (np.outer(th, a_A) + np.outer(ph, a_B)) / delta
    # Volterra part theta(x) phi(xi) - theta(xi) phi(x), active for xi < x
    G += np.tril(np.outer(th, ph) - np.outer(ph, th), k=-1)
    return GreenKernel(lam=lam, t=t, grid=fsb.grid, values=G, delta=delta)


def _resolvent_apply(potential: Potential, lams: np.ndarray, t: complex,
                     profile: np.ndarray, grid_size: int,
                     tol: float) -> np.ndarray:
    """(R_lam f_t)(x) for a batch of lam at fixed t; (grid, M) array.

    One propagation serves the whole batch; the Volterra part is a
    cumulative quadrature, the boundary part two inner products.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    fsb = integrate_fundamental_batch(potential, lams, tol=tol,
                                      grid_size=grid_size, want_deriv=False)
    M = fsb.monodromy
    F = M[0, 0] + M[1, 1]
    delta = characteristic_determinant(F, t)
    bad = np.abs(delta) < _POLE_TOL * (1.0 + np.abs(F))
    if np.any(bad):
        j = int(np.argmin(np.abs(delta)))
        raise ResolventPole(
            f"Delta = {delta[j]:.3e} at lam={lams[j]:.8g} on the contour; "
            "adjust the circle radius")
    e = cmath.exp(1j * complex(t))
    a_A, a_B = _boundary_coefficients(M, fsb.theta, fsb.phi, e)
    w = boole_weights(grid_size)
    wf = w * profile
    I_A = np.einsum("g,gm->m", wf, a_A) / delta
    I_B = np.einsum("g,gm->m", wf, a_B) / delta
    dx = 1.0 / (grid_size - 1)
    cum_phi = cumulative_simpson_uniform(
        np.moveaxis(fsb.phi * profile[:, None], 0, -1), dx)
    cum_theta = cumulative_simpson_uniform(
        np.moveaxis(fsb.theta * profile[:, None], 0, -1), dx)
    y = fsb.theta * I_A[None, :] + fsb.phi * I_B[None, :]
    y += fsb.theta * np.moveaxis(cum_phi, -1, 0)
    y -= fsb.phi * np.moveaxis(cum_theta, -1, 0)
    return y


# -- total projection over C(n) ------------------------------------------------

@dataclass
class TotalProjectionSample:
    """T_n(x, t): the bundle projection of the fiber, resolvent route."""
    n: int
    t: complex
    grid: np.ndarray
    profile: np.ndarray
    center: complex
    radius: float
    nodes: int


def _circle_is_clear(potential: Potential, center: complex, radius: float,
                     t: complex, tol: float) -> bool:
    th = 2.0 * math.pi * (np.arange(64) + 0.5) / 64
    zs = center + radius * np.exp(1j * th)
    F, _ = discriminant_batch(potential, zs, tol=tol, want_deriv=False)
    delta = characteristic_determinant(F, t)
    return bool(np.min(np.abs(delta) / (1.0 + np.abs(F))) > _POLE_TOL)


def _contour_integral(potential: Potential, center: complex, radius: float,
                      t: complex, profile: np.ndarray, grid_size: int,
                      tol: float, label: str):
    """-(1/2 pi i) * closed-circle integral of the resolvent applied to
    the fiber, trapezoid with node doubling to 1e-9 agreement."""
    prev = None
    m = 32
    while m <= 2048:
        th = 2.0 * math.pi * np.arange(m) / m
        ring = np.exp(1j * th)
        zs = center + radius * ring
        vals = _resolvent_apply(potential, zs, t, profile, grid_size, tol)
        # -(1/2 pi i) sum y_j (i r e^{i theta_j}) (2 pi / m) = -(r/m) sum y_j e^{i theta_j}
        out = -(radius / m) * (vals @ ring)
        scale = max(float(np.max(np.abs(out))), 1e-30)
        if prev is not None and \
                float(np.max(np.abs(out - prev))) <= 1e-9 * (1.0 + scale):
            return out, m
        prev = out
        m *= 2
    raise QuadratureFailure(
        f"{label}: contour quadrature did not settle by {m // 2} nodes")


def total_projection(potential: Potential, f, n: int, t, h: float,
                     grid_size: int = 1025,
                     tol: float = 1e-10) -> TotalProjectionSample:
    """T_n(x, t) over the circle around the bands (n, -n).

    The circle is centered at the free double point (2 pi n)^2 with
    radius 2n, inflated or deflated by factors of two when the fiber
    spectrum comes too close to it.  Valid for |t| <= h (real or on the
    complex detour); both band eigenvalues stay well inside.
    """
    potential = load_potential(potential)
    f = load_function(f)
    n = int(n)
    if n < 1:
        raise MalformedConfig("total_projection wants a band index n >= 1")
    t = complex(t)
    if abs(t) > h + 1e-12:
        raise MalformedConfig(f"|t| = {abs(t):.4g} exceeds the window h={h}")
    center = complex(free_seed(n, 0.0))
    grid = np.linspace(0.0, 1.0, grid_size)
    profile = _SliceTable(f, grid).at(t)
    radius = 2.0 * float(n)
    for factor in (1.0, 2.0, 0.5, 4.0, 0.25):
        r = radius * factor
        if _circle_is_clear(potential, center, r, t, tol):
            radius = r
            break
    else:
        raise ResolventPole(
            f"no clear circle around {center:.6g} at any tried radius")
    prof, m = _contour_integral(potential, center, radius, t, profile,
                                grid_size, tol, f"T_{n}")
    return TotalProjectionSample(n=n, t=t, grid=grid, profile=prof,
                                 center=center, radius=radius, nodes=m)


def partial_sum_S_N(potential: Potential, f, t, h: float,
                    N: Optional[int] = None, grid_size: int = 1025,
                    tol: float = 1e-10):
    """S_N(x, t): the joint projection onto every band with |n| <= N.

    One circle encloses all of them: it cuts the real axis below the
    spectrum bottom and in the free-potential gap between |n| = N and
    |n| = N + 1, which stays spectrum-free for |t| <= h.  Returns
    (profile, N).
    """
    potential = load_potential(potential)
    f = load_function(f)
    t = complex(t)
    if N is None:
        N = determine_asymptotic_window(potential, h).N
    N = int(N)
    hi_in = float(free_seed(N, h))
    lo_out = float(free_seed(N + 1, -h))
    bottom = -1.0 - 2.0 * potential.bound()
    grid = np.linspace(0.0, 1.0, grid_size)
    profile = _SliceTable(f, grid).at(t)
    for frac in (0.5, 0.42, 0.58, 0.34, 0.66):
        cut = hi_in + frac * (lo_out - hi_in)
        center = complex(0.5 * (cut + bottom))
        radius = 0.5 * (cut - bottom)
        if _circle_is_clear(potential, center, radius, t, tol):
            break
    else:
        raise ResolventPole(
            f"no clear enclosing circle for S_{N} at t={t:.6g}")
    prof, _ = _contour_integral(potential, center, radius, t, profile,
                                grid_size, tol, f"S_{N}")
    return prof, N


# -- Galerkin oracle -------------------------------------------------------------

@dataclass
class GalerkinResult:
    """Dense truncated eigenproblem in the basis e^{i(2 pi k + t)x}."""
    t: complex
    ks: np.ndarray           # basis frequencies, -K..K
    ns: np.ndarray           # band labels, same order
    lams: np.ndarray         # eigenvalue matched to band n
    vectors: np.ndarray      # column j: coefficients of band ns[j]

    def profile(self, n: int, x_grid) -> np.ndarray:
        j = int(np.flatnonzero(self.ns == n)[0])
        x = np.asarray(x_grid, dtype=float)
        waves = np.exp(1j * np.outer(x, 2.0 * math.pi * self.ks + self.t))
        return waves @ self.vectors[:, j]


def galerkin_eigensolve(potential: Potential, t, basis_size: int,
                        ) -> GalerkinResult:
    """Eigenvalues and coefficient vectors of the truncated fiber matrix
    M_{kl} = (2 pi k + t)^2 delta_{kl} + q_hat(k - l).

    Eigenvalues are matched to the free seeds (2 pi n + t)^2 by optimal
    assignment, so the ordering is by band label, not by magnitude; the
    truncation edge |n| close to K is inaccurate by construction and the
    callers exclude it from comparisons.
    """
    import scipy.linalg
    import scipy.optimize

    potential = load_potential(potential)
    t = complex(t)
    K = int(basis_size)
    if K < 1:
        raise MalformedConfig("basis_size must be at least 1")
    ks = np.arange(-K, K + 1)
    A = np.zeros((ks.size, ks.size), dtype=complex)
    for i, k in enumerate(ks):
        A[i, i] = (2.0 * math.pi * k + t) ** 2
        for j, l in enumerate(ks):
            if k != l:
                A[i, j] += potential.fourier_coefficient(k - l)
    A[np.diag_indices_from(A)] += potential.fourier_coefficient(0)
    w, v = scipy.linalg.eig(A)
    seeds = np.array([(2.0 * math.pi * n + t) ** 2 for n in ks])
    cost = np.abs(w[None, :] - seeds[:, None])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    order = cols[np.argsort(rows)]
    return GalerkinResult(t=t, ks=ks, ns=ks.copy(), lams=w[order],
                          vectors=v[:, order])
