"""Bloch eigenfunctions and the biorthogonal pairing.

At an eigenvalue lam of the fiber operator with quasimomentum t the
eigenfunction is a combination of the fundamental solutions,

    Phi_t(x) = phi(1) theta(x) + (e^{it} - theta(1)) phi(x),

or the companion form through theta'(1) when phi(1) is the small datum;
the two are collinear wherever both are nonzero and cannot both vanish
for t interior to (0, pi).  The adjoint fiber problem has the same
eigenvalue, with eigenfunction conj(Phi_{-t}) at the same lam, and the
pairing scalar

    alpha(t) = (Psi, Psi*) = -phi(1) F'(lam) / (|Phi_t| |Phi_{-t}|)

measures how far the pair is from orthonormal; alpha -> 0 is the
signature of a spectral singularity.

Eigenfunctions are defined up to phase.  The package convention rotates
every normalized profile so that its largest-magnitude Fourier
coefficient (of the periodic part) is real positive, and the closed-form
alpha variants are corrected by the same factors, which makes the direct
inner product and all closed forms agree to quadrature accuracy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .discriminant import _grid_for
from .errors import DegenerateAtBoundary, ToleranceNotMet, ZeroDenominator
from .odecore import FundamentalSolution, integrate_fundamental
from .potential import Potential
from .quadrature import boole_weights, l2_inner, l2_norm
from .spectrum import solve_eigenvalues

# both coefficient pairs below this size mean geometric multiplicity 2
_DEGENERATE_TOL = 1e-8


def phi_eigenfunction(fs: FundamentalSolution, t: complex) -> np.ndarray:
    """Phi_t profile on the solution grid; zero iff phi(1)=0 and
    theta(1)=e^{it} simultaneously."""
    M = fs.monodromy
    return M[0, 1] * fs.theta + (cmath.exp(1j * t) - M[0, 0]) * fs.phi


def g_eigenfunction(fs: FundamentalSolution, t: complex) -> np.ndarray:
    """Companion profile through theta'(1); zero iff theta'(1)=0 and
    phi'(1)=e^{it} simultaneously."""
    M = fs.monodromy
    return M[1, 0] * fs.phi + (cmath.exp(1j * t) - M[1, 1]) * fs.theta


def _coefficient_sizes(fs: FundamentalSolution, t: complex) -> Tuple[float, float]:
    """Scale-balanced magnitudes of the two forms' coefficient pairs.
    theta grows like cos(sqrt(lam) x) and phi like sin(sqrt(lam) x)/sqrt(lam),
    so phi(1) is weighted up and theta'(1) down by sqrt(1+|lam|)."""
    M = fs.monodromy
    s = math.sqrt(1.0 + abs(fs.lam))
    e = cmath.exp(1j * t)
    c_phi = max(abs(M[0, 1]) * s, abs(e - M[0, 0]))
    c_g = max(abs(M[1, 0]) / s, abs(e - M[1, 1]))
    return c_phi, c_g


def canonical_phase(profile: np.ndarray, grid: np.ndarray, t: complex) -> complex:
    """Unimodular factor z such that z*profile has its largest-magnitude
    Fourier coefficient (of the periodic part) real positive.  The grid
    must be uniform over [0, 1] with the endpoint included."""
    x = grid[:-1]
    p = profile[:-1] * np.exp(-1j * t * x)
    c = np.fft.fft(p)
    k = int(np.argmax(np.abs(c)))
    if abs(c[k]) == 0.0:
        return 1.0 + 0.0j
    return abs(c[k]) / c[k]


@dataclass
class EigenfunctionPair:
    """Normalized eigenfunction and adjoint eigenfunction at one (n, t)."""
    n: int
    t: float
    lam: complex
    grid: np.ndarray
    psi: np.ndarray
    psi_star: np.ndarray
    alpha: complex
    formula_spread: float
    form: str                      # 'phi' or 'g': which assembly was used
    qp_defect: float = 0.0         # |psi(1) - e^{it} psi(0)|
    newton_residual: float = 0.0


def _build_pair(fs: FundamentalSolution, t: float, form: str):
    """(U_t, U_{-t}, numerator coefficient) for the requested form.

    The bilinear pairings differ in sign: int Phi_t Phi_{-t} = -phi(1) F'
    but int G_t G_{-t} = +theta'(1) F' (check q=0: G_t = i sin t e^{isx}).
    The coefficient below is always the one with int U_t U_{-t} = -coeff*F'.
    """
    if form == "phi":
        return (phi_eigenfunction(fs, t), phi_eigenfunction(fs, -t),
                fs.monodromy[0, 1])
    return (g_eigenfunction(fs, t), g_eigenfunction(fs, -t),
            -fs.monodromy[1, 0])


def _alpha_variant(fs: FundamentalSolution, t: float, form: str,
                   weights: np.ndarray, Fp: complex) -> complex:
    """Closed-form alpha for one assembly, rotated to the phase convention."""
    U, Um, coeff = _build_pair(fs, t, form)
    nU, nUm = l2_norm(U, weights), l2_norm(Um, weights)
    if nU < 1e-13 * (1.0 + abs(fs.lam)) or nUm < 1e-13 * (1.0 + abs(fs.lam)):
        raise ZeroDenominator(f"{form}-form vanishes at lam={fs.lam:.6g}, t={t:.6g}")
    gamma = canonical_phase(U / nU, fs.grid, t)
    delta = canonical_phase(np.conj(Um) / nUm, fs.grid, t)
    return gamma * np.conj(delta) * (-coeff * Fp) / (nU * nUm)


def _alpha_pm(fs: FundamentalSolution, t: float, weights: np.ndarray,
              Fp: complex) -> complex:
    """The same alpha assembled through p(lam) = 2 sin t instead of e^{it};
    independent arithmetic, same value."""
    M = fs.monodromy
    p = 2.0 * math.sin(t)
    half = 0.5 * (M[1, 1] - M[0, 0])
    Up = M[0, 1] * fs.theta + (half + 0.5j * p) * fs.phi
    Um = M[0, 1] * fs.theta + (half - 0.5j * p) * fs.phi
    nU, nUm = l2_norm(Up, weights), l2_norm(Um, weights)
    if nU < 1e-13 * (1.0 + abs(fs.lam)) or nUm < 1e-13 * (1.0 + abs(fs.lam)):
        raise ZeroDenominator(f"pm-form vanishes at lam={fs.lam:.6g}, t={t:.6g}")
    gamma = canonical_phase(Up / nU, fs.grid, t)
    delta = canonical_phase(np.conj(Um) / nUm, fs.grid, t)
    return gamma * np.conj(delta) * (-M[0, 1] * Fp) / (nU * nUm)


def normalized_pair(potential: Potential, n: int, t: float,
                    tol: float = 1e-10) -> EigenfunctionPair:
    """Normalized eigenfunction and adjoint partner for band n at real t.

    alpha is returned from the direct quadrature inner product; the
    deviation from the closed forms is recorded in formula_spread.
    Raises DegenerateAtBoundary when both assemblies vanish (a boundary
    point with geometric multiplicity 2 has no biorthogonal pair).
    """
    t = float(t)
    eig = solve_eigenvalues(potential, t, [n], tol=tol, audit=False)[0]
    lam = eig.lam
    fs = integrate_fundamental(potential, lam, tol=tol,
                               grid_size=_grid_for(abs(lam)))
    c_phi, c_g = _coefficient_sizes(fs, t)
    if max(c_phi, c_g) < _DEGENERATE_TOL:
        raise DegenerateAtBoundary(
            f"lam={lam:.8g}, t={t:.6g}: monodromy is e^(it) I, geometric "
            "multiplicity 2; no biorthogonal pair exists")
    form = "phi" if c_phi >= c_g else "g"
    weights = boole_weights(fs.grid.size)

    U, Um, _ = _build_pair(fs, t, form)
    nU, nUm = l2_norm(U, weights), l2_norm(Um, weights)
    psi = U / nU
    psi_star = np.conj(Um) / nUm
    psi = canonical_phase(psi, fs.grid, t) * psi
    psi_star = canonical_phase(psi_star, fs.grid, t) * psi_star

    alpha = l2_inner(psi, psi_star, weights)
    Fp = fs.dmonodromy[0, 0] + fs.dmonodromy[1, 1]
    variants = []
    for maker in (lambda: _alpha_variant(fs, t, "phi", weights, Fp),
                  lambda: _alpha_variant(fs, t, "g", weights, Fp),
                  lambda: _alpha_pm(fs, t, weights, Fp)):
        try:
            variants.append(maker())
        except ZeroDenominator:
            pass
    spread = max((abs(alpha - v) for v in variants), default=0.0)

    e_it = cmath.exp(1j * t)
    qp = float(abs(psi[-1] - e_it * psi[0]))
    return EigenfunctionPair(n=n, t=t, lam=lam, grid=fs.grid, psi=psi,
                             psi_star=psi_star, alpha=alpha,
                             formula_spread=spread, form=form, qp_defect=qp,
                             newton_residual=eig.newton_residual)


def alpha_closed_form(potential: Potential, n: int, t: float,
                      variant: str = "phi", tol: float = 1e-10) -> complex:
    """alpha by one closed formula: 'phi' via -phi(1)F', 'g' via
    -theta'(1)F', or 'pm' via the p(lam)=2 sin t assembly.  All variants
    are rotated to the package phase convention, so they agree with each
    other and with the direct inner product."""
    if variant not in ("phi", "g", "pm"):
        raise ValueError(f"unknown variant {variant!r}")
    eig = solve_eigenvalues(potential, t, [n], tol=tol, audit=False)[0]
    fs = integrate_fundamental(potential, eig.lam, tol=tol,
                               grid_size=_grid_for(abs(eig.lam)))
    weights = boole_weights(fs.grid.size)
    Fp = fs.dmonodromy[0, 0] + fs.dmonodromy[1, 1]
    if variant == "pm":
        return _alpha_pm(fs, float(t), weights, Fp)
    return _alpha_variant(fs, float(t), variant, weights, Fp)
