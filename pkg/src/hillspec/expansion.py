"""Reconstruction of compactly supported functions by the Bloch expansion.

A continuous f supported in [-K, K] is sliced into quasiperiodic fibers
f_t(x) = sum_k f(x+k) e^{-ikt} (so that f_t(x+1) = e^{it} f_t(x)), each
fiber is expanded over the band eigenfunctions, and the band terms are
integrated back over quasimomentum.  With a complex potential the
coefficient of band n can blow up where two bands meet, and the whole
difficulty of the subject lives in how the t-integral passes those
points.  Three routes are implemented:

  * away from the meeting points (the set E(h)) everything is a plain
    band-by-band quadrature;
  * across a boundary point t = 0 or pi, either the truncated band sum
    is carried along the upper semicircular detour of radius h (mode
    "contour"), or each pair (n, -n) resp. (n, -(n+1)) is excised
    symmetrically and extrapolated to zero excision (mode "pv");
  * the same sum can be written over the spectrum itself (arcs in the
    lambda plane) and assembled from lambda-side data only, which checks
    the quasimomentum machinery against an independent evaluation.

Band terms are built in a normalization-free form.  With U_t the raw
fiber eigenfunction (either assembly from the fundamental solutions)
and <u, v> = int_0^1 u v dx the bilinear pairing without conjugation,

    a_n(t) Psi_{n,t}(x) = <f_t, U_{-t}> U_t(x) / <U_t, U_{-t}>,

every norm and phase cancels, and each factor is analytic in t, so the
identical arithmetic serves real nodes and complex detours.  The
denominator also has the closed form -phi(1) F'(lam) for the phi
assembly resp. +theta'(1) F' for the g assembly; the quadrature loops
use the direct pairing (no derivative propagation needed) and the test
suite pins the closed forms against it.
"""

from __future__ import annotations

import cmath
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .discriminant import discriminant_batch
from .eigenfunctions import normalized_pair
from .errors import (AlphaZero, ContinuationLost, MalformedConfig,
                     NewtonDiverged, PVDiverges, QuadratureFailure,
                     ToleranceNotMet)
from .odecore import integrate_fundamental_batch
from .potential import Potential, load_potential
from .quadrature import (boole_weights, dyadic_shell_edges, gauss_panel_nodes,
                         graded_edges, l2_inner, richardson_ladder)
from .singularities import SingularityRecord, singular_quasimomenta
from .spectrum import (_refine_double, arccos_halfplane,
                       determine_asymptotic_window, free_seed,
                       newton_eigenvalues, solve_eigenvalues)
from .util import parallel_map

_H_MAX = 1.0 / (15.0 * math.pi)


# -- test functions ---------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Continuous compactly supported function on the line."""
    kind: str
    support: Tuple[float, float]
    params: dict = field(default_factory=dict)
    fn: Callable = field(default=None, repr=False, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(x), dtype=complex)
        a, b = self.support
        inside = (x > a) & (x < b)
        if np.any(inside):
            out[inside] = self.fn(x[inside])
        return out


def _make_hat(center: float, halfwidth: float, amplitude: complex):
    def fn(x):
        return amplitude * (1.0 - np.abs((x - center) / halfwidth))
    return fn


def _make_bump(center: float, halfwidth: float, amplitude: complex):
    def fn(x):
        u = (x - center) / halfwidth
        return amplitude * np.exp(1.0 - 1.0 / (1.0 - u * u))
    return fn


def load_function(config) -> TestFunction:
    """Build a TestFunction from a dict, a JSON string, or a path."""
    if isinstance(config, TestFunction):
        return config
    if isinstance(config, (str, os.PathLike)):
        if isinstance(config, os.PathLike) or os.path.exists(config):
            with open(config, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = str(config)
        try:
            config = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedConfig(f"not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise MalformedConfig("function config must be a JSON object")
    kind = config.get("kind")
    if kind in ("hat", "bump"):
        center = float(config.get("center", 0.0))
        halfwidth = float(config.get("halfwidth", 1.0))
        amplitude = complex(config.get("amplitude", 1.0))
        if halfwidth <= 0:
            raise MalformedConfig("halfwidth must be positive")
        maker = _make_hat if kind == "hat" else _make_bump
        return TestFunction(
            kind=kind, support=(center - halfwidth, center + halfwidth),
            params={"center": center, "halfwidth": halfwidth,
                    "amplitude": amplitude},
            fn=maker(center, halfwidth, amplitude))
    if kind == "samples":
        xs = np.asarray(config.get("x", ()), dtype=float)
        vals = config.get("values", ())
        if xs.size < 2 or len(vals) != xs.size:
            raise MalformedConfig("'samples' needs matching x and values")
        if np.any(np.diff(xs) <= 0):
            raise MalformedConfig("sample abscissae must increase strictly")
        v = np.asarray([complex(*row) if isinstance(row, (list, tuple))
                        else complex(row) for row in vals])

        def fn(x, xs=xs, v=v):
            re = np.interp(x, xs, v.real, left=0.0, right=0.0)
            im = np.interp(x, xs, v.imag, left=0.0, right=0.0)
            return re + 1j * im

        return TestFunction(kind="samples",
                            support=(float(xs[0]), float(xs[-1])),
                            params={"n_samples": int(xs.size)}, fn=fn)
    raise MalformedConfig(f"unknown function kind {kind!r}")


# -- Gelfand transform ------------------------------------------------------

@dataclass
class GelfandSlice:
    """One quasiperiodic fiber of f: the profile of f_t on a unit grid.

    The profile satisfies f_t(x+1) = e^{it} f_t(x); in particular the
    two endpoint values of the grid differ by the factor e^{it}.
    """
    t: complex
    grid: np.ndarray
    profile: np.ndarray
    support: Tuple[float, float]


class _SliceTable:
    """Integer translates of f sampled on the unit grid.

    A fiber at any t (real or complex) is the short exponential sum
    profile = sum_k rows[k] e^{-ikt}; the rows are t-independent, so one
    table serves every quadrature node.
    """

    def __init__(self, f: TestFunction, grid: np.ndarray):
        self.grid = np.asarray(grid, dtype=float)
        self.support = f.support
        a, b = f.support
        kmin = math.ceil(a) - 1
        kmax = math.floor(b)
        self.ks = np.arange(kmin, kmax + 1)
        self.rows = np.stack([f(self.grid + k) for k in self.ks])

    def at(self, t: complex) -> np.ndarray:
        phases = np.exp(-1j * self.ks * complex(t))
        return phases @ self.rows


def gelfand_transform(f, t: complex, x_grid) -> GelfandSlice:
    """Fiber f_t of f on the given unit-interval grid.

    The translate sum is finite (compact support), hence entire in t;
    complex t is allowed and is what the detour contours use.
    """
    f = load_function(f)
    grid = np.asarray(x_grid, dtype=float)
    table = _SliceTable(f, grid)
    return GelfandSlice(t=complex(t), grid=grid, profile=table.at(t),
                        support=f.support)


def parseval_defect(f, grid_size: int = 257, n_t: int = 64) -> float:
    """Relative defect of int |f|^2 = (1/2pi) int_0^2pi ||f_t||^2 dt.

    The t-integrand is a trigonometric polynomial of degree bounded by
    the number of translates, so the uniform t-grid integrates it
    exactly once n_t clears twice that.
    """
    f = load_function(f)
    grid = np.linspace(0.0, 1.0, grid_size)
    table = _SliceTable(f, grid)
    w = boole_weights(grid_size)
    acc = 0.0
    for t in 2.0 * math.pi * np.arange(n_t) / n_t:
        prof = table.at(t)
        acc += float(np.real(np.sum(w * prof * np.conj(prof)))) / n_t
    a, b = f.support
    xf = np.linspace(a, b, 8193)
    direct = float(np.trapezoid(np.abs(f(xf)) ** 2, xf))
    if direct == 0.0:
        return abs(acc)
    return abs(acc - direct) / direct


# -- band engine ------------------------------------------------------------

def _profile_grid(lam_scale: float) -> int:
    # 513 resolves ~ 30 points per oscillation up to |lam| ~ 1e4; one
    # doubling covers the largest band this module is asked for without
    # pushing the propagation past its own oscillation-bound step count
    return 513 if lam_scale <= 1.0e4 else 1025


@dataclass
class _FiberNode:
    """Everything the quadratures need at one quasimomentum node."""
    t: complex
    lam: np.ndarray              # per-band eigenvalues
    U_t: np.ndarray              # (grid, band) eigenfunction profiles
    U_neg: np.ndarray            # partner profiles at e^{-it}, same lam
    pairing: np.ndarray          # <U_t, U_neg> per band, bilinear
    grid: np.ndarray


class _BandCache:
    """Eigenvalue continuation and batched fiber data for a band set.

    Feed it nodes in sweep order: each solve seeds Newton from the
    previous node and falls back to the free-seeded solver after a jump
    or a Newton failure.
    """

    def __init__(self, potential: Potential, bands: Sequence[int],
                 tol: float = 1e-10, grid_size: Optional[int] = None):
        self.potential = potential
        self.bands = sorted(set(int(n) for n in bands))
        self.tol = tol
        lam_scale = max(abs(free_seed(n, math.pi)) for n in self.bands)
        self.grid_size = grid_size or _profile_grid(lam_scale)
        self.weights = boole_weights(self.grid_size)
        self._idx = np.asarray(self.bands)
        self._last_t: Optional[complex] = None
        self._last_lam: Optional[np.ndarray] = None

    def reset(self):
        self._last_t = None
        self._last_lam = None

    def _caps(self, t: complex) -> np.ndarray:
        tr = float(np.real(t))
        seeds = free_seed(self._idx, tr)
        caps = np.empty(self._idx.shape)
        for j, n in enumerate(self.bands):
            gaps = [abs(free_seed(n + d, tr) - seeds[j]) for d in (-1, 1)]
            gaps = [g for g in gaps if g > 1e-9]
            caps[j] = 0.45 * min(gaps) + 0.5 if gaps else 0.5
        return caps

    def _fresh(self, t: complex) -> np.ndarray:
        evs = solve_eigenvalues(self.potential, t, self.bands, tol=self.tol,
                                audit=False)
        by_n = {e.n: e.lam for e in evs[:len(self.bands)]}
        return np.array([by_n[n] for n in self.bands], dtype=complex)

    def eigenvalues(self, t: complex) -> np.ndarray:
        t = complex(t)
        if self._last_lam is not None and abs(t - self._last_t) < 0.35:
            try:
                lam, _ = newton_eigenvalues(self.potential, t, self._last_lam,
                                            self.tol, caps=self._caps(t))
                self._last_t, self._last_lam = t, lam
                return lam
            except NewtonDiverged:
                pass
        try:
            lam = self._fresh(t)
        except NewtonDiverged as exc:
            raise ContinuationLost(
                f"eigenvalue tracking failed at t={t:.8g}: {exc}") from exc
        self._last_t, self._last_lam = t, lam
        return lam

    def node(self, t: complex) -> _FiberNode:
        t = complex(t)
        lam = self.eigenvalues(t)
        fsb = integrate_fundamental_batch(self.potential, lam, tol=self.tol,
                                          grid_size=self.grid_size,
                                          want_deriv=False)
        M = fsb.monodromy
        e_p = cmath.exp(1j * t)
        e_m = cmath.exp(-1j * t)
        s = np.sqrt(1.0 + np.abs(lam))
        # assembly choice per band: the better-conditioned of the two
        # null-vector forms, judged at both multipliers because the same
        # form must serve U_t and U_{-t}
        c_phi = np.minimum(
            np.maximum(np.abs(M[0, 1]) * s, np.abs(e_p - M[0, 0])),
            np.maximum(np.abs(M[0, 1]) * s, np.abs(e_m - M[0, 0])))
        c_g = np.minimum(
            np.maximum(np.abs(M[1, 0]) / s, np.abs(e_p - M[1, 1])),
            np.maximum(np.abs(M[1, 0]) / s, np.abs(e_m - M[1, 1])))
        if not np.all(np.maximum(c_phi, c_g) > 1e-10):
            j = int(np.argmin(np.maximum(c_phi, c_g)))
            raise QuadratureFailure(
                f"band {self.bands[j]} is degenerate at t={t:.8g}; a "
                "quadrature node landed on a multiple point")
        use_phi = c_phi >= c_g
        Up_phi = M[0, 1] * fsb.theta + (e_p - M[0, 0]) * fsb.phi
        Un_phi = M[0, 1] * fsb.theta + (e_m - M[0, 0]) * fsb.phi
        Up_g = M[1, 0] * fsb.phi + (e_p - M[1, 1]) * fsb.theta
        Un_g = M[1, 0] * fsb.phi + (e_m - M[1, 1]) * fsb.theta
        U_t = np.where(use_phi, Up_phi, Up_g)
        U_neg = np.where(use_phi, Un_phi, Un_g)
        pairing = np.einsum("g,gm,gm->m", self.weights, U_t, U_neg)
        norms = (np.einsum("g,gm->m", self.weights, np.abs(U_t) ** 2)
                 * np.einsum("g,gm->m", self.weights, np.abs(U_neg) ** 2))
        bad = np.abs(pairing) < 1e-14 * np.sqrt(norms)
        if np.any(bad):
            ns = [self.bands[j] for j in np.flatnonzero(bad)]
            raise AlphaZero(
                f"biorthogonal pairing vanishes at t={t:.8g} for bands {ns}")
        return _FiberNode(t=t, lam=lam, U_t=U_t, U_neg=U_neg,
                          pairing=pairing, grid=fsb.grid)

    def terms(self, node: _FiberNode, slice_profile: np.ndarray) -> np.ndarray:
        """(grid, band) profiles of a_n(t) Psi_{n,t} for every band."""
        num = np.einsum("g,g,gm->m", self.weights, slice_profile, node.U_neg)
        return node.U_t * (num / node.pairing)


def expansion_coefficient(potential: Potential, n: int, t,
                          fiber: GelfandSlice, tol: float = 1e-10) -> complex:
    """Coefficient a_n(t) of the fiber over the normalized eigenpair.

    This is the presentation form (1/alpha)(f_t, Psi*): the phase and
    norm conventions are fixed so that for q = 0 the coefficients reduce
    to classical Fourier coefficients of the fiber.  The quadrature
    engines use the normalization-free product a_n(t) Psi_{n,t} instead;
    it has no alpha in it, which is the whole point near singularities.
    """
    t = complex(t)
    if abs(t.imag) > 1e-12:
        raise MalformedConfig("expansion_coefficient wants real t; complex "
                              "detours use the normalization-free band terms")
    if abs(t - fiber.t) > 1e-9:
        raise MalformedConfig(
            f"fiber was built at t={fiber.t:.8g}, asked at t={t:.8g}")
    potential = load_potential(potential)
    pair = normalized_pair(potential, n, float(t.real), tol=tol)
    if abs(pair.alpha) < 1e-8:
        raise AlphaZero(
            f"alpha_{n}({t.real:.8g}) = {abs(pair.alpha):.3e}; the "
            "coefficient is undefined at a spectral singularity")
    if pair.grid.size == fiber.grid.size and \
            np.allclose(pair.grid, fiber.grid):
        prof = fiber.profile
    else:
        prof = (np.interp(pair.grid, fiber.grid, fiber.profile.real)
                + 1j * np.interp(pair.grid, fiber.grid, fiber.profile.imag))
    w = boole_weights(pair.grid.size)
    return complex(l2_inner(prof, pair.psi_star, w) / pair.alpha)


# -- output assembly ---------------------------------------------------------

@dataclass
class _OutputMap:
    x: np.ndarray          # snapped output abscissae
    base: np.ndarray       # index into the unit-interval profile grid
    k: np.ndarray          # integer translate of each output point


def _output_map(x_out, grid_size: int) -> _OutputMap:
    """Snap output points onto translates of the profile grid.

    Band profiles live on the unit grid; the value at x = k + r is the
    grid value nearest r times the extension factor e^{ikt}.  Snapping
    keeps the assembly exact (no interpolation); callers read the
    snapped abscissae back from the report.
    """
    x = np.asarray(x_out, dtype=float)
    step = 1.0 / (grid_size - 1)
    k = np.floor(x).astype(int)
    base = np.rint((x - k) / step).astype(int)
    carry = base == grid_size - 1
    k[carry] += 1
    base[carry] = 0
    return _OutputMap(x=k + base * step, base=base, k=k)


class _Accumulator:
    """Accumulates weight * band_term * e^{ikt} on the output grid."""

    def __init__(self, bands: Sequence[int], omap: _OutputMap):
        self.omap = omap
        self.data: Dict[int, np.ndarray] = {
            n: np.zeros(omap.x.size, dtype=complex) for n in bands}

    def add_node(self, cache: _BandCache, node: _FiberNode,
                 slice_profile: np.ndarray, weight: complex):
        terms = cache.terms(node, slice_profile)
        phase = np.exp(1j * self.omap.k * node.t)
        sampled = terms[self.omap.base, :]
        for j, n in enumerate(cache.bands):
            self.data[n] += weight * sampled[:, j] * phase


@dataclass
class BandContributions:
    """Band-resolved integral over one piece of the contour."""
    x: np.ndarray
    per_band: Dict
    quadrature_error: float = 0.0
    meta: dict = field(default_factory=dict)

    def total(self) -> np.ndarray:
        out = np.zeros(self.x.size, dtype=complex)
        for v in self.per_band.values():
            out = out + v
        return out


# -- plan --------------------------------------------------------------------

@dataclass
class PairWindow:
    """One boundary window: the bands in `members` around t0 in {0, pi}.

    `meets` records whether the members actually collide there, `ess`
    whether the collision looks like a Jordan point in double precision.
    Sub-1e-6 avoided crossings are indistinguishable from true meetings
    at this precision and are treated as meetings, which only makes the
    integration more careful (the pair is integrated jointly and the
    splitting assertion is skipped); it never changes the value.
    """
    t0: float
    members: Tuple[int, ...]
    meets: bool
    mu: Optional[complex] = None
    gap: float = float("nan")
    defect: float = float("nan")
    geo: int = 0
    ess: bool = False


@dataclass
class ExpansionPlan:
    """Contour layout for one (potential, h, band range) triple."""
    h: float
    n_max: int
    N: int
    E_h: List[Tuple[float, float]]
    excluded: List[float]
    semicircles: Tuple[float, float]
    contour_margins: dict
    pairs: List[PairWindow]
    bundles: list
    pv_delta_ladder: np.ndarray
    records: List[SingularityRecord] = field(default_factory=list)

    def window(self, t0: float,
               members: Sequence[int]) -> Optional[PairWindow]:
        for p in self.pairs:
            if abs(p.t0 - t0) < 1e-12 and set(p.members) == set(members):
                return p
        return None


def _audit_boundary_pair(potential: Potential, members: Tuple[int, int],
                         t0: float, tol: float) -> PairWindow:
    """Decide whether two bands meet at the boundary point and how.

    Seeding both bands at t0 directly would start them from nearly the
    same free eigenvalue, so the branches are resolved at an offset
    where the free seeds dominate every gap, then walked back to t0 in
    shrinking steps (one long Newton jump can land both branches in the
    same basin and fake a closed gap).
    """
    steps = [0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3]
    t_off = abs(t0 - steps[0])
    evs = solve_eigenvalues(potential, t_off, list(members), tol=tol,
                            audit=False)
    by_n = {e.n: e.lam for e in evs[:len(members)]}
    lam = np.array([by_n[n] for n in members], dtype=complex)
    target = 2.0 * math.cos(t0)
    for s in steps[1:]:
        lam, _ = newton_eigenvalues(potential, abs(t0 - s), lam, tol)
    lam, _ = newton_eigenvalues(potential, t0, lam, tol)
    gap = float(abs(lam[0] - lam[1]))
    scale = 1.0 + max(abs(z) for z in lam)
    if gap >= 1e-3 * math.sqrt(scale):
        return PairWindow(t0=t0, members=members, meets=False, gap=gap)
    # inside double-root Newton fuzz: polish on F' and let the residual
    # of the characteristic equation arbitrate true meeting vs avoided
    mu = _refine_double(potential, complex(np.mean(lam)), target)
    if mu is None:
        return PairWindow(t0=t0, members=members, meets=False, gap=gap)
    F, _ = discriminant_batch(potential, np.array([mu]), tol=1e-12,
                              want_deriv=False)
    defect = abs(arccos_halfplane(complex(F[0]) / 2.0) - t0)
    fsb = integrate_fundamental_batch(potential, np.array([mu]), tol=1e-13,
                                      grid_size=5, want_deriv=False)
    M = fsb.monodromy[:, :, 0]
    e = cmath.exp(1j * t0)
    s = math.sqrt(scale)
    ent = max(abs(M[0, 0] - e), abs(M[0, 1]) * s,
              abs(M[1, 0]) / s, abs(M[1, 1] - e))
    # double precision can assert "clearly off zero" but never "zero";
    # the ambiguous middle is marked Jordan, the safe direction
    geo = 2 if ent <= 1e-8 * scale else 1
    return PairWindow(t0=t0, members=members, meets=True, mu=complex(mu),
                      gap=gap, defect=defect, geo=geo, ess=(geo == 1))


def _pair_table(n_max: int) -> List[Tuple[float, Tuple[int, int]]]:
    out = [(0.0, (n, -n)) for n in range(1, n_max + 1)]
    # the pi table runs through n_max on purpose: the last entry is the
    # stub window whose partner -(n_max+1) falls outside the band range,
    # and its audit decides whether that window can be integrated alone
    out += [(math.pi, (n, -(n + 1))) for n in range(0, n_max + 1)]
    return out


def _contour_margins(potential: Potential, bands: Sequence[int], h: float,
                     tol: float) -> dict:
    """Smallest scaled |F'| and |phi(1)| met on the two semicircles."""
    out = {}
    cache = _BandCache(potential, bands, tol)
    for center in (0.0, math.pi):
        min_fp = math.inf
        min_phi = math.inf
        cache.reset()
        cache.eigenvalues(center - h)
        for theta in np.linspace(math.pi, 0.0, 9):
            lam = cache.eigenvalues(center + h * cmath.exp(1j * theta))
            _, Fp = discriminant_batch(potential, lam, tol=tol)
            fsb = integrate_fundamental_batch(potential, lam, tol=1e-12,
                                              grid_size=5, want_deriv=False)
            s = np.sqrt(1.0 + np.abs(lam))
            min_fp = min(min_fp, float(np.min(np.abs(Fp) * s)))
            min_phi = min(min_phi, float(np.min(
                np.abs(fsb.monodromy[0, 1]) * s)))
        out[center] = {"min_scaled_Fp": min_fp, "min_scaled_phi1": min_phi}
    return out


def make_plan(potential: Potential, h: float, n_max: int,
              tol: float = 1e-10,
              records: Optional[Sequence[SingularityRecord]] = None,
              check_margins: bool = True) -> ExpansionPlan:
    """Contour layout: audited boundary windows, E(h) segments, excised
    interior points, semicircle admissibility margins, excision ladder.

    Interior (non-boundary) singular quasimomenta cannot be discovered
    from boundary audits; pass `records` from the singularity scanner
    when the potential is suspected of interior band crossings.
    """
    potential = load_potential(potential)
    if not (0.0 < h < _H_MAX):
        raise MalformedConfig(f"h must lie in (0, {_H_MAX:.6g}), got {h}")
    if n_max < 1:
        raise MalformedConfig("n_max must be at least 1")
    bands = list(range(-n_max, n_max + 1))

    pairs = [_audit_boundary_pair(potential, members, t0, tol)
             for t0, members in _pair_table(n_max)]

    excluded: List[float] = []
    recs = list(records) if records else []
    for rec in recs:
        interior = min(abs(rec.t0), abs(math.pi - rec.t0)) > 1e-5
        if not interior or rec.klass not in ("SPECTRAL_SINGULARITY", "ESS"):
            continue
        if rec.t0 < 2.0 * h or rec.t0 > math.pi - 2.0 * h:
            raise MalformedConfig(
                f"interior singular point t0={rec.t0:.6g} is within 2h of "
                "a boundary window; choose a smaller h")
        excluded.extend([rec.t0, -rec.t0])
    excluded = sorted(set(excluded))

    margins = {}
    if check_margins:
        margins = _contour_margins(potential, bands, h, tol)
        for center, m in margins.items():
            if m["min_scaled_Fp"] < 1e-8 or m["min_scaled_phi1"] < 1e-8:
                raise ToleranceNotMet(
                    f"admissibility fails on the semicircle at {center:.4g}: "
                    f"margins {m}; choose a different h")

    N = determine_asymptotic_window(potential, h).N

    ess_records = [
        SingularityRecord(mu=p.mu, t0=p.t0, m=2, geo_mult=p.geo,
                          klass="ESS", indices=p.members)
        for p in pairs if p.meets and p.ess
    ]
    bundles = singular_quasimomenta(ess_records, h)

    ladder = np.array([h * 2.0 ** (-j) for j in range(1, 8)])
    return ExpansionPlan(h=h, n_max=n_max, N=N,
                         E_h=[(-math.pi + h, -h), (h, math.pi - h)],
                         excluded=excluded,
                         semicircles=(0.0, math.pi),
                         contour_margins=margins, pairs=pairs,
                         bundles=bundles, pv_delta_ladder=ladder,
                         records=recs)


# -- quadrature over the pieces -----------------------------------------------

_EH_UNIFORM = 5          # uniform panels per E(h) segment
_EH_LEVELS = 5           # dyadic panels packed against each graded end
_EH_ORDER = 6            # Gauss order, main pass
_EH_ORDER_AUDIT = 9      # Gauss order, audit pass
_ARC_PANELS = 3
_ARC_ORDER = 10
_SHELL_ORDER = 5


def _segment_edges(a: float, b: float,
                   cuts: Sequence[float]) -> List[np.ndarray]:
    """Graded panel edges for [a, b], split at interior cut points; all
    resulting ends are graded (the singular points sit just outside)."""
    points = [a] + [c for c in sorted(cuts) if a < c < b] + [b]
    return [graded_edges(lo, hi, _EH_UNIFORM, grade_left=True,
                         grade_right=True, levels=_EH_LEVELS)
            for lo, hi in zip(points[:-1], points[1:])]


def _sweep_segment(cache: _BandCache, table: _SliceTable, acc: _Accumulator,
                   edges: np.ndarray, order: int):
    nodes, weights = gauss_panel_nodes(edges, order)
    cache.reset()
    for t, w in zip(nodes, weights):
        acc.add_node(cache, cache.node(t), table.at(t), w)


def integrate_over_Eh(potential: Potential, plan: ExpansionPlan, f,
                      n_range: Sequence[int], x_out, audit: bool = True,
                      tol: float = 1e-10) -> BandContributions:
    """Band-by-band integral over the regular part E(h) of the contour.

    All bands share every quadrature node (one batched propagation per
    node).  The audit pass repeats the sweep at a higher Gauss order on
    the same panels; the largest per-band discrepancy is reported, and
    a spread beyond 1e-6 of the band scale raises QuadratureFailure.
    """
    potential = load_potential(potential)
    f = load_function(f)
    bands = sorted(set(int(n) for n in n_range))
    cache = _BandCache(potential, bands, tol)
    table = _SliceTable(f, np.linspace(0.0, 1.0, cache.grid_size))
    omap = _output_map(x_out, cache.grid_size)

    segments = []
    for a, b in plan.E_h:
        segments.extend(_segment_edges(a, b, plan.excluded))

    acc = _Accumulator(bands, omap)
    for edges in segments:
        _sweep_segment(cache, table, acc, edges, _EH_ORDER)
    err = 0.0
    if audit:
        acc2 = _Accumulator(bands, omap)
        for edges in segments:
            _sweep_segment(cache, table, acc2, edges, _EH_ORDER_AUDIT)
        ref = max(max(float(np.max(np.abs(v))) for v in acc2.data.values()),
                  1e-30)
        for n in bands:
            diff = float(np.max(np.abs(acc.data[n] - acc2.data[n])))
            scale = max(float(np.max(np.abs(acc2.data[n]))), 1e-3 * ref)
            err = max(err, diff / scale)
            acc.data[n] = acc2.data[n]        # keep the better pass
        if err > 1e-6:
            raise QuadratureFailure(
                f"E(h) quadrature not converged: relative spread {err:.3e} "
                "between Gauss orders; an unexcised singular point may sit "
                "inside a segment (rebuild the plan with scanner records)")
    return BandContributions(x=omap.x, per_band=dict(acc.data),
                             quadrature_error=err,
                             meta={"piece": "E_h", "segments": plan.E_h,
                                   "excluded": list(plan.excluded)})


def integrate_over_semicircle(potential: Potential, plan: ExpansionPlan, f,
                              which, n_range: Sequence[int], x_out,
                              tol: float = 1e-10) -> BandContributions:
    """Band terms integrated over the upper semicircle around 0 or pi.

    The arc runs from t0-h to t0+h through the upper half plane (angle
    pi down to 0), dt = i h e^{i theta} d theta.  Eigenvalues continue
    node to node; a lost band retries the stretch in quarter steps.
    Individual band terms have poles at the Jordan points inside the
    disc, and those poles cancel only across complete pairs, so the
    caller controls n_range; reconstruct drops exactly the same stub
    windows here as in pv mode.
    """
    potential = load_potential(potential)
    f = load_function(f)
    center = 0.0 if which in (0, "0", 0.0) else math.pi
    h = plan.h
    bands = sorted(set(int(n) for n in n_range))
    cache = _BandCache(potential, bands, tol)
    table = _SliceTable(f, np.linspace(0.0, 1.0, cache.grid_size))
    omap = _output_map(x_out, cache.grid_size)
    acc = _Accumulator(bands, omap)

    nodes, weights = gauss_panel_nodes(
        np.linspace(math.pi, 0.0, _ARC_PANELS + 1), _ARC_ORDER)
    cache.reset()
    cache.eigenvalues(center - h)     # seed on the real axis at the join
    prev = math.pi
    for theta, w in zip(nodes, weights):
        t = center + h * cmath.exp(1j * theta)
        try:
            node = cache.node(t)
        except ContinuationLost:
            for th in np.linspace(prev, theta, 5)[1:]:
                cache.eigenvalues(center + h * cmath.exp(1j * th))
            node = cache.node(t)
        acc.add_node(cache, node, table.at(t),
                     w * 1j * h * cmath.exp(1j * theta))
        prev = theta
    return BandContributions(x=omap.x, per_band=dict(acc.data),
                             meta={"piece": "semicircle", "center": center})


# -- excision ladders ----------------------------------------------------------

def _shell_nodes(h: float, delta_min: float):
    edges = dyadic_shell_edges(delta_min, h, per_decade=2)
    nodes, weights = gauss_panel_nodes(edges, _SHELL_ORDER)
    shell_of = np.repeat(np.arange(edges.size - 1), _SHELL_ORDER)
    return edges, nodes, weights, shell_of


def _ladder_rungs(edges: np.ndarray, shell_profiles: np.ndarray,
                  deltas: np.ndarray) -> List[np.ndarray]:
    """Suffix sums of per-shell integrals: rung j is the integral over
    excision radius deltas[j] (deltas descending, each an edge value)."""
    rungs = []
    for d in deltas:
        j0 = int(np.argmin(np.abs(edges - d)))
        if abs(edges[j0] - d) > 1e-9 * d:
            raise QuadratureFailure(
                f"ladder rung {d:.6g} does not sit on a shell edge")
        rungs.append(shell_profiles[j0:].sum(axis=0))
    return rungs


def _extrapolate_rungs(deltas: np.ndarray, rungs: List[np.ndarray],
                       label: str):
    """Richardson to zero excision with divergence detection."""
    est, spread = richardson_ladder(deltas, rungs, order=2)
    increments = [float(np.max(np.abs(rungs[i + 1] - rungs[i])))
                  for i in range(len(rungs) - 1)]
    scale = max(float(np.max(np.abs(est))), 1e-30)
    rung_scale = max(float(np.max(np.abs(r))) for r in rungs)
    if increments and increments[0] > 1e-12 * max(rung_scale, 1.0):
        # converging ladders halve their increments rung to rung; a flat
        # or growing tail is the signature of log or power divergence
        if increments[-1] > 0.6 * increments[0]:
            raise PVDiverges(
                f"{label}: excision ladder does not settle (increments "
                f"{increments[0]:.3e} -> {increments[-1]:.3e})")
    if spread > 0.05 * scale + 1e-8 * (1.0 + rung_scale):
        raise PVDiverges(
            f"{label}: extrapolants spread {spread:.3e} against value "
            f"scale {scale:.3e}")
    return est, spread


@dataclass
class PVResult:
    """Excision-ladder value of one boundary window integral."""
    x: np.ndarray
    t0: float
    members: Tuple[int, ...]
    profile: np.ndarray
    error_bar: float
    rung_deltas: np.ndarray
    rung_norms: np.ndarray
    split_defect: float = float("nan")
    per_member: Optional[Dict] = None


def _boundary_ladders(potential: Potential, plan: ExpansionPlan, f,
                      t0: float,
                      windows: List[Tuple[str, Tuple[int, ...], bool]],
                      x_out, tol: float) -> Dict[str, PVResult]:
    """Excision ladders for every window at one boundary point.

    windows is a list of (key, members, regular).  All member bands are
    swept together (one batched propagation per node, shared by every
    window); the per-shell profiles are then combined per window.  For
    windows marked regular each member must converge by itself; this is
    the splitting assertion, skipped at Jordan points where only the
    pair sum has a limit.
    """
    f = load_function(f)
    bands = sorted(set(n for _, members, _ in windows for n in members))
    deltas = np.sort(np.asarray(plan.pv_delta_ladder, float))[::-1]
    cache = _BandCache(potential, bands, tol)
    table = _SliceTable(f, np.linspace(0.0, 1.0, cache.grid_size))
    omap = _output_map(x_out, cache.grid_size)

    edges, nodes, weights, shell_of = _shell_nodes(plan.h, float(deltas[-1]))
    shells = {n: np.zeros((edges.size - 1, omap.x.size), dtype=complex)
              for n in bands}
    for side in (1.0, -1.0):
        cache.reset()
        for j in np.argsort(-nodes):        # outside-in, for continuation
            node = cache.node(t0 + side * nodes[j])
            terms = cache.terms(node, table.at(node.t))
            phase = np.exp(1j * omap.k * node.t)
            sampled = terms[omap.base, :]
            for col, n in enumerate(cache.bands):
                shells[n][shell_of[j]] += weights[j] * sampled[:, col] * phase

    out: Dict[str, PVResult] = {}
    for key, members, regular in windows:
        total = sum(shells[n] for n in members)
        rungs = _ladder_rungs(edges, total, deltas)
        est, spread = _extrapolate_rungs(
            deltas, rungs, f"window t0={t0:.6g} bands {members}")
        split = float("nan")
        per_member = None
        if regular and len(members) > 1:
            per_member = {}
            split = 0.0
            for n in members:
                m_est, m_spread = _extrapolate_rungs(
                    deltas, _ladder_rungs(edges, shells[n], deltas),
                    f"member {n} of window t0={t0:.6g} (marked regular)")
                per_member[n] = m_est
                split = max(split, m_spread)
        out[key] = PVResult(
            x=omap.x, t0=t0, members=tuple(members), profile=est,
            error_bar=spread, rung_deltas=deltas,
            rung_norms=np.array([float(np.max(np.abs(r))) for r in rungs]),
            split_defect=split, per_member=per_member)
    return out


def pv_bundle_integral(potential: Potential, plan: ExpansionPlan, f,
                       pair: Tuple[int, int], delta_ladder=None, x_out=None,
                       tol: float = 1e-10) -> PVResult:
    """Principal-value integral of one boundary pair over its window.

    The pair (n, -n) lives around t0 = 0, the pair (n, -(n+1)) around
    t0 = pi.  Members are integrated jointly over symmetric excisions
    and extrapolated to zero excision; the spread of the last two
    extrapolants is the error bar.  When the window's meeting point was
    not flagged as a Jordan point each member is also extrapolated by
    itself and must converge; a member whose own ladder diverges under
    a regular flag raises PVDiverges (the window does not split).
    """
    potential = load_potential(potential)
    f = load_function(f)
    n, m = int(pair[0]), int(pair[1])
    if m == -n and n >= 1:
        t0 = 0.0
    elif m == -(n + 1) and n >= 0:
        t0 = math.pi
    else:
        raise MalformedConfig(f"not a boundary pair: {pair}")
    if delta_ladder is not None:
        plan = replace(plan, pv_delta_ladder=np.asarray(delta_ladder, float))
    if x_out is None:
        x_out = np.linspace(-2.0, 2.0, 257)
    window = plan.window(t0, (n, m))
    if window is None:
        window = _audit_boundary_pair(potential, (n, m), t0, tol)
    regular = not (window.meets and window.ess)
    return _boundary_ladders(potential, plan, f, t0,
                             [("pair", (n, m), regular)], x_out, tol)["pair"]


# -- reconstruction ------------------------------------------------------------

@dataclass
class ReconstructionReport:
    x: np.ndarray
    f_hat: np.ndarray
    f_values: np.ndarray
    l2_error: float
    mode: str
    h: float
    n_max: int
    N: int
    error_bar: float
    contributions: Dict
    convergence: dict
    dropped: list
    parseval: float
    meta: dict = field(default_factory=dict)


def _l2_on_grid(values: np.ndarray, x: np.ndarray) -> float:
    return float(math.sqrt(abs(np.trapezoid(np.abs(values) ** 2, x))))


def _fourier_tail(f: TestFunction, n_cut: int, extent: int = 40) -> float:
    """Root of the summed squared line-Fourier coefficients of f just
    beyond frequency n_cut; the quantitative handle on truncation."""
    a, b = f.support
    xf = np.linspace(a, b, (1 << 14) + 1)
    vals = f(xf)
    out = 0.0
    for k in range(n_cut + 1, n_cut + extent + 1):
        for sign in (1, -1):
            cf = np.trapezoid(vals * np.exp(-2j * math.pi * sign * k * xf), xf)
            out += abs(cf) ** 2
    return math.sqrt(out)


def _band_list(n_range) -> Tuple[List[int], int]:
    if isinstance(n_range, (int, np.integer)):
        n_max = int(n_range)
        return list(range(-n_max, n_max + 1)), n_max
    bands = sorted(set(int(n) for n in n_range))
    n_max = max(abs(n) for n in bands)
    if bands != list(range(-n_max, n_max + 1)):
        raise MalformedConfig("n_range must be the symmetric set "
                              "-n_max..n_max (pairs must be complete)")
    return bands, n_max


def reconstruct(potential: Potential, f, h: float, n_range, x_out=None,
                mode: str = "pv", plan: Optional[ExpansionPlan] = None,
                audit: bool = True, tol: float = 1e-10,
                threads: int = 1) -> ReconstructionReport:
    """Recover f on the output grid from its Bloch expansion.

    mode "contour": the regular part over E(h) plus the truncated band
    sum carried along the two semicircular detours.

    mode "pv": the regular part plus symmetric-excision ladders for
    every boundary window (pairs, the band-0 window at t = 0, and the
    extreme band's window at pi).

    Both modes drop the pi window of the extreme band when its meeting
    with the out-of-range partner is a Jordan point; the report lists
    the drop and carries the truncation estimate.
    """
    potential = load_potential(potential)
    f = load_function(f)
    if mode not in ("contour", "pv"):
        raise MalformedConfig(f"unknown mode {mode!r}")
    bands, n_max = _band_list(n_range)
    if x_out is None:
        x_out = np.linspace(-2.0, 2.0, 257)
    if plan is None:
        plan = make_plan(potential, h, n_max, tol=tol)
    if plan.n_max < n_max:
        raise MalformedConfig(
            f"plan was built for n_max={plan.n_max}, asked for {n_max}")

    stub = plan.window(math.pi, (n_max, -(n_max + 1)))
    drop_stub = stub is not None and stub.meets and stub.ess
    dropped = []
    if drop_stub:
        dropped.append({"band": n_max, "t0": "pi",
                        "reason": "partner outside the band range meets it "
                                  "at a Jordan point; window skipped"})

    contributions: Dict = {}
    error_bar = 0.0

    def run_eh():
        return integrate_over_Eh(potential, plan, f, bands, x_out,
                                 audit=audit, tol=tol)

    if mode == "contour":
        def run_arc0():
            return integrate_over_semicircle(potential, plan, f, 0, bands,
                                             x_out, tol=tol)

        def run_arcpi():
            arc_bands = [n for n in bands if not (drop_stub and n == n_max)]
            return integrate_over_semicircle(potential, plan, f, math.pi,
                                             arc_bands, x_out, tol=tol)

        eh, arc0, arcpi = parallel_map(
            lambda fn: fn(), [run_eh, run_arc0, run_arcpi], threads=threads)
        for n in bands:
            contributions[f"E_h:{n}"] = eh.per_band[n]
        for tag, arc in (("arc0", arc0), ("arcpi", arcpi)):
            for n, v in arc.per_band.items():
                contributions[f"{tag}:{n}"] = v
    else:
        windows_0: List[Tuple[str, Tuple[int, ...], bool]] = \
            [("0:0", (0,), True)]
        for n in range(1, n_max + 1):
            w = plan.window(0.0, (n, -n))
            regular = w is None or not (w.meets and w.ess)
            windows_0.append((f"0:{n},{-n}", (n, -n), regular))
        windows_pi: List[Tuple[str, Tuple[int, ...], bool]] = []
        for n in range(0, n_max):
            w = plan.window(math.pi, (n, -(n + 1)))
            regular = w is None or not (w.meets and w.ess)
            windows_pi.append((f"pi:{n},{-(n + 1)}", (n, -(n + 1)), regular))
        if not drop_stub:
            windows_pi.append((f"pi:{n_max}", (n_max,), False))

        def run_b0():
            return _boundary_ladders(potential, plan, f, 0.0, windows_0,
                                     x_out, tol)

        def run_bpi():
            return _boundary_ladders(potential, plan, f, math.pi, windows_pi,
                                     x_out, tol)

        eh, res0, respi = parallel_map(
            lambda fn: fn(), [run_eh, run_b0, run_bpi], threads=threads)
        for n in bands:
            contributions[f"E_h:{n}"] = eh.per_band[n]
        for res in (res0, respi):
            for key, r in res.items():
                contributions[f"window{key}"] = r.profile
                error_bar += r.error_bar

    error_bar += eh.quadrature_error
    x = eh.x

    f_hat = np.zeros(x.size, dtype=complex)
    for v in contributions.values():
        f_hat = f_hat + v
    f_hat /= 2.0 * math.pi

    f_values = f(x)
    l2_err = _l2_on_grid(f_hat - f_values, x)
    f_norm = max(_l2_on_grid(f_values, x), 1e-30)
    tail = _fourier_tail(f, n_max)
    convergence = {
        "fourier_tail": tail,
        "tail_model": tail + 1.0 / max(n_max, 1),
        "per_band_Eh_norm": {
            n: float(np.max(np.abs(eh.per_band[n]))) / (2.0 * math.pi)
            for n in bands},
    }
    return ReconstructionReport(
        x=x, f_hat=f_hat, f_values=f_values, l2_error=l2_err, mode=mode,
        h=h, n_max=n_max, N=plan.N, error_bar=error_bar / (2.0 * math.pi),
        contributions=contributions, convergence=convergence,
        dropped=dropped, parseval=parseval_defect(f),
        meta={"relative_l2_error": l2_err / f_norm,
              "margins": plan.contour_margins})


# -- lambda-domain form ---------------------------------------------------------

class _FoldedEngine:
    """Band terms assembled from lambda-side data, folded onto (0, pi).

    At lam = lam_n(t) the two Bloch solutions are built directly from
    the monodromy and p = sqrt(4 - F^2) = 2 sin t:

        Phi_pm = phi(1) theta(x) + ((phi'(1) - theta(1))/2 pm ip/2) phi(x),

    with multipliers (F pm ip)/2.  The t and -t band terms at the same
    lam combine into

        -(Phi_+ F_- + Phi_- F_+) / (phi(1) F'),

    where F_pm integrates f against the quasiperiodic extension of
    Phi_pm over the whole line (multiplier powers, no e^{ikt} anywhere).
    Integrating this fold over (0, pi) per band reproduces the full
    quasimomentum integral; dt = -F'/p dlam is what cancels p.
    """

    def __init__(self, potential: Potential, bands: Sequence[int], f,
                 x_out, tol: float):
        self.cache = _BandCache(potential, bands, tol)
        self.table = _SliceTable(load_function(f),
                                 np.linspace(0.0, 1.0, self.cache.grid_size))
        self.omap = _output_map(x_out, self.cache.grid_size)
        self.tol = tol

    def folded(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Branch-resolved folded integrand at real t.

        Returns (P, M), each (x_out, band): P is the e^{+it} branch
        (the band's own term at +t), M the e^{-it} branch.  Their sum
        is the fold; windows that pair a band with a partner outside
        the computed range recombine the branches across columns.
        """
        cache, table, omap = self.cache, self.table, self.omap
        lam = cache.eigenvalues(t)
        fsb = integrate_fundamental_batch(cache.potential, lam, tol=self.tol,
                                          grid_size=cache.grid_size,
                                          want_deriv=True)
        M = fsb.monodromy
        F = M[0, 0] + M[1, 1]
        Fp = fsb.dmonodromy[0, 0] + fsb.dmonodromy[1, 1]
        p = 2.0 * math.sin(t)
        half = 0.5 * (M[1, 1] - M[0, 0])
        Phi_p = M[0, 1] * fsb.theta + (half + 0.5j * p) * fsb.phi
        Phi_m = M[0, 1] * fsb.theta + (half - 0.5j * p) * fsb.phi
        mult_p = (F + 1j * p) / 2.0
        mult_m = (F - 1j * p) / 2.0
        den = M[0, 1] * Fp
        small = np.abs(den) < 1e-14 / (1.0 + np.abs(lam))
        if np.any(small):
            ns = [cache.bands[j] for j in np.flatnonzero(small)]
            raise QuadratureFailure(
                f"phi(1) F' vanishes at t={t:.8g} for bands {ns}; the "
                "lambda-side assembly needs an admissible contour")
        w = cache.weights
        base_p = np.einsum("g,kg,gm->km", w, table.rows, Phi_p)
        base_m = np.einsum("g,kg,gm->km", w, table.rows, Phi_m)
        pow_p = np.power(mult_p[None, :], table.ks[:, None])
        pow_m = np.power(mult_m[None, :], table.ks[:, None])
        F_plus = np.sum(pow_p * base_p, axis=0)
        F_minus = np.sum(pow_m * base_m, axis=0)
        term_p = Phi_p[omap.base, :] * (F_minus / den)[None, :]
        term_m = Phi_m[omap.base, :] * (F_plus / den)[None, :]
        out_p = np.power(mult_p[None, :], omap.k[:, None])
        out_m = np.power(mult_m[None, :], omap.k[:, None])
        return -term_p * out_p, -term_m * out_m


def lambda_domain_expansion(potential: Potential, f, h: float, n_range,
                            x_out=None, plan: Optional[ExpansionPlan] = None,
                            tol: float = 1e-10) -> ReconstructionReport:
    """The reconstruction evaluated over the spectrum itself.

    Every band arc is parametrized by t in (0, pi), but the integrand is
    assembled from lambda-side quantities only (see _FoldedEngine), so
    this is an independent evaluation of the same expansion: the branch
    p = 2 sin t, the quasiperiodic extensions through multiplier powers,
    and the closed-form denominator phi(1) F' all enter explicitly here
    and only implicitly in the quasimomentum form.  Boundary windows use
    the same excision ladders, folded to one side.
    """
    potential = load_potential(potential)
    f = load_function(f)
    bands, n_max = _band_list(n_range)
    if x_out is None:
        x_out = np.linspace(-2.0, 2.0, 257)
    if plan is None:
        plan = make_plan(potential, h, n_max, tol=tol)

    engine = _FoldedEngine(potential, bands, f, x_out, tol)
    x = engine.omap.x
    ncols = {n: j for j, n in enumerate(engine.cache.bands)}
    contributions: Dict = {}
    error_bar = 0.0

    # interior arcs: one sweep over (h, pi - h) covers every band's
    # regular part (the fold of E(h)); interior excisions fold to |t|
    cuts = sorted(set(abs(c) for c in plan.excluded))
    acc = {n: np.zeros(x.size, dtype=complex) for n in bands}
    for edges in _segment_edges(h, math.pi - h, cuts):
        nodes, weights = gauss_panel_nodes(edges, _EH_ORDER)
        engine.cache.reset()
        for t, w in zip(nodes, weights):
            P, M = engine.folded(float(t))
            for n in bands:
                acc[n] += w * (P[:, ncols[n]] + M[:, ncols[n]])
    for n in bands:
        contributions[f"arc:{n}"] = acc[n]

    # boundary windows, one-sided: the fold maps the two sides of each
    # window onto one, so the ladders integrate t0 +- (delta, h) with
    # the sign pointing into (0, pi).  Window members are (band, branch)
    # columns; complete pairs take both branches of both bands, while
    # the extreme window at pi recombines the + branch of band n_max
    # with the - branch of its out-of-range partner, which is exactly
    # the two halves of band n_max's own window
    stub = plan.window(math.pi, (n_max, -(n_max + 1)))
    drop_stub = stub is not None and stub.meets and stub.ess
    dropped = []
    if drop_stub:
        dropped.append({"band": n_max, "t0": "pi",
                        "reason": "partner outside the band range meets it "
                                  "at a Jordan point; window skipped"})

    def both(*ns):
        return [(n, br) for n in ns for br in ("p", "m")]

    windows_0 = [("0:0", both(0))] + \
        [(f"0:{n},{-n}", both(n, -n)) for n in range(1, n_max + 1)]
    windows_pi = [(f"pi:{n},{-(n + 1)}", both(n, -(n + 1)))
                  for n in range(0, n_max)]
    stub_partner = -(n_max + 1)
    if not drop_stub:
        windows_pi.append((f"pi:{n_max}", [(n_max, "p"), (stub_partner, "m")]))
    engine_pi = engine if drop_stub else _FoldedEngine(
        potential, bands + [stub_partner], f, x_out, tol)

    deltas = np.sort(np.asarray(plan.pv_delta_ladder, float))[::-1]
    edges, nodes, weights, shell_of = _shell_nodes(h, float(deltas[-1]))
    for t0, sign, windows, eng in ((0.0, 1.0, windows_0, engine),
                                   (math.pi, -1.0, windows_pi, engine_pi)):
        cols = {n: j for j, n in enumerate(eng.cache.bands)}
        shells = {(n, br): np.zeros((edges.size - 1, x.size), dtype=complex)
                  for n in eng.cache.bands for br in ("p", "m")}
        eng.cache.reset()
        for j in np.argsort(-nodes):
            P, M = eng.folded(t0 + sign * float(nodes[j]))
            for n in eng.cache.bands:
                shells[(n, "p")][shell_of[j]] += weights[j] * P[:, cols[n]]
                shells[(n, "m")][shell_of[j]] += weights[j] * M[:, cols[n]]
        for key, members in windows:
            total = sum(shells[m] for m in members)
            est, spread = _extrapolate_rungs(
                deltas, _ladder_rungs(edges, total, deltas),
                f"lambda window t0={t0:.6g} {key}")
            contributions[f"window{key}"] = est
            error_bar += spread

    f_hat = np.zeros(x.size, dtype=complex)
    for v in contributions.values():
        f_hat = f_hat + v
    f_hat /= 2.0 * math.pi

    f_values = f(x)
    l2_err = _l2_on_grid(f_hat - f_values, x)
    f_norm = max(_l2_on_grid(f_values, x), 1e-30)
    tail = _fourier_tail(f, n_max)
    return ReconstructionReport(
        x=x, f_hat=f_hat, f_values=f_values, l2_error=l2_err, mode="lambda",
        h=h, n_max=n_max, N=plan.N, error_bar=error_bar / (2.0 * math.pi),
        contributions=contributions,
        convergence={"fourier_tail": tail,
                     "tail_model": tail + 1.0 / max(n_max, 1)},
        dropped=dropped, parseval=parseval_defect(f),
        meta={"relative_l2_error": l2_err / f_norm})


# -- diagnostics -----------------------------------------------------------------

def remainder_diagnostics(potential: Potential, f, t_grid: Sequence[float],
                          n_cuts: Sequence[int],
                          tol: float = 1e-10) -> dict:
    """Tail of the fiber expansion against its Fourier-tail envelope.

    For each real quasimomentum in t_grid and each cut n the remainder
    f_t - sum_{|k| <= n} a_k Psi_k is measured in L2 of the period cell
    and compared with the envelope

        ||R_n||^2 <= c (sum_{|k| > n} |(f_t, e^{i(2 pi k + t) x})|^2 + 1/n).

    Over (-m, m) both sides just pick up the factor 2m (real t makes
    the translates isometric), so the fiber ratio is what is reported.
    Returns the sample table and the fitted envelope constant.
    """
    potential = load_potential(potential)
    f = load_function(f)
    n_cuts = sorted(set(int(n) for n in n_cuts))
    n_top = n_cuts[-1]
    bands = list(range(-n_top, n_top + 1))
    cache = _BandCache(potential, bands, tol)
    grid = np.linspace(0.0, 1.0, cache.grid_size)
    table = _SliceTable(f, grid)
    w = cache.weights
    k_extent = n_top + 80

    rows = []
    for t in t_grid:
        t = float(t)
        cache.reset()
        node = cache.node(t)
        terms = cache.terms(node, table.at(t))
        prof = table.at(t)
        ks = np.arange(-k_extent, k_extent + 1)
        waves = np.exp(1j * np.outer(grid, 2.0 * math.pi * ks + t))
        coeffs = np.einsum("g,gk,g->k", w, np.conj(waves), prof)
        for n in n_cuts:
            cols = [j for j, b in enumerate(cache.bands) if abs(b) <= n]
            partial = terms[:, cols].sum(axis=1)
            rem = float(np.sqrt(np.real(
                np.sum(w * np.abs(prof - partial) ** 2))))
            tail2 = float(np.sum(np.abs(coeffs[np.abs(ks) > n]) ** 2))
            envelope = tail2 + 1.0 / n
            rows.append({"t": t, "n": n, "remainder_l2": rem,
                         "fourier_tail_sq": tail2, "envelope": envelope,
                         "ratio": rem ** 2 / envelope})
    c_fit = max(r["ratio"] for r in rows)
    decreasing = all(
        rows[i]["remainder_l2"] >= rows[i + 1]["remainder_l2"] - 1e-12
        for i in range(len(rows) - 1) if rows[i]["t"] == rows[i + 1]["t"])
    return {"rows": rows, "c_fit": c_fit, "monotone": decreasing}


def theorem10_check(potential: Potential, f, h: float,
                    n_values: Sequence[int], delta: float = 1e-4,
                    tol: float = 1e-10) -> dict:
    """Do the single-band window integrals settle without pairing?

    For each band n the unpaired integral over delta < |t - t0| < h is
    evaluated at excisions delta and delta/2 for both boundary points.
    When no essential singularity is present the two values agree and
    their norms decay in n; near an essential singularity the unpaired
    integral keeps moving with the excision and the verdict flips.
    """
    potential = load_potential(potential)
    f = load_function(f)
    rows = []
    obstructed = False
    for n in sorted(set(int(v) for v in n_values)):
        for t0 in (0.0, math.pi):
            edges, nodes, weights, shell_of = _shell_nodes(h, delta / 2.0)
            cache = _BandCache(potential, [n], tol)
            tbl = _SliceTable(f, np.linspace(0.0, 1.0, cache.grid_size))
            omap = _output_map(np.linspace(-1.0, 1.0, 65), cache.grid_size)
            shells = np.zeros((edges.size - 1, omap.x.size), dtype=complex)
            for side in (1.0, -1.0):
                cache.reset()
                for j in np.argsort(-nodes):
                    node = cache.node(t0 + side * nodes[j])
                    term = cache.terms(node, tbl.at(node.t))[omap.base, 0]
                    shells[shell_of[j]] += (
                        weights[j] * term * np.exp(1j * omap.k * node.t))
            I1, I2 = _ladder_rungs(edges, shells,
                                   np.array([delta, delta / 2.0]))
            n1 = float(np.max(np.abs(I1)))
            move = float(np.max(np.abs(I2 - I1)))
            stable = move <= 0.02 * max(n1, 1e-12) + 1e-10
            rows.append({"n": n, "t0": t0, "norm": n1, "delta_move": move,
                         "stable": stable})
            if not stable:
                obstructed = True
    by_n: Dict[int, float] = {}
    for r in rows:
        by_n[r["n"]] = max(by_n.get(r["n"], 0.0), r["norm"])
    ns = sorted(by_n)
    decaying = all(by_n[ns[i + 1]] <= 2.0 * by_n[ns[i]] + 1e-10
                   for i in range(len(ns) - 1)) and \
        (len(ns) < 2 or by_n[ns[-1]] <= max(by_n[ns[0]], 1e-12))
    verdict = "PLAIN_EXPANSION_OK" if (not obstructed and decaying) \
        else "ESS_OBSTRUCTION"
    return {"verdict": verdict, "rows": rows, "sup_by_n": by_n}
