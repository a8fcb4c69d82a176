"""Bloch eigenvalues, band tracking, and multiple-point location.

For fixed quasimomentum t the eigenvalues of the fiber operator are the
lam-zeros of Delta(lam, t), i.e. of F(lam) - 2 cos t.  Newton iteration
seeded at the free values (2 pi n + t)^2 does almost all the work; every
seed disc is then audited with an argument-principle winding count, and
missing roots are recovered by quadtree subdivision.  The same quadtree
engine locates the zeros mu_k of F' (candidate multiple eigenvalues).

Numbering convention: bands are labeled so that at the reference
quasimomentum t = pi/2 the real parts of lam_n are ordered like the free
values, i.e. rank 0, 1, 2, ... along increasing Re corresponds to
n = 0, -1, +1, -2, +2, ...
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .discriminant import discriminant_batch
from .errors import (ContinuationLost, MissedRoot, NewtonDiverged,
                     ToleranceNotMet, WindingMismatch)
from .potential import Potential

TWO_PI = 2.0 * math.pi


def free_seed(n, t):
    return (TWO_PI * np.asarray(n) + np.asarray(t)) ** 2 + 0j


def n_of_rank(j: int) -> int:
    """Rank along increasing Re lam at t = pi/2 -> band index."""
    return ((j + 1) // 2) * (1 if j % 2 == 0 else -1)


# -- winding counts ------------------------------------------------------

class _PathGrazesZero(Exception):
    """The integration path runs numerically through a zero."""


def _adaptive_winding(point_of_s, fn, n0: int = 64, budget: int = 65536,
                      theta_max: float = 1.0) -> int:
    """Argument-principle winding of fn along a closed path s -> z(s),
    s in [0, 1).  Segments whose phase jump exceeds theta_max are bisected
    until every jump is small, then the whole partition is doubled once as
    a verification pass.  Raises on grazing zeros or budget exhaustion."""
    svals = np.arange(n0) / n0
    vals = np.asarray(fn(np.array([point_of_s(s) for s in svals])))
    scale = float(np.max(np.abs(vals)))
    verified = False
    while svals.size <= budget:
        if np.min(np.abs(vals)) < 1e-13 * max(scale, 1e-30):
            raise _PathGrazesZero
        jumps = np.angle(np.roll(vals, -1) / vals)
        bad = np.flatnonzero(np.abs(jumps) >= theta_max)
        if bad.size == 0:
            w = int(round(float(np.sum(jumps)) / TWO_PI))
            if verified:
                return w
            verified = True
            bad = np.arange(svals.size)   # doubling pass
        else:
            verified = False
        s_next = np.roll(svals, -1).copy()
        s_next[-1] += 1.0
        mid = 0.5 * (svals[bad] + s_next[bad])
        new_vals = np.asarray(fn(np.array([point_of_s(s) for s in mid])))
        scale = max(scale, float(np.max(np.abs(new_vals))))
        svals = np.concatenate([svals, mid % 1.0])
        vals = np.concatenate([vals, new_vals])
        order = np.argsort(svals)
        svals, vals = svals[order], vals[order]
    raise WindingMismatch("winding budget exhausted on closed path")


def winding_on_circle(fn: Callable[[np.ndarray], np.ndarray], center: complex,
                      radius: float, max_nudges: int = 12) -> int:
    """Argument-principle count of zeros of fn inside a circle.  Grazing
    zeros are handled by nudging the radius."""
    for k in range(max_nudges):
        try:
            return _adaptive_winding(
                lambda s: center + radius * cmath.exp(2j * math.pi * s), fn)
        except _PathGrazesZero:
            radius *= 1.000619 + 3.1e-4 * k
    raise WindingMismatch(
        f"circle({center:.6g}, r={radius:.3g}) keeps grazing zeros")


def _rect_point(rect, s: float) -> complex:
    a, b, c, d = rect  # Re in [a, b], Im in [c, d]
    u = 4.0 * (s % 1.0)
    if u < 1.0:
        return complex(a + (b - a) * u, c)
    if u < 2.0:
        return complex(b, c + (d - c) * (u - 1.0))
    if u < 3.0:
        return complex(b - (b - a) * (u - 2.0), d)
    return complex(a, d - (d - c) * (u - 3.0))


def winding_on_rect(fn, rect) -> int:
    return _adaptive_winding(lambda s: _rect_point(rect, s), fn)


_SPLIT_FRACTIONS = (0.5, 0.4238, 0.5772, 0.3618, 0.6382, 0.4472, 0.5528)


def _choose_split(fn, rect):
    """Split coordinates for quadtree subdivision, chosen among a few
    candidate lines to maximize the margin min |fn| along the line (zeros
    sitting on a subdivision line would stall the winding walk)."""
    a, b, c, d = rect
    ys = np.linspace(c, d, 17)
    xs = np.linspace(a, b, 17)
    best_x = best_y = None
    score_x = score_y = -1.0
    for f in _SPLIT_FRACTIONS:
        xc = a + f * (b - a)
        m = float(np.min(np.abs(fn(xc + 1j * ys))))
        if m > score_x:
            score_x, best_x = m, xc
        yc = c + f * (d - c)
        m = float(np.min(np.abs(fn(xs + 1j * yc))))
        if m > score_y:
            score_y, best_y = m, yc
    return best_x, best_y


def find_zeros_in_rect(fn, dfn, rect, max_depth: int = 44,
                       multi_tol: float = 1e-7) -> List[Tuple[complex, int]]:
    """All zeros of an analytic `fn` in a rectangle, with multiplicity.

    `fn` maps a lam array to values; `dfn` gives derivatives for Newton
    polish.  Clusters tighter than multi_tol * scale are reported as one
    multiple zero.  Quadtree subdivision is driven purely by winding
    counts, so nothing is missed at the audited sampling density.  If the
    window boundary grazes a zero the window is padded slightly, so the
    result may include zeros marginally outside the requested rectangle.
    """
    a, b, c, d = rect
    for k in range(24):
        try:
            return _find_zeros(fn, dfn, (a, b, c, d), 0, max_depth, multi_tol)
        except _PathGrazesZero:
            pad = (6.19e-4 + 2.7e-4 * k) * max(b - a, d - c)
            a, b, c, d = a - pad, b + pad, c - pad, d + pad
    raise WindingMismatch(f"window {rect} keeps grazing zeros of the target")


def _find_zeros(fn, dfn, rect, depth, max_depth, multi_tol):
    a, b, c, d = rect
    w = winding_on_rect(fn, rect)
    if w == 0:
        return []
    center = complex(0.5 * (a + b), 0.5 * (c + d))
    diam = math.hypot(b - a, d - c)
    scale = 1.0 + abs(center)
    if w == 1 or diam < multi_tol * math.sqrt(scale):
        z = _newton_polish(fn, dfn, center, diam, mult=w)
        inside = (z is not None and a <= z.real <= b and c <= z.imag <= d)
        if not inside:
            if diam < multi_tol * math.sqrt(scale):
                return [(center, w)]   # unresolvable cluster: multiple zero
            z = None
        if z is not None and w == 1:
            return [(z, 1)]
        if z is not None and w > 1:
            # maybe a true multiple zero: all roots collapsed to z.  An
            # m-fold zero is localizable only to ~noise^(1/m), so widen
            # the certificate circle geometrically before giving up.
            r0 = max(multi_tol * math.sqrt(scale), 1e-12 * scale)
            for fac in (1.0, 4.0, 16.0, 64.0):
                try:
                    wz = winding_on_circle(fn, z, fac * r0)
                except WindingMismatch:
                    continue
                if wz == w:
                    return [(z, w)]
                if wz > w:
                    break     # circle swallowed foreign zeros; subdivide
    if depth >= max_depth:
        raise MissedRoot(f"quadtree exhausted at {rect} with winding {w}")
    xm, ym = _choose_split(fn, rect)
    out: List[Tuple[complex, int]] = []
    for sub in ((a, xm, c, ym), (xm, b, c, ym), (a, xm, ym, d), (xm, b, ym, d)):
        out.extend(_find_zeros(fn, dfn, sub, depth + 1, max_depth, multi_tol))
    got = sum(m for _, m in out)
    if got != w:
        raise MissedRoot(f"rect {rect}: winding {w} but recovered {got} roots")
    return _merge_clusters(out, multi_tol)


def _newton_polish(fn, dfn, z0: complex, trust: float, mult: int = 1,
                   iters: int = 60):
    """Newton with the multiplicity-corrected step mult*f/f', quadratic
    even at an m-fold zero.  Converges on step size or on the residual
    reaching the noise floor (an m-fold zero cannot be localized better
    than (noise)^(1/m) anyway)."""
    z = complex(z0)
    tiny = 1e-14 * (1.0 + abs(z0))
    floor = 1e-13 * (1.0 + abs(complex(fn(np.array([z0]))[0])))
    step = complex(np.inf)
    for _ in range(iters):
        f = complex(fn(np.array([z]))[0])
        if abs(f) < floor:
            return z
        df = complex(dfn(np.array([z]))[0])
        if df == 0:
            return None
        step = mult * f / df
        if abs(step) > trust:
            step *= trust / abs(step)
        z -= step
        if abs(step) < tiny:
            return z
        if abs(z - z0) > 4.0 * trust + 1.0:
            return None
    return z if abs(step) < 1e4 * tiny else None


def _merge_clusters(roots: List[Tuple[complex, int]], multi_tol: float):
    merged: List[Tuple[complex, int]] = []
    for z, m in sorted(roots, key=lambda r: (r[0].real, r[0].imag)):
        for i, (zc, mc) in enumerate(merged):
            if abs(z - zc) < multi_tol * math.sqrt(1.0 + abs(zc)):
                merged[i] = ((zc * mc + z * m) / (mc + m), mc + m)
                break
        else:
            merged.append((z, m))
    return merged


# -- Newton driver on the characteristic equation ------------------------

def newton_eigenvalues(potential: Potential, t: complex, seeds: np.ndarray,
                       tol: float = 1e-10, caps: Optional[np.ndarray] = None,
                       max_iter: int = 40):
    """Batched Newton for F(lam) = 2 cos t from the given seeds.

    Returns (lam, resid, steps_taken).  Convergence is declared when the
    Newton step falls below tol * (1 + |lam|); per-seed trust caps stop
    band hopping.  Raises NewtonDiverged listing stragglers.
    """
    target = 2.0 * cmath.cos(complex(t))
    lam = np.array(seeds, dtype=complex)
    if caps is None:
        caps = np.full(lam.shape, np.inf)
    active = np.ones(lam.shape, dtype=bool)
    resid = np.full(lam.shape, np.inf)
    # at a multiple root Newton converges linearly and the residual hits
    # the discriminant noise floor long before the step test fires
    floor = 5e-14 * (1.0 + abs(target))
    for it in range(max_iter):
        if not np.any(active):
            break
        F, Fp = discriminant_batch(potential, lam[active], tol=min(tol, 1e-10))
        R = F - target
        resid[active] = np.abs(R)
        idx = np.flatnonzero(active)
        at_floor = np.abs(R) < floor
        safe = np.where(np.abs(Fp) > 1e-300, Fp, 1e-300)
        step = R / safe
        step[at_floor] = 0.0
        cap = caps[active]
        over = np.abs(step) > cap
        step[over] *= (cap[over] / np.abs(step[over]))
        # near-double roots: F' ~ 0 makes plain Newton crawl; a half step
        # on the paired root is the standard damping
        crawl = (np.abs(Fp) < 1e-6) & (np.abs(R) > 1e-12)
        step[crawl] *= 0.5
        lam_active = lam[active] - step
        lam[active] = lam_active
        done = at_floor | (np.abs(step) < tol * (1.0 + np.abs(lam_active)))
        active[idx[done]] = False
    if np.any(active):
        raise NewtonDiverged(
            f"{int(np.sum(active))} seeds failed at t={t}: "
            f"worst residual {float(np.max(resid[active])):.3g}")
    return lam, resid


def _refine_double(potential: Potential, z0: complex, target: complex,
                   tol: float = 1e-10):
    """Polish a suspected double root by Newton on F' (which has a simple,
    well-conditioned zero there).  Returns the refined point if F still
    matches the characteristic equation at noise level, else None."""
    z = complex(z0)
    for _ in range(30):
        d = 1e-5 * math.sqrt(1.0 + abs(z))
        _, fps = discriminant_batch(potential, [z - d, z, z + d], tol=1e-10)
        fpp = (fps[2] - fps[0]) / (2.0 * d)
        if fpp == 0:
            return None
        step = fps[1] / fpp
        z -= step
        if abs(step) < 1e-13 * (1.0 + abs(z)):
            break
    F, _ = discriminant_batch(potential, [z], tol=1e-10, want_deriv=False)
    if abs(F[0] - target) <= 1e-11 * (1.0 + abs(target)):
        return z
    return None


@dataclass
class BlochEigenvalue:
    """One root of F(lam) = 2 cos t labeled by its band index.

    A multiple eigenvalue is reported under every participating band
    index, sharing the lam value and the algebraic multiplicity.
    """
    n: int
    t: complex
    lam: complex
    algebraic_multiplicity: int = 1
    newton_residual: float = 0.0


def solve_eigenvalues(potential: Potential, t: complex,
                      index_range: Sequence[int], tol: float = 1e-10,
                      audit: bool = True) -> List[BlochEigenvalue]:
    """Eigenvalues for the requested band indices at quasimomentum t.

    Each root is audited against the argument principle in its seed disc;
    a mismatch triggers quadtree recovery inside the disc, so the result
    carries all roots in the union of seed discs, counted with
    multiplicity (recovered extras are labeled by the nearest seed).
    """
    idx = np.asarray(sorted(set(int(n) for n in index_range)), dtype=int)
    t_seed = np.real(t) if abs(np.imag(t)) < 1e-14 else t
    seeds = free_seed(idx, t_seed)
    # trust radius: a fraction of the gap to the adjacent-index seeds
    # (these bound the disc in which n's root is the nearest one)
    caps = np.empty(idx.shape)
    for j, n in enumerate(idx):
        gaps = [abs(free_seed(n + d, np.real(t)) - seeds[j].real)
                for d in (-1, 1)]
        gaps = [g for g in gaps if g > 1e-9]
        caps[j] = 0.45 * min(gaps) + 0.5 if gaps else 0.5
    lam, resid = newton_eigenvalues(potential, t, seeds, tol, caps)

    # multiple roots come out of Newton with linear-convergence fuzz of
    # order sqrt(noise/F''); snap close pairs onto the zero of F'
    target = 2.0 * cmath.cos(complex(t))
    for a in range(lam.size):
        for b in range(a + 1, lam.size):
            gap = abs(lam[a] - lam[b])
            scale = math.sqrt(1.0 + abs(lam[a]))
            if 1e-12 * scale < gap < 1e-5 * scale:
                mu = _refine_double(potential, 0.5 * (lam[a] + lam[b]), target)
                if mu is not None:
                    lam[a] = lam[b] = mu

    # cluster identical roots (true multiple eigenvalues)
    roots: List[Tuple[complex, int]] = []
    for z in lam:
        for i, (zc, mc) in enumerate(roots):
            if abs(z - zc) < 1e-7 * math.sqrt(1.0 + abs(zc)):
                roots[i] = ((zc * mc + z) / (mc + 1), mc + 1)
                break
        else:
            roots.append((complex(z), 1))

    extras: List[BlochEigenvalue] = []
    if audit:
        target = 2.0 * cmath.cos(complex(t))

        def fn(zs):
            F, _ = discriminant_batch(potential, zs, tol=1e-10, want_deriv=False)
            return F - target

        def dfn(zs):
            _, Fp = discriminant_batch(potential, zs, tol=1e-10)
            return Fp

        for j, s in enumerate(seeds):
            r = caps[j]
            found = [(z, m) for z, m in roots if abs(z - s) < r]
            try:
                w = winding_on_circle(fn, complex(s), float(r))
            except WindingMismatch:
                continue  # audit inconclusive at this disc; Newton result stands
            have = sum(m for _, m in found)
            if w > have:
                rect = (s.real - r, s.real + r, s.imag - r, s.imag + r)
                rec = find_zeros_in_rect(fn, dfn, rect)
                for z, m in rec:
                    if abs(z - s) > r:
                        continue
                    if all(abs(z - zc) > 1e-7 * math.sqrt(1.0 + abs(zc))
                           for zc, _ in roots):
                        roots.append((z, m))
                        extras.append(BlochEigenvalue(
                            n=int(idx[j]), t=complex(t), lam=z,
                            algebraic_multiplicity=m,
                            newton_residual=float(abs(fn(np.array([z]))[0]))))

    out = []
    for j, n in enumerate(idx):
        z = complex(lam[j])
        mult = 1
        for zc, mc in roots:
            if abs(z - zc) < 1e-7 * math.sqrt(1.0 + abs(zc)):
                mult = mc
                break
        out.append(BlochEigenvalue(n=int(n), t=complex(t), lam=z,
                                   algebraic_multiplicity=mult,
                                   newton_residual=float(resid[j])))
    return out + extras


@dataclass
class BlochBand:
    n: int
    t: np.ndarray
    lam: np.ndarray
    partner_lam: np.ndarray          # the jointly tracked paired branch
    collision: np.ndarray            # bool: |lam - partner| below sqrt(tol)
    partner_n_low: int = 0           # partner index near t = 0
    partner_n_high: int = 0          # partner index near t = pi

    @property
    def samples(self) -> List[BlochEigenvalue]:
        return [BlochEigenvalue(n=self.n, t=complex(tv), lam=complex(zv),
                                algebraic_multiplicity=2 if c else 1)
                for tv, zv, c in zip(self.t, self.lam, self.collision)]


def _deflated_second_root(potential, t, lam1, seed, tol):
    """Newton on Delta(lam)/(lam - lam1) to pull the root paired with lam1."""
    target = 2.0 * cmath.cos(complex(t))
    z = complex(seed)
    for _ in range(60):
        F, Fp = discriminant_batch(potential, [z], tol=1e-10)
        g = (F[0] - target)
        if abs(g) < 5e-14 * (1.0 + abs(target)):
            return z
        denom = Fp[0] * (z - lam1) - g
        if denom == 0:
            raise NewtonDiverged("deflation denominator vanished")
        step = g * (z - lam1) / denom
        z -= step
        if abs(step) < tol * (1.0 + abs(z)):
            return z
    raise NewtonDiverged(f"deflated Newton at t={t} from seed {seed}")


def track_band(potential: Potential, n: int, t_grid: np.ndarray,
               tol: float = 1e-10) -> BlochBand:
    """Continuation of lam_n over a t-grid in [0, pi], tracked jointly
    with its boundary partner (-n near t = 0, -(n+1) near t = pi) so the
    two branches stay assigned continuously through near-collisions.
    Raises ContinuationLost when a step moves further than the local
    trust radius allows (caller should refine the grid)."""
    t_grid = np.asarray(t_grid, dtype=float)
    lo = -n if n != 0 else -1          # band 0 has no distinct 0-partner
    hi = -(n + 1)
    lam = np.empty(t_grid.size, dtype=complex)
    par = np.empty(t_grid.size, dtype=complex)
    coll = np.zeros(t_grid.size, dtype=bool)
    prev = None
    prev_partner = lo
    for j, t in enumerate(t_grid):
        partner = lo if t <= 0.5 * math.pi else hi
        if prev is None:
            seeds = free_seed(np.array([n, partner]), t)
        else:
            seeds = prev  # continuation seed: previous pair
            if prev_partner != partner:
                seeds = np.array([prev[0], free_seed(partner, t)])
        other = partner if partner != n else n + 1
        cap = 0.45 * abs(free_seed(n, t) - free_seed(other, t)) + 0.5
        got, _ = newton_eigenvalues(potential, t, np.asarray(seeds, dtype=complex),
                                    tol, caps=np.array([cap, cap]))
        z1, z2 = complex(got[0]), complex(got[1])
        sep_tol = math.sqrt(tol) * math.sqrt(1.0 + abs(z1))
        if abs(z1 - z2) < 1e-7 * math.sqrt(1.0 + abs(z1)):
            # both seeds fell onto one root: either a true double point or
            # a lost partner; try deflation, fall back to the double point
            try:
                z2 = _deflated_second_root(potential, t, z1,
                                           free_seed(partner, t), tol)
            except NewtonDiverged:
                z2 = z1
        coll[j] = abs(z1 - z2) < sep_tol
        if prev is not None and not coll[j]:
            # continuity assignment: pick the pairing minimizing movement
            keep = abs(z1 - prev[0]) + abs(z2 - prev[1])
            swap = abs(z2 - prev[0]) + abs(z1 - prev[1])
            if swap < keep:
                z1, z2 = z2, z1
            if j > 0 and keep > 1e-9:
                dt = max(t - t_grid[j - 1], 1e-12)
                slope = abs(z1 - prev[0]) / dt
                if j > 1 and slope > 40.0 * (1.0 + _local_slope(lam, t_grid, j)):
                    raise ContinuationLost(
                        f"band {n}: jump {abs(z1 - prev[0]):.3g} at t={t:.6g}; "
                        "refine the t-grid")
        lam[j], par[j] = z1, z2
        prev = np.array([z1, z2])
        prev_partner = partner
    return BlochBand(n=n, t=t_grid, lam=lam, partner_lam=par, collision=coll,
                     partner_n_low=lo, partner_n_high=hi)


def _local_slope(lam, t_grid, j):
    num = abs(lam[j - 1] - lam[j - 2])
    den = max(float(t_grid[j - 1] - t_grid[j - 2]), 1e-12)
    return num / den


@dataclass
class CriticalPoint:
    """Zero of F' with its characteristic quasimomentum."""
    mu: complex
    t: complex              # arccos(F(mu)/2), Re in [0, pi], Im >= 0 on the cut
    m: int                  # algebraic multiplicity of mu as an eigenvalue
    F: complex
    t_is_real: bool


def arccos_halfplane(w: complex) -> complex:
    """Principal arccos with Re in [0, pi]; on the real cuts |w| >= 1 the
    sign of the imaginary part is normalized to Im >= 0 (both signs solve
    cos t = w there)."""
    t = complex(np.arccos(complex(w)))
    eps = 1e-12 * (1.0 + abs(w))
    if t.imag < 0 and (t.real < 1e-9 or t.real > math.pi - 1e-9 or abs(w.imag) < eps):
        t = t.conjugate()
    return t


def find_multiple_eigenvalues(potential: Potential, window, tol: float = 1e-10,
                              t_real_tol: float = 3e-6) -> List[CriticalPoint]:
    """Multiple eigenvalues in the window: critical points of F whose
    characteristic quasimomentum is real, i.e. which actually lie on the
    spectrum.  Complex-t critical points (gap interiors) are dropped; use
    find_critical_points for the unfiltered list.

    The real-t cutoff is calibrated, not arbitrary: Im t at a critical
    point scales like sqrt(| |F| - 2 |), so discriminant noise of 1e-13
    produces Im t up to ~1e-6 at genuinely multiple eigenvalues, while
    the narrowest gap that double precision can resolve as open sits a
    decade above the default cutoff.
    """
    return [c for c in find_critical_points(potential, window, tol, t_real_tol)
            if c.t_is_real]


def find_critical_points(potential: Potential, window, tol: float = 1e-10,
                         t_real_tol: float = 3e-6) -> List[CriticalPoint]:
    """All zeros mu_k of F' in the window (Re_min, Re_max, Im_min, Im_max),
    with t_k = arccos(F(mu_k)/2) and multiplicity from the winding of
    F - F(mu_k) around mu_k (not from F' alone)."""

    def fp(zs):
        _, Fp = discriminant_batch(potential, zs, tol=1e-10)
        return Fp

    def fpp(zs):
        d = 1e-5 * np.sqrt(1.0 + np.abs(zs))
        _, a = discriminant_batch(potential, zs + d, tol=1e-10)
        _, b = discriminant_batch(potential, zs - d, tol=1e-10)
        return (a - b) / (2.0 * d)

    re_min, re_max, im_min, im_max = window
    zeros = find_zeros_in_rect(fp, fpp, (re_min, re_max, im_min, im_max))
    out: List[CriticalPoint] = []
    for mu, _ in zeros:
        F, _ = discriminant_batch(potential, [mu], tol=1e-10, want_deriv=False)
        Fmu = complex(F[0])

        def fd(zs, Fmu=Fmu):
            Fz, _ = discriminant_batch(potential, zs, tol=1e-10, want_deriv=False)
            return Fz - Fmu

        m = None
        r = 0.05 * math.sqrt(1.0 + abs(mu))
        for _ in range(6):  # shrink until no foreign roots contaminate
            try:
                w1 = winding_on_circle(fd, mu, r)
                w2 = winding_on_circle(fd, mu, 0.5 * r)
            except WindingMismatch:
                r *= 0.5
                continue
            if w1 == w2 and w1 >= 2:
                m = w1
                break
            r *= 0.25
        if m is None:
            m = 2  # simple zero of F' isolated from other roots of F - F(mu)
        tk = arccos_halfplane(Fmu / 2.0)
        out.append(CriticalPoint(mu=complex(mu), t=tk, m=int(m), F=Fmu,
                                 t_is_real=abs(tk.imag) <= t_real_tol))
    out.sort(key=lambda c: (c.mu.real, c.mu.imag))
    return out


@dataclass
class AsymptoticWindow:
    h: float
    N: int
    M_hat: float     # empirical constant in |lam_n(t) - (2 pi n + t)^2| <= M/n


def determine_asymptotic_window(potential: Potential, h: float,
                                tol: float = 1e-9, N_cap: int = 64) -> AsymptoticWindow:
    """Smallest N such that for N < |n| <= 2N the eigenvalues stay simple
    and disc-isolated on a probe set of quasimomenta, plus the fitted
    deviation constant M_hat."""
    probes = [h, 0.5 * math.pi, math.pi - h]
    N = 1
    while N < N_cap:
        ok = True
        M_hat = 0.0
        for n in range(N + 1, 2 * N + 1):
            for sgn in (1, -1):
                for t in probes:
                    seed = free_seed(sgn * n, t)
                    try:
                        lam, _ = newton_eigenvalues(
                            potential, t, np.array([seed]), tol,
                            caps=np.array([0.45 * 8.0 * math.pi ** 2 * n]))
                    except NewtonDiverged:
                        ok = False
                        break
                    dev = abs(lam[0] - seed)
                    M_hat = max(M_hat, dev * n)
                    if dev > 15.0 * math.pi * n * max(h, 0.05) + 1.0:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return AsymptoticWindow(h=h, N=N, M_hat=M_hat)
        N *= 2
    raise ToleranceNotMet(f"no asymptotic window below N={N_cap}")
