"""Multiple eigenvalues of the Hill operator: detection follow-up,
multiplicity structure, and classification.

A multiple Bloch eigenvalue mu = lambda_n(t0) (zero of F' on the
spectrum, F(mu) = 2 cos t0) is one of three things, and the distinction
decides how the spectral expansion must treat it:

    REGULAR_MULTIPLE       geometric multiplicity 2; projections stay
                           bounded, nothing special happens.
    SPECTRAL_SINGULARITY   geometric multiplicity 1 at interior
                           t0 in (0, pi); projection norms blow up but
                           remain integrable across the point.
    ESS                    geometric multiplicity 1 at t0 in {0, pi};
                           the blowup is non-integrable and the
                           expansion needs principal-value bundles.

The classifying observable is alpha_n(t) = (Psi_{n,t}, Psi*_{n,t}), the
pairing of the normalized eigenfunction with its adjoint partner.  It
vanishes exactly at singular points, like |t - t0|^{(m-1)/m} at interior
ones and |t - t0|^{2(m-1)/m} at the boundary, and stays bounded away
from zero at regular ones, so the fitted exponent beta separates the
classes: beta = 0 regular, 0 < beta < 1 singular, beta >= 1 essential
(read numerically with bands at 0.25 and 0.8).

Two resolution problems shape the implementation:

* Pre-asymptotic plateau.  alpha enters its power law only below a
  crossover |t - t0| set by the size of the Jordan defect of the
  monodromy, and that defect can be tiny: for q = e^{2 pi i x} it decays
  roughly a hundredfold per double point, putting the crossover of the
  fourth one near |t - t0| ~ 1e-8.  A fit across the plateau would
  report beta ~ 0.  The fitter therefore walks a geometric ladder toward
  t0, deepening it until the local slope stabilizes, and evaluates alpha
  on a jet-continued band: lambda(t) comes from inverting the local jet
  of F at mu instead of root-solving F(lam) = 2 cos t, which would drown
  in discriminant noise once |F - 2 cos t0| < 1e-14.  At the continued
  point every ingredient of alpha (profiles, norms, F') is smooth in lam
  and evaluated by ordinary propagation, so the ladder stays well
  conditioned down to |t - t0| ~ 1e-11.

* True double vs avoided crossing.  A pseudo-closed gap (||F(mu)| - 2|
  of order 1e-16, as at the fourth gap of 2 cos 2 pi x) cannot be told
  from an exact double eigenvalue in double precision, yet one point is
  off the real-t spectrum and the other may be an ESS.  Borderline
  candidates are adjudicated by re-running the propagation in extended
  precision (discriminant.mp_monodromy) and measuring the reality defect
  |arccos(F(mu)/2) - t0|; the same probe pins down monodromy entries of
  size 1e-10 that decide geometric multiplicity and the Dirichlet /
  Neumann flags far below the double-precision floor.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .discriminant import (_grid_for, discriminant_batch, mp_discriminant,
                           mp_monodromy)
from .eigenfunctions import g_eigenfunction, phi_eigenfunction
from .errors import (FitUnstable, InconsistentCriteria, NewtonDiverged,
                     ZeroDenominator)
from .odecore import integrate_fundamental
from .potential import Potential
from .quadrature import boole_weights, l2_norm
from .spectrum import (_refine_double, arccos_halfplane,
                       determine_asymptotic_window, find_multiple_eigenvalues,
                       free_seed, solve_eigenvalues)

KLASS_REGULAR = "REGULAR_MULTIPLE"
KLASS_SS = "SPECTRAL_SINGULARITY"
KLASS_ESS = "ESS"

# |arccos(F(mu)/2) - t0| above this marks an avoided crossing (the point
# is off the real-t spectrum); the probe resolves the defect to ~1e-12,
# and genuine doubles measure below 1e-12 while the tightest avoided
# crossing we ever met (fourth gap of 2 cos 2 pi x) measures 1.8e-8.
TRUE_DOUBLE_TOL = 1e-9

_BETA_REGULAR = 0.25       # beta below this: regular multiple point
_BETA_ESS = 0.80           # beta at or above: essential
_SLOPE_STABLE = 0.10       # max local-slope spread of an accepted tail
_BOUNDARY_SNAP = 1e-5      # |t0| or |t0 - pi| below this is boundary


@dataclass
class SingularityRecord:
    """A multiple eigenvalue with everything the expansion needs to know.

    defect is the resolved reality defect |arccos(F(mu)/2) - t0| (NaN
    when no extended-precision probe was available), beta_residual the
    rms log-log residual of the exponent fit over the rungs it used.
    """
    mu: complex
    t0: float
    m: int
    geo_mult: int = 0
    beta: float = float("nan")
    klass: str = ""
    dirichlet_flag: bool = False
    neumann_flag: bool = False
    indices: Tuple[int, ...] = ()
    beta_residual: float = float("nan")
    defect: float = float("nan")


@dataclass
class SingularQuasimomentum:
    """An unrolled quasimomentum pi*n carrying an ESS, with the pair of
    h-intervals that the expansion must excise and treat as a bundle."""
    value: float                                  # pi * n_j > 0
    ess_lambda: complex
    bundle: Tuple[Tuple[float, float], ...]       # ((pi n - h, pi n + h), (-pi n - h, -pi n + h))


# -- geometric multiplicity ----------------------------------------------

def _scaled_gap_entries(monodromy, lam, t0: float) -> Tuple[float, ...]:
    """Entry sizes of M - e^{i t0} I with phi, theta' rescaled by
    sqrt(1+|lam|) so all four are O(1) at a generic lam."""
    e = cmath.exp(1j * t0)
    s = math.sqrt(1.0 + abs(lam))
    return (abs(monodromy[0, 0] - e), abs(monodromy[0, 1]) * s,
            abs(monodromy[1, 0]) / s, abs(monodromy[1, 1] - e))


def geometric_multiplicity(potential: Potential, mu: complex, t0: float,
                           tol: Optional[float] = None) -> int:
    """Number of independent eigenfunctions at the eigenvalue mu of L_t0.

    Returns 2 iff the monodromy at mu equals e^{i t0} I within tol; with
    tol omitted the cutoff is relative, 1e-6 times the size of the same
    (scaled) entries half a level spacing away, where they are O(1).
    One nonzero entry means a Jordan block: multiplicity 1.
    """
    fs = integrate_fundamental(potential, mu, tol=1e-13, grid_size=5,
                               want_deriv=False)
    ent = _scaled_gap_entries(fs.monodromy, mu, t0)
    if tol is None:
        dnb = max(1.0, 0.5 * math.sqrt(1.0 + abs(mu)))
        ref = 0.0
        for sgn in (1.0, -1.0):
            fsn = integrate_fundamental(potential, mu + sgn * dnb, tol=1e-13,
                                        grid_size=5, want_deriv=False)
            ref = max(ref, *_scaled_gap_entries(fsn.monodromy, mu, t0))
        tol = 1e-6 * ref
    return 2 if max(ent) <= tol else 1


# -- jet-continued band and alpha along it --------------------------------

@dataclass
class _BandJet:
    """Local model of the colliding band pair at a double point:
    lam(t0 + s) = lam0 + delta(s), (F2/2) delta^2 + (F3/6) delta^3 =
    2 cos(t0+s) - 2 cos t0."""
    lam0: complex
    t0: float
    F2: complex
    F3: complex
    grid: int
    defect: float = float("nan")
    mp_refined: bool = False


def _probe_point(potential: Potential, lam0: complex, t0: float,
                 F2: complex) -> Tuple[complex, float]:
    """Polish a double point in extended precision and resolve its
    reality defect |arccos(F/2) - t0| to ~1e-12."""
    from mpmath import mp

    with mp.workdps(30):
        z = mp.mpc(lam0)
        for _ in range(2):
            _, Fp = mp_discriminant(potential, complex(z), tol=1e-20,
                                    want_deriv=True)
            z = z - Fp / mp.mpc(F2)
        F = mp_discriminant(potential, complex(z), tol=1e-20)
        defect = float(abs(mp.acos(F / 2) - t0))
        out = complex(z)
    return out, defect


def _make_jet(potential: Potential, mu: complex, t0: float,
              probe: bool = True) -> _BandJet:
    target = 2.0 * math.cos(t0)
    lam0 = _refine_double(potential, complex(mu), target, 1e-12)
    if lam0 is None:
        lam0 = complex(mu)
    d = 3e-3 * math.sqrt(1.0 + abs(lam0))
    _, fps = discriminant_batch(potential, np.array([lam0 - d, lam0, lam0 + d]),
                                tol=1e-13)
    F2 = complex((fps[2] - fps[0]) / (2.0 * d))
    F3 = complex((fps[2] - 2.0 * fps[1] + fps[0]) / (d * d))
    defect = float("nan")
    refined = False
    if probe and potential.source == "fourier" and abs(F2) > 0:
        lam0, defect = _probe_point(potential, lam0, t0, F2)
        refined = True
    grid = _grid_for(abs(lam0), floor=1025)
    return _BandJet(lam0=lam0, t0=t0, F2=F2, F3=F3, grid=grid,
                    defect=defect, mp_refined=refined)


def _jet_lambda(jet: _BandJet, u: float, branch: complex) -> complex:
    """Band position at t = t0 + u.  branch carries both the band choice
    and (at the boundary, where w(u) is even in u) the side."""
    # w = 2 cos(t0+u) - 2 cos t0, written so neither term cancels
    w = (-2.0 * math.sin(jet.t0) * math.sin(u)
         - 4.0 * math.cos(jet.t0) * math.sin(0.5 * u) ** 2)
    delta = branch * cmath.sqrt(2.0 * w / jet.F2)
    for _ in range(2):
        r = 0.5 * jet.F2 * delta * delta + jet.F3 * delta ** 3 / 6.0 - w
        dr = jet.F2 * delta + 0.5 * jet.F3 * delta * delta
        if dr == 0:
            break
        delta -= r / dr
    return jet.lam0 + delta


def _alpha_abs(fs, t: float) -> float:
    """|alpha| at a prescribed (lam, t): |coeff * F'| over the product of
    the pair norms, using whichever assembly (phi or g form) is better
    conditioned.  The modulus is form-independent, so mixing forms
    between rungs is safe."""
    M = fs.monodromy
    s = math.sqrt(1.0 + abs(fs.lam))
    e = cmath.exp(1j * t)
    c_phi = max(abs(M[0, 1]) * s, abs(e - M[0, 0]))
    c_g = max(abs(M[1, 0]) / s, abs(e - M[1, 1]))
    if c_phi >= c_g:
        U, Um, coeff = phi_eigenfunction(fs, t), phi_eigenfunction(fs, -t), M[0, 1]
    else:
        U, Um, coeff = g_eigenfunction(fs, t), g_eigenfunction(fs, -t), M[1, 0]
    w = boole_weights(fs.grid.size)
    nU, nUm = l2_norm(U, w), l2_norm(Um, w)
    floor = 1e-12 * (1.0 + math.sqrt(abs(fs.lam)))
    if nU < floor or nUm < floor:
        raise ZeroDenominator(
            f"pair norms {nU:.2e}, {nUm:.2e} under the noise floor at "
            f"lam={fs.lam:.8g}, t={t:.3e}")
    Fp = fs.dmonodromy[0, 0] + fs.dmonodromy[1, 1]
    return float(abs(coeff * Fp) / (nU * nUm))


def _alpha_on_jet(potential: Potential, jet: _BandJet, u: float,
                  branch: complex) -> float:
    lam = _jet_lambda(jet, u, branch)
    fs = integrate_fundamental(potential, lam, tol=1e-13, grid_size=jet.grid)
    return _alpha_abs(fs, jet.t0 + u)


# -- exponent fit ----------------------------------------------------------

@dataclass
class AlphaFit:
    """Least-squares exponent of |alpha| against |t - t0| on the stable
    tail of a geometric ladder."""
    beta: float
    residual: float
    s_values: np.ndarray = field(repr=False)
    alpha_values: np.ndarray = field(repr=False)
    n_evaluated: int = 0

    def __float__(self) -> float:
        return self.beta


def _stable_tail(s: np.ndarray, a: np.ndarray) -> Optional[Tuple[float, float, int]]:
    """(beta, residual, start-index) of the longest small-s run whose
    local slopes agree within _SLOPE_STABLE; None when no run of at
    least 4 points exists."""
    ls, la = np.log(s), np.log(a)
    slopes = np.diff(la) / np.diff(ls)
    best = None
    start = 0
    for stop in range(1, len(slopes) + 1):
        run = slopes[start:stop]
        if run.max() - run.min() > _SLOPE_STABLE:
            start = stop - 1
            run = slopes[start:stop]
        # runs reaching the deepest rung win; among those prefer length
        if stop == len(slopes) and stop - start >= 3:
            beta, c = np.polyfit(ls[start:], la[start:], 1)
            resid = float(np.sqrt(np.mean((la[start:] - beta * ls[start:] - c) ** 2)))
            best = (float(beta), resid, start)
    return best


def fit_alpha_exponent(potential: Potential, k: int, t0: float,
                       t_samples: Sequence[float], tol: float = 1e-10) -> AlphaFit:
    """Exponent beta of |alpha_k(t)| ~ |t - t0|^beta from a geometric
    ladder of quasimomenta approaching t0.

    The provided rungs are a starting point: when the local log-log
    slope has not stabilized by the deepest rung (the pre-asymptotic
    plateau of a small Jordan defect), the ladder is extended toward t0,
    down to |t - t0| ~ 1e-11, until four consecutive rungs agree on the
    slope.  A flat tail is itself the signature of the plateau, so
    beta ~ 0 is only believed once the ladder has been pushed to its
    depth floor.  The fit is refused (FitUnstable) when no stable tail
    emerges, when its rms residual exceeds 0.2, or when the jet-continued
    band the deep rungs are evaluated on fails to match a directly solved
    eigenvalue at the shallow end.

    At a simple eigenvalue (no collision at (k, t0)) the ladder is used
    as given and the slope is just fit: alpha is continuous there, so
    beta ~ 0 with a tiny residual.
    """
    sides = sorted({1.0 if t > t0 else -1.0 for t in t_samples if t != t0})
    if not sides:
        raise FitUnstable("no usable rungs: all samples sit at t0")
    s_init = sorted({abs(t - t0) for t in t_samples if t != t0}, reverse=True)

    ref = solve_eigenvalues(potential, t0, [k], tol=tol, audit=False)
    entry = next(ev for ev in ref if ev.n == k)
    # multiplicity seen from band k alone misses the partner band, so
    # ask which indices actually meet at this eigenvalue
    if len(_meeting_indices(potential, entry.lam, t0, tol)) < 2:
        return _fit_simple(potential, k, t0, t_samples, tol)

    jet = _make_jet(potential, entry.lam, t0)
    # validate at the deepest provided rung: at interior points the
    # band offset grows like sqrt(s) and the jet is only trustworthy
    # well inside its radius of convergence
    _validate_jet(potential, jet, sides, s_init[-1])

    s_floor = 1e-11 if jet.mp_refined else 3e-7
    s_list = list(s_init)
    alphas: dict = {}
    for _ in range(64):
        for s in s_list:
            if s in alphas:
                continue
            vals = []
            for side in sides:
                for b in (1.0, -1.0):
                    try:
                        vals.append(_alpha_on_jet(potential, jet, side * s, b))
                    except ZeroDenominator:
                        pass
            if not vals:
                s_floor = max(s_floor, s * 1.001)  # noise floor reached
                continue
            # both colliding bands share the exponent; pooling them (and
            # the two sides) by geometric mean cancels O(1) asymmetries
            alphas[s] = float(np.exp(np.mean(np.log(vals))))
        ss = np.array(sorted(alphas, reverse=True))
        aa = np.array([alphas[s] for s in ss])
        tail = _stable_tail(ss, aa)
        if tail is not None:
            beta, resid, start = tail
            # a flat run may just be the plateau above the crossover:
            # only a decaying tail, or flatness persisting down to the
            # depth floor, settles the exponent
            if beta > _BETA_REGULAR or min(s_list) <= 2.0 * s_floor:
                if resid > 0.2:
                    raise FitUnstable(
                        f"log-log residual {resid:.3f} > 0.2 on the stable tail")
                return AlphaFit(beta=beta, residual=resid,
                                s_values=ss[start:], alpha_values=aa[start:],
                                n_evaluated=len(alphas) * len(sides))
        nxt = min(s_list) * 0.5
        if nxt < s_floor:
            raise FitUnstable(
                f"local slope never stabilized above the depth floor "
                f"{s_floor:.2e} (last rung {min(s_list):.2e})")
        s_list = [nxt]
    raise FitUnstable("ladder extension budget exhausted")


def _fit_simple(potential: Potential, k: int, t0: float,
                t_samples: Sequence[float], tol: float) -> AlphaFit:
    """Plain fit at a simple eigenvalue: solve each rung directly."""
    pts = []
    for t in t_samples:
        if t == t0:
            continue
        ev = solve_eigenvalues(potential, t, [k], tol=tol, audit=False)
        lam = next(e.lam for e in ev if e.n == k)
        fs = integrate_fundamental(potential, lam, tol=1e-13,
                                   grid_size=_grid_for(abs(lam)))
        pts.append((abs(t - t0), _alpha_abs(fs, t)))
    pts.sort(reverse=True)
    s = np.array([p[0] for p in pts])
    a = np.array([p[1] for p in pts])
    beta, c = np.polyfit(np.log(s), np.log(a), 1)
    resid = float(np.sqrt(np.mean((np.log(a) - beta * np.log(s) - c) ** 2)))
    if resid > 0.2:
        raise FitUnstable(f"log-log residual {resid:.3f} > 0.2")
    return AlphaFit(beta=float(beta), residual=resid, s_values=s,
                    alpha_values=a, n_evaluated=len(pts))


def _polish_root(potential: Potential, z0: complex, target: complex,
                 tol: float = 1e-12) -> Optional[complex]:
    """Scalar Newton for F(lam) = target from z0; None on stall."""
    z = complex(z0)
    for _ in range(20):
        F, Fp = discriminant_batch(potential, np.array([z]), tol=1e-13)
        fp = complex(Fp[0])
        if abs(fp) < 1e-300:
            return None
        resid = complex(F[0]) - target
        if abs(resid) <= 5e-14 * (1.0 + abs(complex(F[0]))):
            # evaluation noise floor; near a critical point F' ~ 0
            # amplifies it into steps that never satisfy the step test
            return z
        step = resid / fp
        z -= step
        if abs(step) < tol * (1.0 + abs(z)):
            return z
    return None


def _validate_jet(potential: Potential, jet: _BandJet,
                  sides: Sequence[float], s_ref: float) -> None:
    """The jet must track both actual band roots at the reference rung:
    a Newton polish of F(.) = 2 cos t seeded at the jet prediction may
    move it by at most 2% of the branch offset, and alpha evaluated on
    the jet must match the value at the polished root to 5%."""
    for side in sides:
        t = jet.t0 + side * s_ref
        target = 2.0 * math.cos(t)
        for b in (1.0, -1.0):
            z = _jet_lambda(jet, side * s_ref, b)
            delta = abs(z - jet.lam0)
            root = _polish_root(potential, z, target)
            if root is None or abs(root - z) > max(0.02 * delta,
                                                   1e-10 * (1.0 + abs(z))):
                off = "stall" if root is None else f"{abs(root - z):.2e}"
                raise FitUnstable(
                    f"jet does not track the band at t0{side * s_ref:+.3g}: "
                    f"offset {off} vs |delta|={delta:.2e}")
            fs = integrate_fundamental(potential, root, tol=1e-13,
                                       grid_size=jet.grid)
            a_direct = _alpha_abs(fs, t)
            a_jet = _alpha_on_jet(potential, jet, side * s_ref, b)
            if abs(a_jet - a_direct) > 0.05 * max(a_jet, a_direct):
                raise FitUnstable(
                    f"alpha on the jet-continued band is {a_jet:.3e} but "
                    f"{a_direct:.3e} at the directly solved root "
                    f"(t0{side * s_ref:+.3g})")


# -- classification --------------------------------------------------------

def _resolved_defect(potential: Potential, mu: complex, t0: float) -> float:
    """Reality defect |arccos(F(mu)/2) - t0|, probe-resolved (to ~1e-12)
    for Fourier potentials, double-precision otherwise (floor ~1e-7)."""
    if potential.source == "fourier":
        from mpmath import mp

        with mp.workdps(30):
            F = mp_discriminant(potential, complex(mu), tol=1e-20)
            return float(abs(mp.acos(F / 2) - t0))
    F, _ = discriminant_batch(potential, np.array([complex(mu)]), tol=1e-12,
                              want_deriv=False)
    return abs(arccos_halfplane(complex(F[0]) / 2.0) - t0)


def _mp_entry_readout(potential: Potential, mu: complex, t0: float):
    """(scaled gap entries, |phi(1)|, |theta'(1)|) in extended precision."""
    th, ph, thx, phx = mp_monodromy(potential, complex(mu), tol=1e-20)
    e = cmath.exp(1j * t0)
    s = math.sqrt(1.0 + abs(mu))
    ent = (abs(complex(th) - e), abs(complex(ph)) * s,
           abs(complex(thx)) / s, abs(complex(phx) - e))
    return ent, abs(complex(ph)), abs(complex(thx))


def _large_threshold(potential: Potential, h: float) -> float:
    memo = potential.memo().setdefault("asym_N", {})
    N = memo.get(h)
    if N is None:
        N = determine_asymptotic_window(potential, h).N
        memo[h] = N
    return (2.0 * math.pi * (N + 1)) ** 2


def _meeting_indices(potential: Potential, mu: complex, t0: float,
                     tol: float = 1e-10) -> Tuple[int, ...]:
    """Band indices whose eigenvalue at t0 is mu (the set T(mu))."""
    base = math.sqrt(max(abs(mu), 1e-12)) / (2.0 * math.pi)
    cand = sorted(range(-int(base) - 2, int(base) + 3),
                  key=lambda n: abs(free_seed(n, t0) - mu))[:4]
    hits = []
    for ev in solve_eigenvalues(potential, t0, sorted(cand), tol=tol,
                                audit=False):
        if abs(ev.lam - mu) <= 1e-5 * (1.0 + abs(mu)) and ev.n in cand:
            hits.append(ev.n)
    return tuple(sorted(set(hits)))


def classify(potential: Potential, rec: SingularityRecord, h: float,
             tol: float = 1e-10) -> SingularityRecord:
    """Complete a record (mu, t0, m known) with geometric multiplicity,
    the fitted alpha exponent, Dirichlet/Neumann flags, and the class.

    Interior t0 is a spectral singularity outright.  At the boundary,
    large mu (above the asymptotic threshold) is decided by the
    both-entries-nonzero criterion, cross-checked against the geometric
    multiplicity; small mu is decided by the exponent, with geometric
    multiplicity 1 forcing ESS.  Disagreements between criteria that are
    supposed to coincide raise InconsistentCriteria rather than being
    resolved silently.
    """
    mu, t0, m = rec.mu, rec.t0, rec.m
    boundary = min(abs(t0), abs(math.pi - t0)) < _BOUNDARY_SNAP
    defect = _resolved_defect(potential, mu, t0)
    probe_ok = potential.source == "fourier"

    if probe_ok and defect > TRUE_DOUBLE_TOL:
        # off the real-t spectrum: an avoided crossing, not a multiple
        # eigenvalue; by convention regular with two eigenfunctions
        return replace(rec, klass=KLASS_REGULAR, geo_mult=2, beta=0.0,
                       beta_residual=0.0, defect=defect,
                       indices=rec.indices or _meeting_indices(potential, mu, t0, tol))

    flag_floor = 1e-10 * (1.0 + math.sqrt(abs(mu)))
    if probe_ok:
        # the probe sees entries at the 1e-20 scale, so both the
        # multiplicity readout and the zero tests become exact
        ent, phi_abs, thx_abs = _mp_entry_readout(potential, mu, t0)
        scale = 1.0 + abs(mu)
        geo = 2 if max(ent) <= 1e-15 * scale else 1
        dirichlet = phi_abs * math.sqrt(scale) <= 1e-15 * scale
        neumann = thx_abs / math.sqrt(scale) <= 1e-15 * scale
    else:
        fs = integrate_fundamental(potential, mu, tol=1e-13, grid_size=5,
                                   want_deriv=False)
        ent = _scaled_gap_entries(fs.monodromy, mu, t0)
        geo = geometric_multiplicity(potential, mu, t0)
        dirichlet = abs(fs.monodromy[0, 1]) <= flag_floor
        neumann = abs(fs.monodromy[1, 0]) <= flag_floor

    indices = rec.indices or _meeting_indices(potential, mu, t0, tol)
    k_fit = max(indices) if indices else 0
    ladder = [t0 + h * 2.0 ** (-j) for j in range(9)]
    ladder += [t0 - h * 2.0 ** (-j) for j in range(9)]

    beta = float("nan")
    resid = float("nan")
    fit_err: Optional[FitUnstable] = None
    try:
        fit = fit_alpha_exponent(potential, k_fit, t0, ladder, tol)
        beta, resid = fit.beta, fit.residual
    except (FitUnstable, NewtonDiverged) as err:
        fit_err = err if isinstance(err, FitUnstable) else FitUnstable(str(err))

    if not boundary:
        klass = KLASS_SS
    elif abs(mu) > _large_threshold(potential, h):
        ess_by_entries = not dirichlet and not neumann
        if dirichlet != neumann:
            raise InconsistentCriteria(
                f"at mu={mu:.8g}: phi(1)=0 is {dirichlet} but theta'(1)=0 "
                f"is {neumann}; they must coincide at large double points")
        if (geo == 1) != ess_by_entries:
            raise InconsistentCriteria(
                f"at mu={mu:.8g}: geometric multiplicity {geo} contradicts "
                f"the entry criterion (ESS={ess_by_entries})")
        klass = KLASS_ESS if ess_by_entries else KLASS_REGULAR
    else:
        if geo == 1:
            klass = KLASS_ESS     # a Jordan point at the boundary
            if not math.isnan(beta) and beta <= _BETA_REGULAR:
                # the alpha crossover sits near the scaled Jordan entry
                # size; below ~1e-9 the ladder floor cannot reach it and
                # a flat fit is expected rather than contradictory
                if max(ent) > 1e-9:
                    raise InconsistentCriteria(
                        f"at mu={mu:.8g}: geometric multiplicity 1 but "
                        f"alpha exponent {beta:.3f} shows no decay")
                beta, resid = float("nan"), float("nan")
        elif fit_err is not None:
            raise fit_err
        elif beta <= _BETA_REGULAR:
            klass = KLASS_REGULAR
        elif beta < _BETA_ESS:
            klass = KLASS_SS
        else:
            klass = KLASS_ESS
            geo = 1               # beta >= 1 entails a Jordan block

    return replace(rec, geo_mult=geo, beta=beta, klass=klass,
                   dirichlet_flag=dirichlet, neumann_flag=neumann,
                   indices=indices, beta_residual=resid, defect=defect)


# -- pipeline --------------------------------------------------------------

def _snap_t0(t: complex) -> float:
    tr = float(t.real)
    if tr < _BOUNDARY_SNAP:
        return 0.0
    if tr > math.pi - _BOUNDARY_SNAP:
        return math.pi
    return tr


def find_singularities(potential: Potential, window, h: float = 0.02,
                       tol: float = 1e-10) -> List[SingularityRecord]:
    """Locate and classify every multiple eigenvalue in the window.

    Candidates come from the coarse real-quasimomentum filter; for
    Fourier potentials the extended-precision probe then drops avoided
    crossings whose reality defect exceeds TRUE_DOUBLE_TOL (they are not
    on the spectrum), so the returned records are genuine multiple
    eigenvalues, sorted by Re mu.
    """
    out = []
    for cp in find_multiple_eigenvalues(potential, window, tol):
        rec = SingularityRecord(mu=cp.mu, t0=_snap_t0(cp.t), m=cp.m)
        rec = classify(potential, rec, h, tol)
        if potential.source == "fourier" and rec.defect > TRUE_DOUBLE_TOL:
            continue
        out.append(rec)
    out.sort(key=lambda r: (r.mu.real, r.mu.imag))
    return out


def singular_quasimomenta(records: Sequence[SingularityRecord],
                          h: float) -> List[SingularQuasimomentum]:
    """Unrolled quasimomenta pi*n carrying an ESS, with their excision
    bundles (pi n - h, pi n + h) union (-pi n - h, -pi n + h).

    A boundary pair (n, -n) at t0 = 0 meets at unrolled +-2 pi n; a pair
    (n, -(n+1)) at t0 = pi meets at +-(2n+1) pi.
    """
    out = []
    for rec in records:
        if rec.klass != KLASS_ESS or not rec.indices:
            continue
        n = max(rec.indices)
        n_j = 2 * n if abs(rec.t0) < _BOUNDARY_SNAP else 2 * n + 1
        v = math.pi * n_j
        out.append(SingularQuasimomentum(
            value=v, ess_lambda=rec.mu,
            bundle=((v - h, v + h), (-v - h, -v + h))))
    out.sort(key=lambda b: b.value)
    return out
