"""Hill discriminant F(lam) = theta(1, lam) + phi'(1, lam) and friends.

F is entire; the periodic/antiperiodic structure of the spectrum is all
encoded in the characteristic determinant

    Delta(lam, t) = exp(2it) - F(lam) exp(it) + 1,

whose lam-zeros at fixed t are the Bloch eigenvalues (F(lam) = 2 cos t).

F'(lam) is produced by two independent routes and cross-checked:
the forward-mode derivative of the propagator (variational route) and
the profile-integral identity

    F'(lam) = int_0^1 [ theta'(1) phi^2 + (theta(1) - phi'(1)) theta phi
                        - phi(1) theta^2 ] dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import odecore
from .errors import BranchAmbiguity, QuadratureFailure, ToleranceNotMet
from .potential import Potential
from .quadrature import boole_weights


def _grid_for(lam_scale: float, floor: int = 513) -> int:
    """Uniform profile grid (4m+1 points) resolving oscillation ~ 2*sqrt(lam)."""
    need = max(floor, int(12.0 * math.sqrt(1.0 + abs(lam_scale))))
    size = floor
    while size < need:
        size = 2 * (size - 1) + 1
    return size


def monodromy_batch(potential: Potential, lams, tol: float = 1e-10,
                    want_deriv: bool = False, grid_size: Optional[int] = None):
    """Propagate a batch of lam values; returns the raw entry dict from
    odecore.propagate (with profiles when grid_size is given)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    scale = float(np.max(np.abs(lams))) if lams.size else 1.0
    n = odecore.steps_for(potential, scale, tol, snapshot_grid=grid_size)
    return odecore.propagate(potential, lams, n, want_deriv=want_deriv,
                             n_snapshots=None if grid_size is None else grid_size - 1)


def discriminant_batch(potential: Potential, lams, tol: float = 1e-10,
                       want_deriv: bool = True):
    """F (and optionally F' by the variational route) on a lam batch."""
    res = monodromy_batch(potential, lams, tol, want_deriv=want_deriv)
    F = res["theta"] + res["phi_dx"]
    Fp = res["d_theta"] + res["d_phi_dx"] if want_deriv else None
    return F, Fp


@dataclass
class DiscriminantValue:
    lam: complex
    F: complex
    Fprime: complex              # variational route (used downstream)
    Fprime_integral: complex     # profile-integral route
    spread: float                # |variational - integral| / scale
    monodromy: np.ndarray        # [[theta, phi], [theta', phi']] at x = 1


def hill_discriminant(potential: Potential, lam: complex, tol: float = 1e-10,
                      check_tol: float = 1e-6) -> DiscriminantValue:
    """F and F' at a single lam with the two F' routes cross-checked.

    Raises ToleranceNotMet if the routes disagree beyond check_tol
    relative (with an absolute floor near multiple points, where both
    values legitimately pass through zero).
    """
    lam = complex(lam)
    grid = _grid_for(abs(lam))
    res = monodromy_batch(potential, [lam], tol, want_deriv=True, grid_size=grid)
    th1, ph1 = res["theta"][0], res["phi"][0]
    thx1, phx1 = res["theta_dx"][0], res["phi_dx"][0]
    F = th1 + phx1
    Fp_var = res["d_theta"][0] + res["d_phi_dx"][0]

    prof = res["profiles"][:, :, 0]
    theta, phi = prof[:, 0], prof[:, 1]
    integrand = thx1 * phi * phi + (th1 - phx1) * theta * phi - ph1 * theta * theta
    Fp_int = complex(np.sum(boole_weights(grid) * integrand))

    scale = max(abs(Fp_var), abs(Fp_int))
    floor = 1e-9 * (1.0 + abs(F))
    spread = abs(Fp_var - Fp_int) / max(scale, floor)
    if spread > check_tol and scale > floor:
        raise ToleranceNotMet(
            f"F' routes disagree at lam={lam:.6g}: variational {Fp_var:.10g}, "
            f"integral {Fp_int:.10g}")
    mono = np.array([[th1, ph1], [thx1, phx1]])
    return DiscriminantValue(lam=lam, F=complex(F), Fprime=complex(Fp_var),
                             Fprime_integral=Fp_int, spread=float(spread),
                             monodromy=mono)


def discriminant_derivative(potential: Potential, lam: complex,
                            method: str = "variational", tol: float = 1e-10) -> complex:
    """F'(lam) by the requested route ('variational' | 'integral' | 'fd')."""
    lam = complex(lam)
    if method == "variational":
        _, Fp = discriminant_batch(potential, [lam], tol)
        return complex(Fp[0])
    if method == "integral":
        return hill_discriminant(potential, lam, tol, check_tol=np.inf).Fprime_integral
    if method == "fd":
        d = 1e-5 * max(1.0, abs(lam)) ** 0.5
        Fp, _ = discriminant_batch(potential, [lam + d], tol, want_deriv=False)
        Fm, _ = discriminant_batch(potential, [lam - d], tol, want_deriv=False)
        return complex((Fp[0] - Fm[0]) / (2.0 * d))
    raise ValueError(f"unknown method {method!r}")


def characteristic_determinant(F, t):
    """Delta(lam, t) = e^{2it} - F e^{it} + 1; zero iff F = 2 cos t."""
    eit = np.exp(1j * np.asarray(t, dtype=complex))
    return eit * eit - np.asarray(F) * eit + 1.0


# -- high-precision probe ------------------------------------------------
#
# Near a pseudo-closed gap the quantity that separates a true double
# eigenvalue from an avoided crossing is |F(mu) - 2 cos t0|, which can be
# as small as 1e-15 while double-precision propagation floors out at
# ~1e-14.  The probe below reruns the identical GL3-Magnus recursion in
# mpmath arithmetic (the truncation order is unchanged, so the step count
# is raised until the h^6 envelope sits under `tol`), pushing the noise
# floor to the requested tolerance.  It is scalar and slow (~1 s per
# call) and is only used to adjudicate borderline candidates.

def mp_monodromy(potential: Potential, lam: complex, tol: float = 1e-20,
                 want_deriv: bool = False, dps: int = 30):
    """Monodromy entries [theta, phi, theta', phi'](1, lam) as mpmath
    complex numbers, optionally with their lam-derivatives.

    Requires a Fourier-sourced potential: sampled potentials carry no
    exact values between samples, so extended precision would be fake.
    """
    from mpmath import mp, mpc, mpf

    if potential.source != "fourier":
        raise ToleranceNotMet(
            "high-precision probe needs an exact (Fourier) potential")
    qsize = max(potential.bound(), 1e-3)
    n = max(256, int(math.ceil(
        (odecore._CAL_A * qsize * (1.0 + abs(lam)) / tol) ** (1.0 / 6.0))))
    if n > 1 << 16:
        raise ToleranceNotMet(f"probe tol={tol} needs {n} steps (cap 65536)")

    with mp.workdps(dps):
        memo = potential.memo().setdefault("mp_nodes", {})
        nodes = memo.get((n, dps))
        if nodes is None:
            h_ = mpf(1) / n
            offs = [mpf(1) / 2 - mp.sqrt(15) / 10, mpf(1) / 2,
                    mpf(1) / 2 + mp.sqrt(15) / 10]
            terms = [(int(k), mpc(c)) for k, c in potential.coeffs.items()
                     if c != 0]
            nodes = []
            for i in range(n):
                row = []
                for off in offs:
                    x = (i + off) * h_
                    row.append(sum((c * mp.expjpi(2 * k * x) for k, c in terms),
                                   mpc(0)))
                nodes.append(row)
            memo[(n, dps)] = nodes

        h = mpf(1) / n
        lam_ = mpc(lam)
        p00, p01, p10, p11 = mpc(1), mpc(0), mpc(0), mpc(1)
        d00 = d01 = d10 = d11 = mpc(0)
        a = h
        for i in range(n):
            v1 = nodes[i][0] - lam_
            v2 = nodes[i][1] - lam_
            v3 = nodes[i][2] - lam_
            b = h * v2
            w2 = (mp.sqrt(15) / 3) * h * (v3 - v1)
            w3 = (mpf(10) / 3) * h * (v3 - 2 * v2 + v1)
            d1 = h * w2
            x21 = 2 * w3
            y1 = d1
            y3 = -20 * b - w3
            z1 = -a * x21 / 60
            z2 = a * d1 / 30
            z3 = w2 - b * d1 / 30
            k11 = (-20 * a) * z3 - z2 * y3
            k12 = 2 * (y1 * z2 + 20 * a * z1)
            k21 = 2 * (y3 * z1 - y1 * z3)
            o11 = k11 / 240
            o12 = a + k12 / 240
            o21 = b + w3 / 12 + k21 / 240
            u = o11 * o11 + o12 * o21
            if abs(u) < mpf("1e-40"):
                f1 = 1 + u / 2 + u * u / 24
                f2 = 1 + u / 6 + u * u / 120
                df2 = mpf(1) / 6 + u / 60
            else:
                w = mp.sqrt(u)
                f1 = mp.cosh(w)
                f2 = mp.sinh(w) / w
                df2 = (f1 - f2) / (2 * u)
            e00 = f1 + f2 * o11
            e01 = f2 * o12
            e10 = f2 * o21
            e11 = f1 - f2 * o11

            if want_deriv:
                db = -h
                dy3 = -20 * db
                dz3 = -db * d1 / 30
                do11 = (-z2 * dy3 + (-20 * a) * dz3) / 240
                do21 = db + (2 * z1 * dy3 - 2 * y1 * dz3) / 240
                du = 2 * o11 * do11 + o12 * do21
                g1 = f2 / 2
                de00 = g1 * du + df2 * du * o11 + f2 * do11
                de01 = df2 * du * o12
                de10 = df2 * du * o21 + f2 * do21
                de11 = g1 * du - df2 * du * o11 - f2 * do11
                n00 = de00 * p00 + de01 * p10 + e00 * d00 + e01 * d10
                n01 = de00 * p01 + de01 * p11 + e00 * d01 + e01 * d11
                n10 = de10 * p00 + de11 * p10 + e10 * d00 + e11 * d10
                n11 = de10 * p01 + de11 * p11 + e10 * d01 + e11 * d11
                d00, d01, d10, d11 = n00, n01, n10, n11

            q00 = e00 * p00 + e01 * p10
            q01 = e00 * p01 + e01 * p11
            q10 = e10 * p00 + e11 * p10
            q11 = e10 * p01 + e11 * p11
            p00, p01, p10, p11 = q00, q01, q10, q11

    entries = (p00, p01, p10, p11)
    return (entries, (d00, d01, d10, d11)) if want_deriv else entries


def mp_discriminant(potential: Potential, lam: complex, tol: float = 1e-20,
                    want_deriv: bool = False, dps: int = 30):
    """F(lam) (optionally with F'(lam)) as mpmath complex numbers."""
    res = mp_monodromy(potential, lam, tol, want_deriv, dps)
    if want_deriv:
        (p00, _, _, p11), (d00, _, _, d11) = res
        return p00 + p11, d00 + d11
    p00, _, _, p11 = res
    return p00 + p11


def p_branch(F_path, anchor: Optional[complex] = None) -> np.ndarray:
    """Branch-continued p(lam) = sqrt(4 - F^2) along a sampled path.

    The sign at the first sample follows `anchor` when given (e.g.
    p = 2 sin t at a band-interior starting point); otherwise the
    principal square root.  Subsequent signs are chosen for continuity.
    Raises BranchAmbiguity when consecutive samples are too far apart to
    disambiguate (the path stepped over a branch point F = +-2).
    """
    F_path = np.asarray(F_path, dtype=complex)
    if F_path.ndim != 1 or F_path.size == 0:
        raise QuadratureFailure("p_branch needs a 1-d, non-empty path")
    vals = np.empty_like(F_path)
    cand = np.sqrt(4.0 - F_path[0] ** 2)
    if anchor is not None and abs(-cand - anchor) < abs(cand - anchor):
        cand = -cand
    vals[0] = cand
    for j in range(1, F_path.size):
        if abs(F_path[j] - F_path[j - 1]) > 0.5:
            raise BranchAmbiguity(
                f"path step {j}: |dF| = {abs(F_path[j]-F_path[j-1]):.3g} too "
                "large for sign continuation; refine the path")
        c = np.sqrt(4.0 - F_path[j] ** 2)
        prev = vals[j - 1]
        keep, flip = abs(c - prev), abs(-c - prev)
        best, worst = min(keep, flip), max(keep, flip)
        if abs(c) > 1e-12 and worst > 0 and best > 0.6 * (abs(c) + abs(prev)):
            raise BranchAmbiguity(
                f"path step {j}: sign of p undecidable near a branch point; "
                "refine the path")
        vals[j] = c if keep <= flip else -c
    return vals
