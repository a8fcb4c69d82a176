"""Deterministic command line frontend.

Six subcommands cover the pipeline end to end:

    discriminant     F and F' on a lambda grid (CSV)
    bands            Bloch bands over a quasimomentum grid (JSON)
    singular-points  zeros of F' on the spectrum, with multiplicity (JSON)
    singularities    classified multiple eigenvalues with ESS flags (JSON)
    expand           reconstruct a compactly supported function (JSON)
    verify           fixed self-audit battery (JSON scorecard)

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  A
failing run still writes an artifact when --out is given, with the
module exception surfaced verbatim in an "errors" list.

Artifacts are deterministic: no timestamps, no environment data, floats
serialized at 17 significant digits through the canonical encoder, and
output assembly single-threaded.  Wall-clock metadata goes to a sidecar
<out>.meta.json so the primary artifact stays byte-identical across
reruns and thread counts.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError, MalformedConfig, NumericalError
from .potential import Potential, load_potential, zero_potential
from .odecore import integrate_fundamental, wronskian_defect
from .discriminant import discriminant_batch, discriminant_derivative
from .spectrum import (find_multiple_eigenvalues, free_seed,
                       solve_eigenvalues, track_band)
from .eigenfunctions import normalized_pair
from .singularities import find_singularities, singular_quasimomenta
from .expansion import _BandCache, _SliceTable, load_function, \
    parseval_defect, reconstruct
from .oracle import galerkin_eigensolve, green_kernel, total_projection
from .util import canonical_json, parallel_map
from . import __version__


# -- argument parsing helpers --------------------------------------------

def _parse_grid(spec: str) -> np.ndarray:
    """'a:b:n' -> n equally spaced points from a to b inclusive."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise MalformedConfig(f"grid spec {spec!r}: want 'a:b:n'")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise MalformedConfig(f"grid spec {spec!r}: {exc}") from None
    if n < 1:
        raise MalformedConfig(f"grid spec {spec!r}: need n >= 1")
    return np.linspace(a, b, n)


def _parse_irange(spec: str) -> Tuple[int, int]:
    """'lo:hi' -> inclusive integer range."""
    parts = spec.split(":")
    if len(parts) != 2:
        raise MalformedConfig(f"range spec {spec!r}: want 'lo:hi'")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise MalformedConfig(f"range spec {spec!r}: {exc}") from None
    if hi < lo:
        raise MalformedConfig(f"range spec {spec!r}: hi < lo")
    return lo, hi


def _normalize_window(vals: List[float], potential: Potential):
    """Two corners (Re1 Im1 Re2 Im2) -> (Re_min, Re_max, Im_min, Im_max).
    A flat imaginary extent is padded to +-(1 + potential bound) so root
    scans that walk slightly off the real axis stay inside."""
    a, b, c, d = (float(v) for v in vals)
    re_lo, re_hi = sorted((a, c))
    im_lo, im_hi = sorted((b, d))
    if re_hi <= re_lo:
        raise MalformedConfig("window has empty real extent")
    if im_hi - im_lo <= 0.0:
        pad = 1.0 + potential.bound()
        im_lo, im_hi = im_lo - pad, im_hi + pad
    return re_lo, re_hi, im_lo, im_hi


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_artifact(out: Optional[str], text: str, meta: dict) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    with open(out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _meta(args, started: float) -> dict:
    return {"command": " ".join(sys.argv[:1] or ["hillspec"]),
            "subcommand": args.command,
            "elapsed_seconds": round(time.monotonic() - started, 3),
            "version": __version__}


# -- subcommands ----------------------------------------------------------

def cmd_discriminant(args) -> int:
    started = time.monotonic()
    potential = load_potential(args.potential)
    lams = _parse_grid(args.lambda_grid).astype(complex)
    F, Fp = discriminant_batch(potential, lams, tol=args.tol)
    lines = ["re_lambda,im_lambda,re_F,im_F,re_Fprime,im_Fprime"]
    for z, f, fp in zip(lams, F, Fp):
        lines.append(",".join(_fmt(v) for v in
                              (z.real, z.imag, f.real, f.imag,
                               fp.real, fp.imag)))
    _write_artifact(args.out, "\n".join(lines), _meta(args, started))
    return 0


def cmd_bands(args) -> int:
    started = time.monotonic()
    potential = load_potential(args.potential)
    lo, hi = _parse_irange(args.n)
    steps = int(args.t_steps)
    if steps < 2:
        raise MalformedConfig("--t-steps must be >= 2")
    # Half-offset grid on (0, pi): band functions are even in t, and
    # offsetting keeps the tracker away from the boundary double points.
    t_grid = (np.arange(steps) + 0.5) * (math.pi / steps)

    def one(n: int) -> dict:
        band = track_band(potential, n, t_grid, tol=args.tol)
        return {"n": band.n, "t": band.t, "lam": band.lam,
                "partner_lam": band.partner_lam,
                "collision": band.collision.astype(int),
                "partner_n_low": band.partner_n_low,
                "partner_n_high": band.partner_n_high}

    bands = parallel_map(one, list(range(lo, hi + 1)), threads=args.threads)
    _write_artifact(args.out, canonical_json({"t_steps": steps,
                                              "bands": bands}),
                    _meta(args, started))
    return 0


def cmd_singular_points(args) -> int:
    started = time.monotonic()
    potential = load_potential(args.potential)
    window = _normalize_window(args.window, potential)
    points = find_multiple_eigenvalues(potential, window, tol=args.tol)
    _write_artifact(args.out,
                    canonical_json({"window": list(window),
                                    "points": points}),
                    _meta(args, started))
    return 0


def cmd_singularities(args) -> int:
    started = time.monotonic()
    potential = load_potential(args.potential)
    window = _normalize_window(args.window, potential)
    records = find_singularities(potential, window, h=args.h, tol=args.tol)
    bundles = singular_quasimomenta(records, args.h)
    _write_artifact(args.out,
                    canonical_json({"window": list(window), "h": args.h,
                                    "records": records,
                                    "singular_quasimomenta": bundles}),
                    _meta(args, started))
    return 0


def cmd_expand(args) -> int:
    started = time.monotonic()
    potential = load_potential(args.potential)
    f = load_function(args.function)
    x_out = _parse_grid(args.x_grid)
    report = reconstruct(potential, f, h=args.h, n_range=args.n_max,
                         x_out=x_out, mode=args.mode, tol=args.tol,
                         threads=args.threads)
    payload = {
        "mode": report.mode, "h": report.h, "n_max": report.n_max,
        "N": report.N, "x": report.x, "f_hat": report.f_hat,
        "f_values": report.f_values, "l2_error": report.l2_error,
        "relative_l2_error": report.meta.get("relative_l2_error"),
        "error_bar": report.error_bar, "parseval": report.parseval,
        "dropped": report.dropped, "convergence": report.convergence,
        "contributions": report.contributions, "meta": report.meta,
        "errors": [],
    }
    _write_artifact(args.out, canonical_json(payload), _meta(args, started))
    if args.csv:
        lines = ["x,re_f,re_fhat,im_fhat,abs_error"]
        for xv, fv, gv in zip(report.x, report.f_values, report.f_hat):
            lines.append(",".join(_fmt(v) for v in
                                  (xv, fv.real, gv.real, gv.imag,
                                   abs(gv - fv))))
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


# -- verify battery -------------------------------------------------------
# Fixed, seedless (or fixed-seed) checks, each a few hundred ms.  The
# scorecard is the determinism witness: everything in it is a pure
# function of this source tree, so two runs must agree byte for byte.

_MATHIEU = {"fourier": [[1, 1.0, 0.0], [-1, 1.0, 0.0]]}   # 2 cos(2 pi x)
_GASYMOV = {"fourier": [[1, 1.0, 0.0]]}                   # e^{2 pi i x}


def _check(name: str, value: float, threshold: float, detail: str = "") -> dict:
    return {"check": name, "value": float(value),
            "threshold": float(threshold),
            "passed": bool(value <= threshold), "detail": detail}


def _chk_free_eigenvalues() -> dict:
    potential = zero_potential()
    t = 0.37
    evs = solve_eigenvalues(potential, t, range(-3, 4), tol=1e-12)
    dev = max(abs(e.lam - free_seed(e.n, t)) for e in evs)
    return _check("free_eigenvalues", dev, 1e-9,
                  "max |lam_n(t) - (2 pi n + t)^2|, q=0, |n|<=3")


def _chk_free_alpha() -> dict:
    pair = normalized_pair(zero_potential(), 2, 0.37)
    return _check("free_alpha", abs(pair.alpha - 1.0), 1e-8,
                  "|alpha - 1| for q=0, n=2, t=0.37")


def _chk_discriminant_free() -> dict:
    lams = np.linspace(0.0, 150.0, 11) + 0j
    F, _ = discriminant_batch(zero_potential(), lams, want_deriv=False)
    dev = float(np.max(np.abs(F - 2.0 * np.cos(np.sqrt(lams)))))
    return _check("discriminant_free", dev, 1e-9,
                  "max |F - 2 cos sqrt(lam)| on [0, 150], q=0")


def _chk_wronskian_identity() -> dict:
    rng = np.random.Generator(np.random.PCG64(20260814))
    worst = 0.0
    for _ in range(40):
        coeffs = {}
        for k in (1, 2, 3):
            re, im = rng.normal(size=2) * 0.4
            coeffs[k] = complex(re, im)
            re, im = rng.normal(size=2) * 0.4
            coeffs[-k] = complex(re, im)
        potential = Potential(coeffs=coeffs)
        lam = complex(rng.uniform(-5.0, 120.0), rng.uniform(-8.0, 8.0))
        fs = integrate_fundamental(potential, lam)
        worst = max(worst, wronskian_defect(fs))
        M = fs.monodromy
        F = M[0, 0] + M[1, 1]
        lhs = (M[1, 1] - M[0, 0]) ** 2 + 4.0 - F * F
        rhs = -4.0 * M[0, 1] * M[1, 0]
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return _check("wronskian_identity", worst, 1e-9,
                  "Wronskian defect and (phi'-theta)^2+4-F^2 = -4 phi theta', "
                  "40 random (q, lam)")


def _chk_fprime_consistency() -> dict:
    potential = load_potential(_MATHIEU)
    worst = 0.0
    for lam in np.linspace(3.0, 180.0, 7) + 0.3j:
        vals = [discriminant_derivative(potential, lam, method=m)
                for m in ("variational", "integral", "fd")]
        scale = max(max(abs(v) for v in vals), 1e-9)
        for i in range(3):
            for j in range(i + 1, 3):
                worst = max(worst, abs(vals[i] - vals[j]) / scale)
    return _check("fprime_consistency", worst, 1e-6,
                  "pairwise relative spread of three F' routes, Mathieu")


def _chk_green_free() -> dict:
    kern = green_kernel(zero_potential(), -1.0, 0.0, grid_size=257)
    x = kern.grid[:, None]
    xi = kern.grid[None, :]
    exact = np.cosh(np.abs(x - xi) - 0.5) / (2.0 * math.sinh(0.5))
    dev = float(np.max(np.abs(kern.values - exact)))
    return _check("green_free_closed_form", dev, 1e-8,
                  "free periodic kernel vs cosh |x-xi| closed form")


def _chk_green_jump() -> dict:
    kern = green_kernel(load_potential(_MATHIEU), 3.0 + 0.7j, 0.9,
                        grid_size=257)
    G = kern.values
    hstep = kern.grid[1] - kern.grid[0]
    worst = 0.0
    for j in range(8, 249, 16):
        fwd = (-11.0 * G[j, j] + 18.0 * G[j + 1, j]
               - 9.0 * G[j + 2, j] + 2.0 * G[j + 3, j]) / (6.0 * hstep)
        bwd = (11.0 * G[j, j] - 18.0 * G[j - 1, j]
               + 9.0 * G[j - 2, j] - 2.0 * G[j - 3, j]) / (6.0 * hstep)
        worst = max(worst, abs((fwd - bwd) + 1.0))
    return _check("green_jump", worst, 1e-4,
                  "kernel x-derivative drops by 1 across the diagonal")


def _chk_bundle_identity() -> dict:
    potential = load_potential(_GASYMOV)
    f = load_function({"kind": "bump", "center": 0.0, "half_width": 1.0})
    n, t, h = 2, 0.013, 0.02
    sample = total_projection(potential, f, n, t, h)
    cache = _BandCache(potential, [n, -n], grid_size=sample.grid.size)
    node = cache.node(t)
    table = _SliceTable(f, sample.grid)
    terms = cache.terms(node, table.at(t))
    direct = terms[:, 0] + terms[:, 1]
    scale = float(np.max(np.abs(sample.profile))) or 1.0
    dev = float(np.max(np.abs(sample.profile - direct))) / scale
    return _check("bundle_identity", dev, 1e-6,
                  "resolvent contour T_n vs a_n Psi_n + a_-n Psi_-n, "
                  "one-sided exponential potential")


def _chk_parseval() -> dict:
    f = load_function({"kind": "hat", "center": 0.0, "half_width": 1.0})
    return _check("parseval", parseval_defect(f), 1e-6,
                  "fiber-decomposition norm identity for a hat function")


def _chk_galerkin() -> dict:
    potential = load_potential(_MATHIEU)
    t = 1.0
    gal = galerkin_eigensolve(potential, t, 14)
    evs = solve_eigenvalues(potential, t, range(-2, 3), tol=1e-12,
                            audit=False)
    by_n = {n: lam for n, lam in zip(gal.ns, gal.lams)}
    worst = max(abs(by_n[e.n] - e.lam) / max(1.0, abs(e.lam)) for e in evs)
    return _check("galerkin_cross_check", worst, 1e-6,
                  "dense truncated-operator eigenvalues vs shooting/Newton, "
                  "Mathieu, |n|<=2")


_BATTERY = [_chk_free_eigenvalues, _chk_free_alpha, _chk_discriminant_free,
            _chk_wronskian_identity, _chk_fprime_consistency,
            _chk_green_free, _chk_green_jump, _chk_bundle_identity,
            _chk_parseval, _chk_galerkin]


def run_verify(threads: int = 0) -> dict:
    def run_one(fn):
        return fn()

    checks = parallel_map(run_one, _BATTERY, threads=threads)
    checks.sort(key=lambda c: c["check"])
    return {"schema": "hillspec-scorecard/1", "version": __version__,
            "checks": checks,
            "n_checks": len(checks),
            "n_passed": sum(1 for c in checks if c["passed"]),
            "all_passed": all(c["passed"] for c in checks)}


def cmd_verify(args) -> int:
    started = time.monotonic()
    card = run_verify(threads=args.threads)
    _write_artifact(args.out, canonical_json(card), _meta(args, started))
    return 0 if card["all_passed"] else 3


# -- parser ---------------------------------------------------------------

def _add_common(sub, potential=True):
    if potential:
        sub.add_argument("--potential", required=True,
                         help="potential config: JSON path or inline JSON")
    sub.add_argument("--tol", type=float, default=1e-10,
                     help="working tolerance (default 1e-10)")
    sub.add_argument("--out", default=None,
                     help="artifact path (default stdout)")
    sub.add_argument("--threads", type=int, default=0,
                     help="worker threads; 0 = HILLSPEC_THREADS or 1")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hillspec",
        description="Bloch spectra, spectral singularities, and spectral "
                    "expansions for one-dimensional periodic operators "
                    "with complex potentials.")
    parser.add_argument("--version", action="version",
                        version=f"hillspec {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("discriminant",
                        help="F and F' on a lambda grid (CSV)")
    _add_common(p)
    p.add_argument("--lambda-grid", required=True, metavar="a:b:n",
                   help="real lambda grid, n points from a to b")
    p.set_defaults(func=cmd_discriminant)

    p = subs.add_parser("bands", help="Bloch bands over t in (0, pi) (JSON)")
    _add_common(p)
    p.add_argument("--n", required=True, metavar="lo:hi",
                   help="inclusive band index range")
    p.add_argument("--t-steps", type=int, default=256,
                   help="number of half-offset quasimomentum samples")
    p.set_defaults(func=cmd_bands)

    p = subs.add_parser("singular-points",
                        help="zeros of F' on the spectrum (JSON)")
    _add_common(p)
    p.add_argument("--window", type=float, nargs=4, required=True,
                   metavar=("RE1", "IM1", "RE2", "IM2"),
                   help="two corners of the lambda window; a flat "
                        "imaginary extent is padded automatically")
    p.set_defaults(func=cmd_singular_points)

    p = subs.add_parser("singularities",
                        help="classified multiple eigenvalues (JSON)")
    _add_common(p)
    p.add_argument("--window", type=float, nargs=4, required=True,
                   metavar=("RE1", "IM1", "RE2", "IM2"))
    p.add_argument("--h", type=float, default=0.02,
                   help="quasimomentum bundle half-width (default 0.02)")
    p.set_defaults(func=cmd_singularities)

    p = subs.add_parser("expand",
                        help="reconstruct a compactly supported function")
    _add_common(p)
    p.add_argument("--function", required=True,
                   help="test-function config: JSON path or inline JSON")
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--mode", choices=("pv", "contour"), default="pv")
    p.add_argument("--x-grid", default="-2:2:257", metavar="a:b:n",
                   help="output grid (default -2:2:257)")
    p.add_argument("--csv", default=None,
                   help="optional CSV dump of f vs f_hat")
    p.set_defaults(func=cmd_expand)

    p = subs.add_parser("verify",
                        help="run the fixed self-audit battery")
    _add_common(p, potential=False)
    p.set_defaults(func=cmd_verify)

    return parser


def _emit_failure(args, exc: Exception) -> None:
    payload = canonical_json(
        {"errors": [{"type": type(exc).__name__, "message": str(exc)}]})
    out = getattr(args, "out", None)
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload + "\n")
    sys.stderr.write(payload + "\n")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _emit_failure(args, exc)
        return 2
    except NumericalError as exc:
        _emit_failure(args, exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
