"""Quadrature helpers shared across the package.

Everything here works on plain numpy arrays.  Profiles produced by the
propagator live on uniform grids over [0, 1], so the composite rules
assume uniform spacing; the Gauss panels are used for quadrature in the
quasimomentum variable where node placement is ours to choose.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import QuadratureFailure


@functools.lru_cache(maxsize=None)
def boole_weights(npoints: int) -> np.ndarray:
    """Composite Boole weights (order 6) for a uniform grid of `npoints`
    samples on an interval of unit length.  Requires npoints = 4m + 1."""
    if npoints < 5 or (npoints - 1) % 4 != 0:
        raise QuadratureFailure(f"Boole rule needs 4m+1 points, got {npoints}")
    h = 1.0 / (npoints - 1)
    w = np.zeros(npoints)
    pattern = np.array([7.0, 32.0, 12.0, 32.0, 7.0]) * (2.0 * h / 45.0)
    for start in range(0, npoints - 1, 4):
        w[start:start + 5] += pattern
    return w


def uniform_weights(npoints: int, length: float = 1.0) -> np.ndarray:
    return boole_weights(npoints) * length


def l2_inner(u: np.ndarray, v: np.ndarray, weights: np.ndarray) -> complex:
    """(u, v) = integral of u * conj(v) with the given quadrature weights.
    The last axis is the grid axis."""
    return np.sum(weights * u * np.conj(v), axis=-1)


def l2_norm(u: np.ndarray, weights: np.ndarray) -> float:
    val = np.sum(weights * np.abs(u) ** 2, axis=-1)
    return np.sqrt(np.real(val))


def bilinear_inner(u: np.ndarray, v: np.ndarray, weights: np.ndarray) -> complex:
    """integral of u * v (no conjugation); the analytic pairing used by the
    expansion coefficients."""
    return np.sum(weights * u * v, axis=-1)


@functools.lru_cache(maxsize=None)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panel_nodes(edges: np.ndarray, order: int):
    """Gauss-Legendre nodes/weights on the panels defined by consecutive
    `edges`.  Returns flat arrays (nodes, weights), panel-major order."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise QuadratureFailure("need at least one panel")
    x, w = _leggauss(order)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_edges(a: float, b: float, n_uniform: int,
                 grade_left: bool = False, grade_right: bool = False,
                 levels: int = 6) -> np.ndarray:
    """Panel edges on [a, b]: `n_uniform` equal panels, with `levels`
    extra dyadically shrinking panels packed against a graded endpoint.
    Grading resolves integrable endpoint singularities just outside the
    interval (the nearest singular point sits at distance ~ the first
    panel width)."""
    if b <= a:
        raise QuadratureFailure("empty interval")
    core = np.linspace(a, b, n_uniform + 1)
    left = []
    right = []
    if grade_left:
        w0 = core[1] - core[0]
        left = [a + w0 * 2.0 ** (-j) for j in range(levels, 0, -1)]
        core = core[1:]
        core = np.concatenate(([a], left, core))
    if grade_right:
        w0 = core[-1] - core[-2]
        right = [b - w0 * 2.0 ** (-j) for j in range(1, levels + 1)]
        core = core[:-1]
        core = np.concatenate((core, right[::-1], [b]))
    return np.asarray(core, dtype=float)


def dyadic_shell_edges(delta: float, h: float, per_decade: int = 1) -> np.ndarray:
    """Edges delta = e_0 < e_1 < ... = h with e_{j+1}/e_j ~ 2**(1/per_decade);
    used by the principal-value ladders."""
    if not (0 < delta < h):
        raise QuadratureFailure("need 0 < delta < h")
    ratio = 2.0 ** (1.0 / per_decade)
    edges = [delta]
    while edges[-1] * ratio < h:
        edges.append(edges[-1] * ratio)
    edges.append(h)
    return np.asarray(edges)


def cumulative_simpson_uniform(y: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative integral of samples `y` (last axis) on a uniform grid,
    local-quadratic accuracy.  Matches scipy's cumulative_simpson with
    initial=0 but keeps complex dtype intact."""
    y = np.asarray(y)
    n = y.shape[-1]
    if n < 3:
        raise QuadratureFailure("cumulative Simpson needs >= 3 samples")
    out = np.zeros_like(y, dtype=np.result_type(y.dtype, float))
    # integral over [x_{i-1}, x_i] from the quadratic through (i-1, i, i+1);
    # final interval uses the quadratic through the last three points.
    left = (dx / 12.0) * (5.0 * y[..., :-2] + 8.0 * y[..., 1:-1] - y[..., 2:])
    right_last = (dx / 12.0) * (-y[..., -3] + 8.0 * y[..., -2] + 5.0 * y[..., -1])
    incr = np.concatenate([left, right_last[..., None]], axis=-1)
    np.cumsum(incr, axis=-1, out=out[..., 1:])
    return out


def trapezoid_closed_contour(values: np.ndarray, dz: np.ndarray) -> complex:
    """Integral of `values` * dz over a closed contour sampled at equal
    parameter steps; with analytic integrands the trapezoid rule on a
    closed curve is spectrally accurate."""
    return np.sum(values * dz, axis=-1)


def richardson_ladder(deltas: np.ndarray, values: np.ndarray, order: int = 1):
    """Extrapolate values(delta) -> delta = 0 given a dyadic ladder of
    excision radii.  Models values = v0 + c1*delta + c2*delta^2 + ...;
    one Richardson sweep per captured power.  Returns (v0_estimate,
    spread) where spread is the magnitude of the last correction, a
    usable error bar."""
    vals = [np.asarray(v) for v in values]
    if len(vals) < 2:
        return vals[0], np.inf
    level = vals
    power = 1
    for _ in range(order):
        if len(level) < 2:
            break
        nxt = []
        for i in range(len(level) - 1):
            ratio = deltas[i] / deltas[i + 1]
            mult = ratio ** power
            nxt.append((mult * level[i + 1] - level[i]) / (mult - 1.0))
        level = nxt
        power += 1
    est = level[-1]
    if len(level) >= 2:
        spread = float(np.max(np.abs(level[-1] - level[-2])))
    else:
        spread = float(np.max(np.abs(est - vals[-1])))
    return est, spread
