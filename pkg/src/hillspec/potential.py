"""Complex 1-periodic potentials.

A potential is either a finite Fourier sum q(x) = sum_k c_k exp(2*pi*i*k*x)
or a periodic interpolant through samples.  Both forms evaluate on
arbitrary real grids; Fourier coefficients of a sampled potential are
recovered by FFT on demand (the Galerkin oracle needs them).

Config formats accepted by load_potential:

    {"fourier": [[k, re, im], ...], "normalize_mean": false}
    {"samples": [[x, re, im], ...], "interp_order": 3}
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import MalformedConfig, NonFiniteCoefficient

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Potential:
    """Immutable 1-periodic potential.  `coeffs` maps integer frequency k
    to the coefficient of exp(2*pi*i*k*x).  Sampled potentials keep their
    interpolant alongside a spectrally accurate Fourier table."""

    coeffs: Dict[int, complex]
    source: str = "fourier"
    _interp: Optional[object] = None
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for k, c in self.coeffs.items():
            if not isinstance(k, int):
                raise MalformedConfig(f"frequency index {k!r} is not an integer")
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise NonFiniteCoefficient(f"coefficient at k={k} is not finite")

    # -- evaluation ----------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.source == "samples":
            return self._interp(np.mod(x, 1.0)) + 0.0j
        out = np.zeros(np.shape(x), dtype=complex)
        for k, c in self.coeffs.items():
            out += c * np.exp(2j * math.pi * k * x)
        return out

    # -- structure -----------------------------------------------------

    def fourier_coefficient(self, k: int) -> complex:
        return complex(self.coeffs.get(int(k), 0.0))

    @property
    def max_frequency(self) -> int:
        nz = [abs(k) for k, c in self.coeffs.items() if c != 0]
        return max(nz) if nz else 0

    def is_zero(self) -> bool:
        return all(abs(c) == 0.0 for c in self.coeffs.values())

    def is_even(self, rtol: float = 1e-12) -> bool:
        """q(-x) = q(x), i.e. c_k = c_{-k} for every k."""
        scale = max((abs(c) for c in self.coeffs.values()), default=0.0)
        for k, c in self.coeffs.items():
            d = self.coeffs.get(-k, 0.0)
            if abs(c - d) > rtol * max(scale, 1.0):
                return False
        return True

    def is_one_sided(self, rtol: float = 1e-12) -> bool:
        """Only positive frequencies present (the class with a free
        discriminant and infinitely many double periodic eigenvalues)."""
        scale = max((abs(c) for c in self.coeffs.values()), default=0.0)
        has_pos = False
        for k, c in self.coeffs.items():
            if abs(c) <= rtol * max(scale, 1.0):
                continue
            if k <= 0:
                return False
            has_pos = True
        return has_pos

    def bound(self) -> float:
        """Cheap sup-norm bound, sum of |c_k|."""
        return float(sum(abs(c) for c in self.coeffs.values()))

    def cache_key(self) -> tuple:
        items = tuple(sorted((k, complex(v)) for k, v in self.coeffs.items()))
        return (self.source, items)

    # memo space used by the propagator for per-step-count node tables
    def memo(self) -> dict:
        return self._memo


def _fourier_from_samples(xs: np.ndarray, vals: np.ndarray, order: int):
    import scipy.interpolate

    idx = np.argsort(xs)
    xs, vals = xs[idx], vals[idx]
    if xs[0] != 0.0:
        raise MalformedConfig("samples must start at x=0")
    xx = np.concatenate([xs, [1.0]])
    re = np.concatenate([vals.real, [vals.real[0]]])
    im = np.concatenate([vals.imag, [vals.imag[0]]])
    if order == 1:
        def interp(x, xx=xx, re=re, im=im):
            return np.interp(x, xx, re) + 1j * np.interp(x, xx, im)
    elif order == 3:
        sr = scipy.interpolate.CubicSpline(xx, re, bc_type="periodic")
        si = scipy.interpolate.CubicSpline(xx, im, bc_type="periodic")
        def interp(x, sr=sr, si=si):
            return sr(x) + 1j * si(x)
    else:
        raise MalformedConfig(f"interp_order must be 1 or 3, got {order}")
    # Fourier table from the interpolant on a fine grid; adequate for the
    # Galerkin oracle, which only sees low frequencies.
    ngrid = 4096
    g = interp(np.arange(ngrid) / ngrid)
    ck = np.fft.fft(g) / ngrid
    coeffs = {}
    for k in range(-ngrid // 4, ngrid // 4 + 1):
        c = ck[k % ngrid]
        if abs(c) > 1e-12:
            coeffs[k] = complex(c)
    return coeffs, interp


def load_potential(config) -> Potential:
    """Build a Potential from a dict, a JSON string, or a path to JSON."""
    if isinstance(config, Potential):
        return config
    if isinstance(config, (str, os.PathLike)):
        text = None
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
        raise MalformedConfig("potential config must be a JSON object")

    if "fourier" in config:
        rows = config["fourier"]
        if not isinstance(rows, list):
            raise MalformedConfig("'fourier' must be a list of [k, re, im] rows")
        coeffs: Dict[int, complex] = {}
        for row in rows:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise MalformedConfig(f"bad fourier row {row!r}")
            k, re, im = row
            if not float(k).is_integer():
                raise MalformedConfig(f"fourier frequency {k!r} is not an integer")
            c = complex(float(re), float(im))
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise NonFiniteCoefficient(f"non-finite coefficient at k={k}")
            coeffs[int(k)] = coeffs.get(int(k), 0.0) + c
        if config.get("normalize_mean", False):
            coeffs[0] = 0.0
        return Potential(coeffs=coeffs, source="fourier")

    if "samples" in config:
        rows = config["samples"]
        if not isinstance(rows, list) or len(rows) < 4:
            raise MalformedConfig("'samples' must list at least 4 [x, re, im] rows")
        xs, vals = [], []
        for row in rows:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise MalformedConfig(f"bad sample row {row!r}")
            x, re, im = (float(v) for v in row)
            if not all(map(math.isfinite, (x, re, im))):
                raise NonFiniteCoefficient(f"non-finite sample {row!r}")
            if not (0.0 <= x < 1.0):
                raise MalformedConfig("sample abscissae must lie in [0, 1)")
            xs.append(x)
            vals.append(complex(re, im))
        order = int(config.get("interp_order", 3))
        coeffs, interp = _fourier_from_samples(np.asarray(xs), np.asarray(vals), order)
        if config.get("normalize_mean", False):
            mean = coeffs.get(0, 0.0)
            coeffs[0] = 0.0
            base = interp
            def interp(x, base=base, mean=mean):
                return base(x) - mean
        return Potential(coeffs=coeffs, source="samples", _interp=interp)

    raise MalformedConfig("config needs a 'fourier' or 'samples' key")


def zero_potential() -> Potential:
    return Potential(coeffs={})
