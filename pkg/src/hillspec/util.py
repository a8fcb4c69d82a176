"""Small shared helpers: deterministic JSON and a thread map.

Determinism contract: the same inputs produce byte-identical JSON
regardless of thread count, dict construction order, or platform float
repr; every float goes through one fixed format.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def thread_count(requested: int = 0) -> int:
    """Effective worker count: explicit argument, else HILLSPEC_THREADS,
    else 1.  Values below 1 collapse to 1."""
    if requested and requested > 0:
        return int(requested)
    env = os.environ.get("HILLSPEC_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T],
                 threads: int = 0) -> List[R]:
    """Map preserving input order; sequential when one worker suffices."""
    n = thread_count(threads)
    items = list(items)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def _jsonable(obj):
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # format/parse round trip keeps equal values byte-equal
        return float(format(v, ".17g")) if v == v else None
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [_jsonable(z.real), _jsonable(z.imag)]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in seq]
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(getattr(obj, k))
                for k in obj.__dataclass_fields__}
    return str(obj)


def _floatstr(f: float) -> str:
    # stdlib float repr is version-dependent in edge cases; one fixed
    # format keeps output byte-stable
    if f != f:
        return "NaN"
    if f == float("inf"):
        return "Infinity"
    if f == float("-inf"):
        return "-Infinity"
    return format(f, ".17g")


def _iterencode(o, floatstr):
    if isinstance(o, float):
        yield floatstr(o)
    elif isinstance(o, bool):
        yield "true" if o else "false"
    elif o is None:
        yield "null"
    elif isinstance(o, int):
        yield str(o)
    elif isinstance(o, str):
        yield json.encoder.encode_basestring(o)
    elif isinstance(o, (list, tuple)):
        yield "["
        for i, v in enumerate(o):
            if i:
                yield ","
            yield from _iterencode(v, floatstr)
        yield "]"
    elif isinstance(o, dict):
        yield "{"
        for i, k in enumerate(sorted(o)):
            if i:
                yield ","
            yield json.encoder.encode_basestring(str(k))
            yield ":"
            yield from _iterencode(o[k], floatstr)
        yield "}"
    else:
        raise TypeError(f"not canonically serializable: {type(o)!r}")


def canonical_json(obj) -> str:
    """Serialize to sorted-key compact JSON with '.17g' floats.

    Complex numbers become [re, im] pairs, arrays become nested lists,
    dataclasses become objects.  Two equal structures always produce the
    same bytes.
    """
    return "".join(_iterencode(_jsonable(obj), _floatstr))
