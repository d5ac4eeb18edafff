"""One-dimensional search primitives: golden-section minimization and bisection.

Everything here works on plain floats or on numpy arrays elementwise, so the
per-bin minimizations of the risk and ERM modules can run as single vectorized
sweeps.  All routines are deterministic.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_min(f: Callable[[float], float], lo: float, hi: float,
               tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (argmin, value).  On a flat plateau any plateau point may be
    returned; the value is still the minimum.
    """
    a, b = float(lo), float(hi)
    h = b - a
    if h <= tol:
        m = 0.5 * (a + b)
        return m, f(m)
    c = a + INVPHI2 * h
    d = a + INVPHI * h
    yc = f(c)
    yd = f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if yc < yd:
            b = d
            d, yd = c, yc
            h = b - a
            c = a + INVPHI2 * h
            yc = f(c)
        else:
            a = c
            c, yc = d, yd
            h = b - a
            d = a + INVPHI * h
            yd = f(d)
    if yc < yd:
        return c, yc
    return d, yd


def golden_min_vec(f: Callable[[np.ndarray], np.ndarray],
                   lo: np.ndarray, hi: np.ndarray,
                   tol: float = 1e-10, max_iter: int = 200
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise golden-section minimization over [lo_i, hi_i].

    ``f`` maps an array of points to the array of objective values, one
    independent unimodal problem per element.  Both interior points are
    re-evaluated each round; with vectorized objectives the extra call is
    cheaper than per-element bookkeeping.
    """
    a = np.asarray(lo, dtype=float).copy()
    b = np.asarray(hi, dtype=float).copy()
    for _ in range(max_iter):
        h = b - a
        if np.all(h <= tol):
            break
        c = a + INVPHI2 * h
        d = a + INVPHI * h
        left = f(c) < f(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    mid = 0.5 * (a + b)
    return mid, f(mid)


def bisect_predicate(pred: Callable[[float], bool], lo: float, hi: float,
                     tol: float = 1e-10, max_iter: int = 200) -> float:
    """Smallest x in [lo, hi] with pred(x) true, assuming pred is monotone
    (false then true).  Requires pred(hi) true; pred(lo) may be anything.
    """
    a, b = float(lo), float(hi)
    if pred(a):
        return a
    for _ in range(max_iter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        if pred(m):
            b = m
        else:
            a = m
    return b


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-10, max_iter: int = 200) -> float:
    """Root of a decreasing function with f(lo) > 0 > f(hi)."""
    a, b = float(lo), float(hi)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm > 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)
