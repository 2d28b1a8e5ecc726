"""Vectorized interval arithmetic on (lo, hi) float64 ndarray pairs.

These kernels are the hot path of the validated integrator.  Semantics match
the scalar `Interval` class: every result encloses the exact real result.

Rounding strategy per kernel:

* add/sub use the two-sum error term and nudge an endpoint only when the
  float result is inexact in the needed direction, which is equivalent to
  true directed rounding (and keeps exact cancellations exact).
* mul/div/sqrt compute in round-to-nearest and nudge one ulp outward, which
  always covers a half-ulp rounding error.
* `dot` contracts a whole axis at once and covers all product and summation
  errors with a single a-priori bound (see the derivation inside), which is
  far cheaper than nudging every partial sum.

NaN and inf propagate harmlessly: all decision predicates built on these
arrays (subset, sign exclusion, pivot tests) fail conservatively on NaN, and
step-level validation rejects non-finite enclosures with a clear error.
"""

from __future__ import annotations

import numpy as np

from .errors import DivisionByZeroInterval, EmptyIntersection

_NINF = np.float64(-np.inf)
_PINF = np.float64(np.inf)
# One unit roundoff and one subnormal step; used by the dot error bound.
_U = 2.0 ** -53
_ETA = 5e-324

Pair = tuple[np.ndarray, np.ndarray]


def down(a: np.ndarray) -> np.ndarray:
    return np.nextafter(a, _NINF)


def up(a: np.ndarray) -> np.ndarray:
    return np.nextafter(a, _PINF)


def assert_valid(lo: np.ndarray, hi: np.ndarray, what: str = "enclosure") -> None:
    """Reject non-finite or inverted enclosures (e.g. after overflow)."""
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))
            and np.all(lo <= hi)):
        raise FloatingPointError(f"invalid {what}: endpoints not finite/ordered")


# --- elementwise arithmetic -------------------------------------------------

def add(al, ah, bl, bh) -> Pair:
    sl = al + bl
    t = sl - al
    el = (al - (sl - t)) + (bl - t)
    sh = ah + bh
    t = sh - ah
    eh = (ah - (sh - t)) + (bh - t)
    return np.where(el < 0.0, down(sl), sl), np.where(eh > 0.0, up(sh), sh)


def sub(al, ah, bl, bh) -> Pair:
    return add(al, ah, -bh, -bl)


def neg(al, ah) -> Pair:
    return -ah, -al


def mul(al, ah, bl, bh) -> Pair:
    p1 = al * bl
    p2 = al * bh
    p3 = ah * bl
    p4 = ah * bh
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    # Zero times anything finite is exactly zero; do not smear it by an ulp.
    zero = ((al == 0.0) & (ah == 0.0)) | ((bl == 0.0) & (bh == 0.0))
    return (np.where(zero, 0.0, down(lo)), np.where(zero, 0.0, up(hi)))


def div(al, ah, bl, bh) -> Pair:
    if np.any((bl <= 0.0) & (0.0 <= bh)):
        raise DivisionByZeroInterval("divisor interval contains zero")
    q1 = al / bl
    q2 = al / bh
    q3 = ah / bl
    q4 = ah / bh
    lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
    hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
    zero = (al == 0.0) & (ah == 0.0)
    return (np.where(zero, 0.0, down(lo)), np.where(zero, 0.0, up(hi)))


def scale(al, ah, c: float) -> Pair:
    """Multiply by a thin float scalar; exact for 0, +-1, +-2."""
    if c == 0.0:
        z = np.zeros_like(al)
        return z, z.copy()
    if c == 1.0:
        return al, ah
    if c == -1.0:
        return -ah, -al
    if c == 2.0:
        return 2.0 * al, 2.0 * ah
    if c == -2.0:
        return -2.0 * ah, -2.0 * al
    p1 = c * al
    p2 = c * ah
    if c > 0.0:
        return down(p1), up(p2)
    return down(p2), up(p1)


def sqr(al, ah) -> Pair:
    m = np.maximum(np.abs(al), np.abs(ah))
    g = np.where((al <= 0.0) & (0.0 <= ah), 0.0,
                 np.minimum(np.abs(al), np.abs(ah)))
    lo = np.where(g == 0.0, 0.0, down(g * g))
    hi = np.where(m == 0.0, 0.0, up(m * m))
    return lo, hi


def sqrt(al, ah) -> Pair:
    if np.any(al < 0.0):
        raise ValueError("sqrt of an interval with a negative part")
    return (np.where(al == 0.0, 0.0, down(np.sqrt(al))), up(np.sqrt(ah)))


# --- contractions -----------------------------------------------------------

def _contract(pmin, pmax, axis) -> Pair:
    # Error budget for summing K rounded products in arbitrary order:
    #   each product:  |fl(xy) - xy| <= u|fl(xy)| + eta        (u = 2^-53)
    #   the sum:       |fl(S) - S|  <= gamma_{K-1} sum|terms|,  gamma ~ Ku
    #   so |true - fl| <= ~1.04 K u A + K eta with A = sum of term magnitudes,
    # and A itself, computed in floats, underestimates by < 2%.  err below is
    # 2KuA + 2Keta computed with two roundings, which dominates the need for
    # every K up to ~1e13.
    slo = np.sum(pmin, axis=axis)
    shi = np.sum(pmax, axis=axis)
    amax = np.sum(np.maximum(np.abs(pmin), np.abs(pmax)), axis=axis)
    if isinstance(axis, tuple):
        k = 1
        for ax in axis:
            k *= pmin.shape[ax]
    else:
        k = pmin.shape[axis]
    err = amax * (k * 2.0 ** -52) + (2 * k) * _ETA
    return down(slo - err), up(shi + err)


def dot(al, ah, bl, bh, axis) -> Pair:
    """Enclosure of sum_k a_k * b_k contracted along `axis` (post-broadcast)."""
    p1 = al * bl
    p2 = al * bh
    p3 = ah * bl
    p4 = ah * bh
    pmin = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    pmax = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _contract(pmin, pmax, axis)


def dot_thin(al, ah, b, axis) -> Pair:
    """`dot` with a thin (point) right factor."""
    p1 = al * b
    p2 = ah * b
    return _contract(np.minimum(p1, p2), np.maximum(p1, p2), axis)


def matmul(Al, Ah, Bl, Bh) -> Pair:
    """(n, k) interval times (k, m) interval."""
    return dot(Al[:, :, None], Ah[:, :, None],
               Bl[None, :, :], Bh[None, :, :], axis=1)


def matmul_thin_right(Al, Ah, B) -> Pair:
    return dot_thin(Al[:, :, None], Ah[:, :, None], B[None, :, :], axis=1)


def matmul_float(A, B) -> Pair:
    """Enclosure of the product of two float (thin) matrices."""
    return dot_thin(A[:, :, None], A[:, :, None], B[None, :, :], axis=1)


def matmul_thin_left(A, Bl, Bh) -> Pair:
    return dot_thin(Bl[None, :, :], Bh[None, :, :], A[:, :, None], axis=1)


def matvec(Al, Ah, bl, bh) -> Pair:
    return dot(Al, Ah, bl[None, :], bh[None, :], axis=1)


def matvec_thin_right(Al, Ah, b) -> Pair:
    return dot_thin(Al, Ah, b[None, :], axis=1)


def matvec_thin_left(A, bl, bh) -> Pair:
    return dot_thin(bl[None, :], bh[None, :], A, axis=1)


def vecdot(al, ah, bl, bh) -> Pair:
    """Scalar enclosure of an interval dot product of two 1-d arrays."""
    return dot(al, ah, bl, bh, axis=0)


# --- set operations ---------------------------------------------------------

def hull(al, ah, bl, bh) -> Pair:
    return np.minimum(al, bl), np.maximum(ah, bh)


def intersect(al, ah, bl, bh) -> Pair:
    lo = np.maximum(al, bl)
    hi = np.minimum(ah, bh)
    if np.any(lo > hi):
        raise EmptyIntersection("boxes are disjoint in some component")
    return lo, hi


def subset(al, ah, bl, bh) -> bool:
    return bool(np.all((bl <= al) & (ah <= bh)))


def subset_interior(al, ah, bl, bh) -> bool:
    return bool(np.all((bl < al) & (ah < bh)))


def disjoint(al, ah, bl, bh) -> bool:
    return bool(np.any((ah < bl) | (bh < al)))


def contains_point(al, ah, x) -> bool:
    return bool(np.all((al <= x) & (x <= ah)))


def mid(al, ah) -> np.ndarray:
    m = al + 0.5 * (ah - al)
    return np.minimum(np.maximum(m, al), ah)


def diam(al, ah) -> np.ndarray:
    d = ah - al
    return np.where(ah - d == al, d, up(d))


def mag(al, ah) -> np.ndarray:
    return np.maximum(np.abs(al), np.abs(ah))
