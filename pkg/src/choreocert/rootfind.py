"""Interval Newton and Krawczyk certification of zeros of C1 maps.

The map is supplied as two callbacks: a rigorous value enclosure at a point
and a rigorous derivative enclosure over a box.  The certification loop
computes the chosen operator image T(x, [X]) and decides:

* T strictly inside [X]     -> exactly one zero in [X]      (UniqueZero)
* T disjoint from [X]       -> no zero in [X]               (NoZero)
* [X] inside T              -> the enclosures are too wide  (Inconclusive)
* otherwise                 -> shrink [X] to [X] & T, re-center, repeat.

The interior-inclusion test is used for both operators: the Krawczyk theorem
demands it, and for Newton a boundary touch is deliberately treated as
not-included so the iteration continues instead of over-claiming.

Inconclusive never silently mutates integration parameters; the caller (the
command-line driver) owns any retry policy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .boxes import IntervalMatrix, IntervalVector, solve_linear
from .errors import EmptyIntersection, SingularEnclosure

Verdict = Literal["UniqueZero", "NoZero", "Inconclusive"]


@dataclass(frozen=True)
class CertifiableMap:
    """Value-plus-Jacobian-enclosure view of a C1 map F: R^n -> R^n."""

    dimension: int
    eval_point: Callable[[np.ndarray], IntervalVector]
    eval_jacobian: Callable[[IntervalVector], IntervalMatrix]


@dataclass
class CertificationJob:
    map: CertifiableMap
    x0: np.ndarray
    X: IntervalVector
    method: Literal["newton", "krawczyk"] = "newton"
    C: np.ndarray | None = None
    max_iter: int = 64

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, float)
        if self.x0.size != self.map.dimension or len(self.X) != self.map.dimension:
            raise ValueError("job dimensions are inconsistent")
        if not self.X.contains_point(self.x0):
            raise ValueError("x0 must lie inside the initial box")


@dataclass
class IterationRecord:
    index: int
    x: np.ndarray
    X: IntervalVector
    f_x: IntervalVector
    df_X: IntervalMatrix
    C: np.ndarray | None
    image: IntervalVector
    relation: str


@dataclass
class CertificationOutcome:
    verdict: Verdict
    operator_image: IntervalVector | None
    refined_box: IntervalVector | None
    iterations: int
    trace: list[IterationRecord] = field(default_factory=list)
    cause: str = ""


def newton_operator(x: np.ndarray, f_x: IntervalVector,
                    df_X: IntervalMatrix) -> IntervalVector:
    """N(x, [X]) = x - [DF([X])]^-1 F(x), via a verified linear solve."""
    return IntervalVector.point(x) - solve_linear(df_X, f_x)


def krawczyk_operator(x: np.ndarray, X: IntervalVector, f_x: IntervalVector,
                      df_X: IntervalMatrix, C: np.ndarray) -> IntervalVector:
    """K(x, [X], F) = x - C F(x) + (Id - C [DF([X])]) ([X] - x)."""
    n = len(X)
    Cm = IntervalMatrix.point(C)
    lin = IntervalMatrix.identity(n) - Cm.matmul(df_X)
    return (IntervalVector.point(x) - Cm.matvec(f_x)
            + lin.matvec(X - x))


def default_preconditioner(df_X: IntervalMatrix) -> np.ndarray:
    """Approximate inverse of the midpoint Jacobian, in plain floats."""
    return np.linalg.inv(df_X.mid())


def certify(job: CertificationJob) -> CertificationOutcome:
    """Run the certification loop until a verdict or the iteration limit."""
    x = np.asarray(job.x0, float)
    X = job.X
    trace: list[IterationRecord] = []

    for it in range(1, job.max_iter + 1):
        f_x = job.map.eval_point(x)
        df_X = job.map.eval_jacobian(X)

        C = None
        try:
            if job.method == "newton":
                image = newton_operator(x, f_x, df_X)
            elif job.method == "krawczyk":
                C = job.C if job.C is not None else default_preconditioner(df_X)
                image = krawczyk_operator(x, X, f_x, df_X, C)
            else:
                raise ValueError(f"unknown method {job.method!r}")
        except SingularEnclosure as exc:
            return CertificationOutcome(
                verdict="Inconclusive", operator_image=None, refined_box=X,
                iterations=it, trace=trace,
                cause=f"derivative enclosure not certifiably regular: {exc}")

        if image.subset_interior(X):
            relation = "interior"
        elif image.disjoint(X):
            relation = "disjoint"
        elif X.subset(image):
            relation = "inflating"
        else:
            relation = "overlap"
        trace.append(IterationRecord(
            index=it, x=x.copy(), X=X, f_x=f_x, df_X=df_X, C=C,
            image=image, relation=relation))

        if relation == "interior":
            return CertificationOutcome(
                verdict="UniqueZero", operator_image=image,
                refined_box=image.intersect(X), iterations=it, trace=trace)
        if relation == "disjoint":
            return CertificationOutcome(
                verdict="NoZero", operator_image=image, refined_box=None,
                iterations=it, trace=trace)
        if relation == "inflating":
            ratio = float(np.max(image.diam() / np.maximum(X.diam(), 1e-300)))
            return CertificationOutcome(
                verdict="Inconclusive", operator_image=image, refined_box=X,
                iterations=it, trace=trace,
                cause=(f"operator image inflates the box (ratio {ratio:.3g}); "
                       "tighten the integration parameters"))

        try:
            X = X.intersect(image)
        except EmptyIntersection:
            return CertificationOutcome(
                verdict="NoZero", operator_image=image, refined_box=None,
                iterations=it, trace=trace)
        x = X.mid()

    return CertificationOutcome(
        verdict="Inconclusive", operator_image=trace[-1].image if trace else None,
        refined_box=X, iterations=job.max_iter, trace=trace,
        cause="iteration limit reached")
