"""Equivalence structure on divergence generators.

Two generators order quantizers identically for every source exactly when
they are affine transforms of each other with a positive leading
coefficient.  This module fits that affine relation, tests membership in
the -c*min(u,1)+a*u+b family (the generators whose losses give joint
discriminant/quantizer consistency), checks the symmetry property that
characterizes loss-realizability, classifies 1-coercive generators (whose
losses are unbounded below), and runs the two-sided Blackwell dominance
comparison between quantizers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit
from .measures import (JointMeasure, Priors, Quantizer, SourceSpec,
                       bayes_risk, induce_measures, with_priors)

# 201 log-spaced points on [1e-2, 1e2]; the kink of min(u,1) at u=1 is
# exactly on the grid
FIT_GRID = np.geomspace(1e-2, 1e2, 201)

DEFAULT_Q_GRID = np.linspace(0.05, 0.95, 19)
DEFAULT_C_GRID = np.geomspace(0.1, 10.0, 25)


@dataclass(frozen=True)
class EquivalenceReport:
    """Fitted affine relation f1 ~= c*f2 + a*u + b on the grid."""

    c: float
    a: float
    b: float
    residual: float
    verdict: bool
    tol: float

    @staticmethod
    def csv_header() -> str:
        return "c,a,b,residual,verdict"

    def to_csv_row(self) -> str:
        return (f"{self.c!r},{self.a!r},{self.b!r},{self.residual!r},"
                f"{str(self.verdict).lower()}")


def affine_fit(f1, f2, u_grid: np.ndarray | None = None,
               tol: float = 1e-6) -> EquivalenceReport:
    """Least-squares fit of f1 against (f2, u, 1) with max-error residual.

    Verdict is true when the fit is tight and the leading coefficient is
    positive.  Raises DegenerateFit when f2 is affine on the grid (the
    normal equations become singular).
    """
    us = FIT_GRID if u_grid is None else np.asarray(u_grid, dtype=float)
    y = np.asarray(f1(us), dtype=float)
    cols = np.column_stack([np.asarray(f2(us), dtype=float), us,
                            np.ones_like(us)])
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(cols))):
        raise ValueError("generators must be finite on the fit grid")
    norms = np.linalg.norm(cols, axis=0)
    scaled = cols / norms
    gram = scaled.T @ scaled
    if abs(float(np.linalg.det(gram))) < 1e-12:
        raise DegenerateFit("reference generator is affine on the grid")
    coef_scaled = np.linalg.solve(gram, scaled.T @ y)
    coef = coef_scaled / norms
    resid = float(np.max(np.abs(y - cols @ coef)))
    c, a, b = (float(x) for x in coef)
    return EquivalenceReport(c=c, a=a, b=b, residual=resid,
                             verdict=bool(resid <= tol and c > 0.0), tol=tol)


def _neg_min_u1(u):
    return -np.minimum(np.asarray(u, dtype=float), 1.0)


def variational_family_check(f, u_grid: np.ndarray | None = None,
                             tol: float = 1e-6) -> EquivalenceReport:
    """Membership test for f(u) = -c*min(u,1) + a*u + b with c > 0."""
    return affine_fit(f, _neg_min_u1, u_grid=u_grid, tol=tol)


def symmetry_check(f, u_grid: np.ndarray | None = None,
                   tol: float = 1e-9) -> bool:
    """f(u) == u*f(1/u) on the grid: the divergence treats its two
    arguments symmetrically, hence is realizable by a margin loss."""
    us = FIT_GRID if u_grid is None else np.asarray(u_grid, dtype=float)
    us = us[us > 0]
    gap = np.abs(np.asarray(f(us), dtype=float)
                 - us * np.asarray(f(1.0 / us), dtype=float))
    return bool(np.max(gap) <= tol)


def coercivity_check(f, slope: float = 1.0) -> bool:
    """True when f(U)/U keeps growing and clears the reference slope:
    the superlinear (1-coercive) generators, whose realizing losses are
    unbounded below."""
    ratios = [float(f(u)) / u for u in (1e2, 1e4, 1e6)]
    return ratios[0] < ratios[1] < ratios[2] and ratios[2] > slope


@dataclass(frozen=True)
class DominanceReport:
    """Blackwell comparison of two quantizers on a common source.

    Condition (a): Bayes risks compared under every prior in q_grid.
    Condition (b): divergences of the class-conditionals under every
    clipped-linear generator -min(u, c) for c in c_grid.  The two verdicts
    must agree.
    """

    q_grid: np.ndarray
    bayes_1: np.ndarray
    bayes_2: np.ndarray
    c_grid: np.ndarray
    div_1: np.ndarray
    div_2: np.ndarray
    dominance_by_prior: tuple[bool, bool]
    dominance_by_divergence: tuple[bool, bool]

    @property
    def agreement(self) -> bool:
        return self.dominance_by_prior == self.dominance_by_divergence

    def to_csv(self) -> str:
        lines = ["criterion,point,value_q1,value_q2"]
        for q, b1, b2 in zip(self.q_grid, self.bayes_1, self.bayes_2):
            lines.append(f"bayes_at_prior,{float(q)!r},{float(b1)!r},{float(b2)!r}")
        for c, d1, d2 in zip(self.c_grid, self.div_1, self.div_2):
            lines.append(f"divergence_at_c,{float(c)!r},{float(d1)!r},{float(d2)!r}")
        return "\n".join(lines) + "\n"


def _clipped_divergences(m: JointMeasure, c_grid: np.ndarray) -> np.ndarray:
    """I_f of the class-conditionals for f(u) = -min(u, c), per c."""
    p1, p_1 = m.conditionals()
    return np.array([-float(np.minimum(p1, c * p_1).sum()) for c in c_grid])


def dominance_check(q1: Quantizer, q2: Quantizer, src: SourceSpec,
                    q_grid: np.ndarray | None = None,
                    c_grid: np.ndarray | None = None,
                    eps: float = 1e-12) -> DominanceReport:
    """Evaluate both sides of the Blackwell dominance equivalence."""
    qs = DEFAULT_Q_GRID if q_grid is None else np.asarray(q_grid, dtype=float)
    cs = DEFAULT_C_GRID if c_grid is None else np.asarray(c_grid, dtype=float)
    b1 = np.empty_like(qs)
    b2 = np.empty_like(qs)
    for i, q in enumerate(qs):
        priors = Priors.from_q(float(q))
        b1[i] = bayes_risk(induce_measures(q1, with_priors(src, priors)))
        b2[i] = bayes_risk(induce_measures(q2, with_priors(src, priors)))
    m1 = induce_measures(q1, src)
    m2 = induce_measures(q2, src)
    d1 = _clipped_divergences(m1, cs)
    d2 = _clipped_divergences(m2, cs)
    dom_a = (bool(np.all(b1 <= b2 + eps)), bool(np.all(b2 <= b1 + eps)))
    dom_b = (bool(np.all(d1 >= d2 - eps)), bool(np.all(d2 >= d1 - eps)))
    return DominanceReport(q_grid=qs, bayes_1=b1, bayes_2=b2, c_grid=cs,
                           div_1=d1, div_2=d2, dominance_by_prior=dom_a,
                           dominance_by_divergence=dom_b)
