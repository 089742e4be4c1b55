"""Homotopy-analysis deformation engine.

Given an initial state f and an operator split into linear and
quadratic monomials, the m-th iterate solves the deformation equation

    u_m = chi(m) * u_{m-1} + hbar * Lm

where Lm realises the inverse-transformed residual term in the time
domain:

    Lm = u_{m-1} - (1 - chi(m)) * (u_0 + J^alpha[g])
         - J^alpha[operator terms at order m-1]

J^alpha is the fractional integral; quadratic terms use the homotopy
convolution sum over previous iterates. Any exp(c*t) factors produced
by the operator are Taylor-expanded before integration, and those
truncations are recorded on the run report.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import ConfigError, DegreeError, ExponentError
from .expr import SpatialExpr, mul, variables
from .series import FracSeries, FracTerm, SpatialBasis, TimeFactor, _check_alpha

MultiIndex = tuple[int, int]  # derivative orders in (x, y)


def _check_multi_index(deriv: MultiIndex, what: str) -> None:
    if len(deriv) != 2 or any(d < 0 for d in deriv):
        raise DegreeError(f"{what} must be a pair of nonnegative orders, got {deriv}")
    if sum(deriv) > 2:
        raise DegreeError(f"{what} exceeds second order: {deriv}")


@dataclass(frozen=True)
class LinearMonomial:
    """coef(x, y) * exp(exp_rate * t) * d^deriv u"""

    coef: SpatialExpr
    deriv: MultiIndex
    exp_rate: int = 0

    def __post_init__(self) -> None:
        _check_multi_index(self.deriv, "deriv")


@dataclass(frozen=True)
class QuadraticMonomial:
    """coef(x, y) * exp(exp_rate * t) * (d^deriv_a u)(d^deriv_b u)"""

    coef: SpatialExpr
    deriv_a: MultiIndex
    deriv_b: MultiIndex
    exp_rate: int = 0

    def __post_init__(self) -> None:
        _check_multi_index(self.deriv_a, "deriv_a")
        _check_multi_index(self.deriv_b, "deriv_b")


@dataclass(frozen=True)
class ProblemSpec:
    dim: int
    linear: tuple[LinearMonomial, ...]
    quadratic: tuple[QuadraticMonomial, ...]
    initial: SpatialExpr
    source: FracSeries = field(default_factory=FracSeries.zero)

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.dim == 1:
            used = variables(self.initial)
            for mono in self.linear + self.quadratic:
                used |= variables(mono.coef)
                derivs = (
                    (mono.deriv,)
                    if isinstance(mono, LinearMonomial)
                    else (mono.deriv_a, mono.deriv_b)
                )
                if any(d[1] != 0 for d in derivs):
                    raise ConfigError("y-derivative in a one-dimensional problem")
            if "y" in used:
                raise ConfigError("variable y in a one-dimensional problem")


@dataclass(frozen=True)
class HatmConfig:
    """Run parameters; aux_function is accepted but only constant 1 is
    implemented (a non-unit auxiliary function H is rejected)."""

    alpha: float
    hbar: float
    order: int
    taylor_terms: int = 12
    aux_function: float = 1.0

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)
        if self.hbar == 0.0:
            raise ConfigError("hbar must be nonzero")
        if self.order < 0:
            raise ConfigError(f"order must be >= 0, got {self.order}")
        if self.taylor_terms < 1:
            raise ConfigError(f"taylor_terms must be >= 1, got {self.taylor_terms}")
        if self.aux_function != 1.0:
            raise ConfigError(
                "only the constant auxiliary function H = 1 is implemented; "
                f"got H = {self.aux_function}"
            )


@dataclass(frozen=True)
class TaylorEvent:
    order: int  # deformation step m
    terms_expanded: int
    taylor_terms: int


def chi(m: int) -> int:
    """Deformation step indicator: 0 for m <= 1, else 1."""
    if m < 1:
        raise ConfigError(f"chi is defined for m >= 1, got {m}")
    return 0 if m <= 1 else 1


def _derived(series: FracSeries, deriv: MultiIndex) -> FracSeries:
    out = series
    for _ in range(deriv[0]):
        out = out.spatial_derivative("x")
    for _ in range(deriv[1]):
        out = out.spatial_derivative("y")
    return out


def apply_operator(
    problem: ProblemSpec,
    u: FracSeries,
    history: Sequence[FracSeries],
    m: int,
    basis: SpatialBasis | None = None,
) -> FracSeries:
    """Operator terms at deformation order m.

    Linear monomials act on u (= history[m-1]); quadratic monomials use
    the homotopy convolution sum_{k=0}^{m-1} of derivative pairs drawn
    from the history.
    """
    if m < 1:
        raise ConfigError(f"apply_operator needs m >= 1, got {m}")
    terms: list[FracTerm] = []
    for mono in problem.linear:
        rate = TimeFactor(0, 0, mono.exp_rate)
        for t in _derived(u, mono.deriv).terms:
            terms.append(
                FracTerm(t.coef, mul(mono.coef, t.spatial), t.time.plus(rate))
            )
    for mono in problem.quadratic:
        rate = TimeFactor(0, 0, mono.exp_rate)
        for k in range(m):
            left = _derived(history[m - 1 - k], mono.deriv_a)
            right = _derived(history[k], mono.deriv_b)
            for ta in left.terms:
                for tb in right.terms:
                    terms.append(
                        FracTerm(
                            ta.coef.times(tb.coef),
                            mul(mono.coef, ta.spatial, tb.spatial),
                            ta.time.plus(tb.time).plus(rate),
                        )
                    )
    return FracSeries(tuple(terms)).collected(basis)


def _taylor_then_integrate(
    series: FracSeries,
    cfg: HatmConfig,
    m: int,
    events: list[TaylorEvent] | None,
) -> FracSeries:
    exponential = sum(1 for t in series.terms if t.time.c != 0)
    if exponential:
        if events is not None:
            events.append(TaylorEvent(m, exponential, cfg.taylor_terms))
        series = series.taylor_expand(cfg.taylor_terms)
    return series.frac_integral()


def build_rm(
    problem: ProblemSpec,
    cfg: HatmConfig,
    history: Sequence[FracSeries],
    m: int,
    basis: SpatialBasis | None = None,
    events: list[TaylorEvent] | None = None,
) -> FracSeries:
    """Inverse-transformed residual term of the m-th deformation equation."""
    u_prev = history[m - 1]
    parts = list(u_prev.terms)
    if chi(m) == 0:
        parts.extend(history[0].scale(-1.0).terms)
        if not problem.source.is_zero:
            j_source = _taylor_then_integrate(problem.source, cfg, m, events)
            parts.extend(j_source.scale(-1.0).terms)
    op = apply_operator(problem, u_prev, history, m, basis)
    parts.extend(_taylor_then_integrate(op, cfg, m, events).scale(-1.0).terms)
    return FracSeries(tuple(parts)).collected(basis)


def deformation_step(
    problem: ProblemSpec,
    cfg: HatmConfig,
    history: Sequence[FracSeries],
    m: int,
    basis: SpatialBasis | None = None,
    events: list[TaylorEvent] | None = None,
) -> FracSeries:
    rm = build_rm(problem, cfg, history, m, basis, events)
    parts = rm.scale(cfg.hbar).terms
    if chi(m):
        parts = history[m - 1].terms + parts
    return FracSeries(tuple(parts)).collected(basis)


def _seed_basis(problem: ProblemSpec) -> SpatialBasis:
    basis = SpatialBasis()
    seeds = [FracSeries.from_spatial(problem.initial)]
    names = ("x",) if problem.dim == 1 else ("x", "y")
    firsts = [seeds[0].spatial_derivative(n) for n in names]
    seconds = [s.spatial_derivative(n) for s in firsts for n in names]
    from .expr import ONE

    basis.seed([ONE, problem.initial])
    for s in firsts + seconds:
        basis.seed([t.spatial for t in s.terms])
    return basis


def run(
    problem: ProblemSpec,
    cfg: HatmConfig,
    events: list[TaylorEvent] | None = None,
) -> list[FracSeries]:
    """Iterates [u_0, ..., u_order] of the deformation recursion."""
    basis = _seed_basis(problem)
    history = [FracSeries.from_spatial(problem.initial).collected(basis)]
    for m in range(1, cfg.order + 1):
        history.append(deformation_step(problem, cfg, history, m, basis, events))
    return history


def partial_sum(iterates: Sequence[FracSeries], upto: int) -> FracSeries:
    if not 0 <= upto < len(iterates):
        raise IndexError(f"partial_sum up to {upto} needs {upto + 1} iterates")
    terms: list[FracTerm] = []
    for series in iterates[: upto + 1]:
        terms.extend(series.terms)
    return FracSeries(tuple(terms)).collected()


def apply_operator_full(problem: ProblemSpec, s: FracSeries) -> FracSeries:
    """Operator applied to a fixed series: quadratic monomials take the
    series itself in both slots (no convolution). Used by residual()."""
    out = FracSeries.zero()
    for mono in problem.linear:
        piece = _derived(s, mono.deriv).multiply(
            FracSeries.from_spatial(mono.coef, c=mono.exp_rate)
        )
        out = out.add(piece)
    for mono in problem.quadratic:
        piece = (
            _derived(s, mono.deriv_a)
            .multiply(_derived(s, mono.deriv_b))
            .multiply(FracSeries.from_spatial(mono.coef, c=mono.exp_rate))
        )
        out = out.add(piece)
    return out


def residual(
    problem: ProblemSpec,
    s: FracSeries,
    cfg: HatmConfig,
    points: Sequence[tuple[float, float, float]],
) -> list[float]:
    """|D^alpha s - N[s] - g| of the full nonlinear equation at (x, y, t)."""
    if s.has_exponential:
        raise ExponentError("residual needs a taylor-expanded (c = 0) series")
    mismatch = (
        s.caputo_derivative()
        .add(apply_operator_full(problem, s).scale(-1.0))
        .add(problem.source.scale(-1.0))
    )
    return [
        abs(mismatch.evaluate(x=px, y=py, t=pt, alpha=cfg.alpha))
        for px, py, pt in points
    ]


def h_curve(
    problem: ProblemSpec,
    cfg: HatmConfig,
    probe: tuple[float, float, float],
    h_values: Sequence[float],
) -> list[tuple[float, float]]:
    """Partial-sum value at the probe point for each convergence-control
    parameter; the flat stretch of this curve marks usable hbar."""
    px, py, pt = probe
    out = []
    for h in h_values:
        local = replace(cfg, hbar=h)  # validates h != 0
        iterates = run(problem, local)
        value = partial_sum(iterates, cfg.order).evaluate(
            x=px, y=py, t=pt, alpha=cfg.alpha
        )
        out.append((h, value))
    return out


def run_report(
    problem: ProblemSpec,
    cfg: HatmConfig,
    problem_label: str = "custom",
) -> dict:
    """Run and package everything a caller needs to replay the result."""
    events: list[TaylorEvent] = []
    started = _time.perf_counter()
    iterates = run(problem, cfg, events)
    elapsed = _time.perf_counter() - started
    total = partial_sum(iterates, cfg.order)
    return {
        "problem": problem_label,
        "config": {
            "alpha": cfg.alpha,
            "hbar": cfg.hbar,
            "order": cfg.order,
            "taylor_terms": cfg.taylor_terms,
            "aux_function": cfg.aux_function,
        },
        "iterates": [s.to_obj() for s in iterates],
        "partial_sum": total.to_obj(),
        "taylor_events": [
            {
                "order": e.order,
                "terms_expanded": e.terms_expanded,
                "taylor_terms": e.taylor_terms,
            }
            for e in events
        ],
        "wall_time_s": elapsed,
    }
