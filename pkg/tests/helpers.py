"""Shared fixtures for the suite: closed-form iterate coefficients,
random-series builders, and small comparison utilities."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from hatmfp.expr import SpatialExpr, add, cosh, evaluate, mul, pow_, sinh, X, Y
from hatmfp.series import FracSeries, FracTerm, Coefficient, TimeFactor


def gamma1(k: int, alpha: float) -> float:
    """gamma(k*alpha + 1), the denominator family of every iterate."""
    return math.gamma(k * alpha + 1.0)


def identity_coeffs(m: int, h: float, alpha: float) -> dict[int, float]:
    """Per-exponent iterate coefficients when the spatial operator acts as
    the identity on multiples of the initial condition.

    u_m = f(x) * sum_q c[q] t^(q*alpha); these are the c[q], hand-solved
    from the deformation recursion u_m = chi_m u_{m-1} + h (u_{m-1} -
    (1-chi_m) u_0 - J^alpha[u_{m-1}]) for m = 1..3.
    """
    g = {k: gamma1(k, alpha) for k in (1, 2, 3)}
    if m == 1:
        return {1: -h / g[1]}
    if m == 2:
        return {1: -h * (1 + h) / g[1], 2: h * h / g[2]}
    if m == 3:
        return {
            1: -h * (1 + h) ** 2 / g[1],
            2: 2 * h * h * (1 + h) / g[2],
            3: -(h**3) / g[3],
        }
    raise ValueError(f"identity_coeffs covers m <= 3, got {m}")


def constant_image_coeffs(m: int, h: float, alpha: float) -> dict[int, float]:
    """Per-exponent coefficients for the drift-1/diffusion-1 problem whose
    operator maps the initial condition to the constant 1 and the constant
    to zero: u_m = (1) * c[1] t^alpha with c telescoping in (1+h)."""
    return {1: -h * (1 + h) ** (m - 1) / gamma1(1, alpha)}


def q_coefficient_map(series: FracSeries, alpha: float, x: float, y: float = 0.0):
    """{q: numeric coefficient of t^(q*alpha)} with the spatial part bound
    at (x, y). Only for series with pure q*alpha exponents."""
    out: dict[int, float] = {}
    for term in series.terms:
        assert term.time.c == 0, "exponential factor left in iterate"
        assert term.time.p == 0, f"unexpected fixed exponent {term.time.p}"
        val = term.coef.value(alpha) * evaluate(term.spatial, x, y)
        out[term.time.q] = out.get(term.time.q, 0.0) + val
    return out


def assert_q_map_close(got: dict[int, float], want: dict[int, float], rel: float):
    scale = max(abs(v) for v in want.values())
    for q in sorted(set(got) | set(want)):
        g = got.get(q, 0.0)
        w = want.get(q, 0.0)
        assert abs(g - w) <= rel * max(abs(w), scale), (q, g, w)


SPATIAL_POOL: tuple[SpatialExpr, ...] = (
    X,
    add(X, 1),
    pow_(X, 2),
    sinh(X),
    cosh(X),
    mul(X, Y),
    add(pow_(X, 2), mul(3, Y)),
)

P_POOL = (Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))


def random_series(rng: random.Random, n_terms: int = 4, with_exp: bool = False) -> FracSeries:
    """Small random series over the shared spatial pool; q >= 1 so the
    Caputo derivative always has a fractional exponent to lower."""
    terms = []
    for _ in range(n_terms):
        coef = Coefficient.number(rng.uniform(-3.0, 3.0))
        spatial = rng.choice(SPATIAL_POOL)
        p = rng.choice(P_POOL)
        q = rng.randint(1, 3)
        c = rng.choice((-1, 0, 1, 2)) if with_exp else 0
        terms.append(FracTerm(coef, spatial, TimeFactor(p, q, c)))
    return FracSeries(tuple(terms)).collected()
