"""Separable time-fractional series.

A series is a finite sum of terms

    coef(alpha) * f(x, y) * t**(p + q*alpha) * exp(c*t)

with f an immutable spatial tree, p a nonnegative rational, q and c
integers. Coefficients stay symbolic in alpha: each one is a sum of
monomials (float factor times a ratio of gamma values whose arguments
live on the p-q grid, i.e. of the form a + b*alpha). The Caputo
derivative and the fractional integral then act as exact exponent
shifts that append cancelling gamma tokens, so a derivative/integral
round trip restores a term bit for bit. Binding a numeric alpha only
happens inside evaluate(), where the gamma ratios are resolved in log
space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ConfigError, DomainError, ExponentError
from .expr import (
    Const,
    Fingerprint,
    SpatialExpr,
    add,
    const,
    creation_index,
    differentiate,
    evaluate,
    fingerprint,
    fp_norm,
    mul,
    normalize,
    parse_prefix,
    proportional_ratio,
    size,
    to_prefix,
)

# Relative threshold below which a merged coefficient is cancellation dust.
COLLECT_DROP_TOL = 1e-13

# Relative threshold for declaring a merged spatial group the zero function.
GROUP_ZERO_TOL = 1e-10


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise ExponentError(f"exponent part must be rational, got {value!r}")


@dataclass(frozen=True, order=True)
class GammaArg:
    """Argument of a gamma token: the value a + b*alpha."""

    a: Fraction
    b: int

    def value(self, alpha: float) -> float:
        return float(self.a) + self.b * alpha


def _cancel(num: Sequence[GammaArg], den: Sequence[GammaArg]):
    """Remove tokens shared by numerator and denominator (multiset)."""
    remaining = list(den)
    kept_num = []
    for arg in num:
        if arg in remaining:
            remaining.remove(arg)
        else:
            kept_num.append(arg)
    return kept_num, remaining


@dataclass(frozen=True)
class Monomial:
    """factor * prod gamma(num) / prod gamma(den)."""

    factor: float
    num: tuple[GammaArg, ...]
    den: tuple[GammaArg, ...]

    def signature(self):
        return (self.num, self.den)

    def value(self, alpha: float) -> float:
        log_ratio = 0.0
        for arg in self.num:
            log_ratio += math.lgamma(arg.value(alpha))
        for arg in self.den:
            log_ratio -= math.lgamma(arg.value(alpha))
        return self.factor * math.exp(log_ratio)


def _monomial(factor: float, num: Iterable[GammaArg], den: Iterable[GammaArg]) -> Monomial:
    num, den = _cancel(tuple(num), tuple(den))
    # Tokens without an alpha part are plain numbers; fold them away.
    kept_num = []
    for arg in num:
        if arg.b == 0:
            factor *= math.gamma(float(arg.a))
        else:
            kept_num.append(arg)
    kept_den = []
    for arg in den:
        if arg.b == 0:
            factor /= math.gamma(float(arg.a))
        else:
            kept_den.append(arg)
    return Monomial(factor, tuple(sorted(kept_num)), tuple(sorted(kept_den)))


@dataclass(frozen=True)
class Coefficient:
    """Sum of gamma-ratio monomials, symbolic in alpha."""

    monomials: tuple[Monomial, ...]

    @staticmethod
    def number(factor: float) -> "Coefficient":
        return _normalize_monomials([Monomial(float(factor), (), ())])

    def plus(self, other: "Coefficient") -> "Coefficient":
        return _normalize_monomials(list(self.monomials) + list(other.monomials))

    def times(self, other: "Coefficient") -> "Coefficient":
        products = [
            _monomial(a.factor * b.factor, a.num + b.num, a.den + b.den)
            for a in self.monomials
            for b in other.monomials
        ]
        return _normalize_monomials(products)

    def scaled(self, k: float) -> "Coefficient":
        if k == 0.0:
            return COEF_ZERO
        return Coefficient(
            tuple(Monomial(m.factor * k, m.num, m.den) for m in self.monomials)
        )

    def gamma_ratio(self, num_arg: GammaArg, den_arg: GammaArg) -> "Coefficient":
        """Multiply by gamma(num_arg) / gamma(den_arg)."""
        return _normalize_monomials(
            [
                _monomial(m.factor, m.num + (num_arg,), m.den + (den_arg,))
                for m in self.monomials
            ]
        )

    def value(self, alpha: float) -> float:
        return sum(m.value(alpha) for m in self.monomials)

    @property
    def is_zero(self) -> bool:
        return not self.monomials

    def signature(self):
        return tuple(m.signature() for m in self.monomials)

    def parallel_ratio(self, other: "Coefficient") -> float | None:
        """Ratio r with other ~= r * self, or None.

        Requires identical token structure; factors must then agree up
        to one common scale.
        """
        if self.signature() != other.signature():
            return None
        pivot = max(range(len(self.monomials)), key=lambda i: abs(self.monomials[i].factor))
        base = self.monomials[pivot].factor
        if base == 0.0:
            return None
        ratio = other.monomials[pivot].factor / base
        for mine, theirs in zip(self.monomials, other.monomials):
            want = ratio * mine.factor
            if abs(theirs.factor - want) > 1e-12 * max(abs(theirs.factor), abs(want)) + 1e-300:
                return None
        return ratio


def _normalize_monomials(monomials: Iterable[Monomial]) -> Coefficient:
    """Merge same-token monomials; drop exact zeros and cancellation dust."""
    merged: dict = {}
    peak: dict = {}
    for mono in monomials:
        key = mono.signature()
        if key in merged:
            prev = merged[key]
            merged[key] = Monomial(prev.factor + mono.factor, mono.num, mono.den)
            peak[key] = max(peak[key], abs(mono.factor))
        else:
            merged[key] = mono
            peak[key] = abs(mono.factor)
    kept = [
        m
        for key, m in merged.items()
        if m.factor != 0.0 and abs(m.factor) > COLLECT_DROP_TOL * peak[key]
    ]
    kept.sort(key=lambda m: m.signature())
    return Coefficient(tuple(kept))


COEF_ZERO = Coefficient(())
COEF_ONE = Coefficient((Monomial(1.0, (), ()),))


@dataclass(frozen=True)
class TimeFactor:
    """Time dependence t**(p + q*alpha) * exp(c*t)."""

    p: Fraction
    q: int
    c: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _as_fraction(self.p))
        if self.p < 0:
            raise ExponentError(f"negative fixed exponent p={self.p}")
        # Keep p + q*alpha >= 0 for every alpha in (0, 1].
        if self.q < 0 and self.p < -self.q:
            raise ExponentError(
                f"exponent {self.p} + {self.q}*alpha can go negative on (0, 1]"
            )

    def exponent(self, alpha: float) -> float:
        return float(self.p) + self.q * alpha

    def plus(self, other: "TimeFactor") -> "TimeFactor":
        return TimeFactor(self.p + other.p, self.q + other.q, self.c + other.c)

    @property
    def sort_key(self):
        return (self.q, self.p, self.c)


TIME_ONE = TimeFactor(Fraction(0), 0, 0)


@dataclass(frozen=True)
class FracTerm:
    coef: Coefficient
    spatial: SpatialExpr
    time: TimeFactor


class SpatialBasis:
    """Registry of known spatial shapes.

    collect() consults it to swap freshly merged trees for the smallest
    previously seen tree with a proportional fingerprint. This keeps
    iterate trees from growing across deformation steps; it changes
    representation only, never value (up to the package-wide numeric
    equality). One instance belongs to one run; not thread-safe.
    """

    MAX_ENTRIES = 4096
    MAX_TREE_SIZE = 2000

    def __init__(self) -> None:
        self._entries: list[tuple[int, SpatialExpr, Fingerprint]] = []

    def seed(self, exprs: Iterable[SpatialExpr]) -> None:
        for expr in exprs:
            self.register(expr)

    def lookup(self, fp: Fingerprint) -> tuple[SpatialExpr, float] | None:
        if fp_norm(fp) == 0.0:
            return None
        for _, tree, known in self._entries:
            ratio = proportional_ratio(fp, known)
            if ratio is not None:
                return tree, ratio
        return None

    def register(self, expr: SpatialExpr) -> None:
        if len(self._entries) >= self.MAX_ENTRIES:
            return
        n = size(expr)
        if n > self.MAX_TREE_SIZE:
            return
        fp = fingerprint(expr)
        if fp_norm(fp) == 0.0 or self.lookup(fp) is not None:
            return
        self._entries.append((n, expr, fp))
        self._entries.sort(key=lambda e: e[0])


def _merge_proportional(items: list[tuple[Coefficient, SpatialExpr, Fingerprint]]):
    """Fold terms whose spatial fingerprints are parallel into one."""
    items = sorted(items, key=lambda it: (size(it[1]), it[2], creation_index(it[1])))
    reps: list[list] = []
    for coef, tree, fp in items:
        for rep in reps:
            ratio = proportional_ratio(fp, rep[2])
            if ratio is not None:
                rep[0] = rep[0].plus(coef.scaled(ratio))
                break
        else:
            reps.append([coef, tree, fp])
    return [rep for rep in reps if not rep[0].is_zero]


def _merge_parallel(reps: list[list], basis: SpatialBasis | None):
    """Combine same-exponent terms with parallel coefficients.

    Replaces each parallel class by a single term whose spatial part is
    the weighted sum of the members; groups that cancel to the zero
    function are dropped outright.
    """
    classes: list[list] = []  # [leader_coef, [(tree, fp, weight)...]]
    for coef, tree, fp in reps:
        for cls in classes:
            ratio = cls[0].parallel_ratio(coef)
            if ratio is not None:
                cls[1].append((tree, fp, ratio))
                break
        else:
            classes.append([coef, [(tree, fp, 1.0)]])

    out = []
    for leader, members in classes:
        if len(members) == 1:
            tree, fp, _ = members[0]
        else:
            tree = normalize(add(*(mul(const(w), t) for t, _, w in members)))
            scale = sum(abs(w) * fp_norm(f) for _, f, w in members)
            fp = fingerprint(tree)
            if fp_norm(fp) <= GROUP_ZERO_TOL * scale:
                continue
        if basis is not None:
            hit = basis.lookup(fp)
            if hit is not None and size(hit[0]) <= size(tree):
                known, ratio = hit
                out.append((leader.scaled(ratio), known, fingerprint(known)))
                continue
            basis.register(tree)
        out.append((leader, tree, fp))
    return out


def _collect(terms: Iterable[FracTerm], basis: SpatialBasis | None) -> tuple[FracTerm, ...]:
    groups: dict[TimeFactor, list] = {}
    for term in terms:
        if term.coef.is_zero:
            continue
        spatial = normalize(term.spatial)
        fp = fingerprint(spatial)
        if fp_norm(fp) == 0.0:
            continue
        groups.setdefault(term.time, []).append((term.coef, spatial, fp))

    out: list[FracTerm] = []
    for time in sorted(groups, key=lambda tf: tf.sort_key):
        reps = _merge_proportional(groups[time])
        reps = _merge_parallel(reps, basis)
        reps = _merge_proportional([tuple(r) for r in reps])
        reps.sort(key=lambda rep: rep[2])
        out.extend(FracTerm(coef, tree, time) for coef, tree, _ in reps)
    return tuple(out)


@dataclass(frozen=True)
class FracSeries:
    """Finite sum of FracTerms; all operations return new series."""

    terms: tuple[FracTerm, ...]

    @staticmethod
    def zero() -> "FracSeries":
        return FracSeries(())

    @staticmethod
    def from_spatial(
        expr: SpatialExpr,
        factor: float = 1.0,
        p=0,
        q: int = 0,
        c: int = 0,
    ) -> "FracSeries":
        term = FracTerm(Coefficient.number(factor), expr, TimeFactor(_as_fraction(p), q, c))
        return FracSeries(_collect([term], None))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def has_exponential(self) -> bool:
        return any(t.time.c != 0 for t in self.terms)

    def collected(self, basis: SpatialBasis | None = None) -> "FracSeries":
        return FracSeries(_collect(self.terms, basis))

    def add(self, other: "FracSeries") -> "FracSeries":
        return FracSeries(_collect(self.terms + other.terms, None))

    __add__ = add

    def scale(self, k: float) -> "FracSeries":
        if k == 0.0:
            return FracSeries.zero()
        return FracSeries(
            tuple(FracTerm(t.coef.scaled(k), t.spatial, t.time) for t in self.terms)
        )

    def multiply(self, other: "FracSeries") -> "FracSeries":
        products = [
            FracTerm(a.coef.times(b.coef), mul(a.spatial, b.spatial), a.time.plus(b.time))
            for a in self.terms
            for b in other.terms
        ]
        return FracSeries(_collect(products, None))

    __mul__ = multiply

    def spatial_derivative(self, name: str, order: int = 1) -> "FracSeries":
        if order not in (1, 2):
            raise DomainError(f"derivative order must be 1 or 2, got {order}")
        terms = self.terms
        for _ in range(order):
            terms = tuple(
                FracTerm(t.coef, differentiate(t.spatial, name), t.time) for t in terms
            )
        return FracSeries(_collect(terms, None))

    def caputo_derivative(self) -> "FracSeries":
        """Caputo derivative of order alpha, applied termwise.

        t**(p + q*alpha) picks up gamma(1 + p + q*alpha) /
        gamma(1 + p + (q-1)*alpha) and drops one alpha from the
        exponent; constants in time are annihilated.
        """
        out = []
        for term in self.terms:
            tf = term.time
            if tf.c != 0:
                raise ExponentError(
                    "caputo_derivative needs pure powers; taylor_expand exp(c*t) first"
                )
            if tf.p == 0 and tf.q == 0:
                continue
            shifted = TimeFactor(tf.p, tf.q - 1, 0)  # raises if it can go negative
            coef = term.coef.gamma_ratio(
                GammaArg(1 + tf.p, tf.q), GammaArg(1 + tf.p, tf.q - 1)
            )
            out.append(FracTerm(coef, term.spatial, shifted))
        return FracSeries(_collect(out, None))

    def frac_integral(self) -> "FracSeries":
        """Riemann-Liouville integral of order alpha; exact inverse of
        caputo_derivative on its image (the gamma tokens cancel)."""
        out = []
        for term in self.terms:
            tf = term.time
            if tf.c != 0:
                raise ExponentError(
                    "frac_integral needs pure powers; taylor_expand exp(c*t) first"
                )
            shifted = TimeFactor(tf.p, tf.q + 1, 0)
            coef = term.coef.gamma_ratio(
                GammaArg(1 + tf.p, tf.q), GammaArg(1 + tf.p, tf.q + 1)
            )
            out.append(FracTerm(coef, term.spatial, shifted))
        return FracSeries(_collect(out, None))

    def taylor_expand(self, n_terms: int) -> "FracSeries":
        """Replace each exp(c*t) factor by its first n_terms powers of t."""
        if n_terms < 1:
            raise ConfigError(f"taylor_expand needs n_terms >= 1, got {n_terms}")
        out = []
        for term in self.terms:
            tf = term.time
            if tf.c == 0:
                out.append(term)
                continue
            for j in range(n_terms):
                weight = tf.c**j / math.factorial(j)
                out.append(
                    FracTerm(
                        term.coef.scaled(weight),
                        term.spatial,
                        TimeFactor(tf.p + j, tf.q, 0),
                    )
                )
        return FracSeries(_collect(out, None))

    def evaluate(self, x: float, t: float, alpha: float, y: float = 0.0) -> float:
        """Bind alpha and evaluate at (x, y, t); 0**0 counts as 1."""
        _check_alpha(alpha)
        if t < 0.0:
            raise DomainError(f"series are defined for t >= 0, got t={t}")
        total = 0.0
        for term in self.terms:
            exponent = term.time.exponent(alpha)
            if exponent < 0.0:
                raise ExponentError(
                    f"negative time exponent {exponent} at alpha={alpha}"
                )
            if t == 0.0:
                tpow = 1.0 if exponent == 0.0 else 0.0
            else:
                tpow = t**exponent
            if tpow == 0.0:
                continue
            value = term.coef.value(alpha) * evaluate(term.spatial, x, y) * tpow
            if term.time.c != 0:
                value *= math.exp(term.time.c * t)
            total += value
        return total

    # -- serialization -------------------------------------------------

    def to_obj(self) -> list:
        return [_term_obj(t) for t in self.terms]

    @staticmethod
    def from_obj(obj: Sequence) -> "FracSeries":
        return FracSeries(tuple(_term_from_obj(item) for item in obj))

    def to_json(self) -> str:
        return json.dumps(self.to_obj())

    @staticmethod
    def from_json(text: str) -> "FracSeries":
        return FracSeries.from_obj(json.loads(text))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")


def _frac_str(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _gamma_arg_obj(arg: GammaArg) -> list:
    return [_frac_str(arg.a), arg.b]


def _term_obj(term: FracTerm) -> dict:
    return {
        "coef_tokens": [
            {
                "factor": m.factor,
                "num": [_gamma_arg_obj(a) for a in m.num],
                "den": [_gamma_arg_obj(a) for a in m.den],
            }
            for m in term.coef.monomials
        ],
        "spatial": to_prefix(term.spatial),
        "p": _frac_str(term.time.p),
        "q": term.time.q,
        "c": term.time.c,
    }


def _gamma_arg_from_obj(obj) -> GammaArg:
    return GammaArg(Fraction(str(obj[0])), int(obj[1]))


def _term_from_obj(obj: dict) -> FracTerm:
    coef = Coefficient(
        tuple(
            Monomial(
                float(m["factor"]),
                tuple(_gamma_arg_from_obj(a) for a in m["num"]),
                tuple(_gamma_arg_from_obj(a) for a in m["den"]),
            )
            for m in obj["coef_tokens"]
        )
    )
    time = TimeFactor(Fraction(str(obj["p"])), int(obj["q"]), int(obj["c"]))
    return FracTerm(coef, parse_prefix(obj["spatial"]), time)
