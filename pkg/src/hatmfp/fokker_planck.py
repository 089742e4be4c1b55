"""Drift/diffusion problem builders.

Forward (Kolmogorov) form keeps the coefficients inside the
derivatives,

    D_t^alpha u = -sum_i d_i(A_i u) + sum_ij d_i d_j(B_ij u),

and is expanded here by the product rule into derivative monomials.
Coefficients may carry one factor of the state itself (u_degree = 1),
which turns the expansion quadratic. The backward form keeps the
coefficients outside,

    D_t^alpha u = -sum_i A_i d_i u + sum_ij B_ij d_i d_j u,

and admits no state-dependent coefficients. Either way coefficients
are separable pieces spatial(x, y) * exp(exp_rate * t).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .engine import LinearMonomial, MultiIndex, ProblemSpec, QuadraticMonomial
from .errors import ConfigError, DegreeError, HatmError, PresetError
from .expr import (
    SpatialExpr,
    X,
    Y,
    add,
    const,
    cosh,
    coth,
    differentiate,
    fingerprint,
    fp_norm,
    mul,
    parse_prefix,
    pow_,
    sinh,
    to_prefix,
)
from .series import FracSeries, FracTerm, Coefficient, TimeFactor, _collect

_VARS = ("x", "y")


@dataclass(frozen=True)
class CoefficientSpec:
    """One separable piece of a drift or diffusion entry:
    spatial(x, y) * exp(exp_rate * t) * u**u_degree."""

    spatial: SpatialExpr
    exp_rate: int = 0
    u_degree: int = 0

    def __post_init__(self) -> None:
        if self.u_degree not in (0, 1):
            raise DegreeError(
                f"u_degree {self.u_degree} would take the expansion past quadratic"
            )


def _as_specs(entry) -> tuple[CoefficientSpec, ...]:
    """Accept a spec, a bare expression/number, or a list of either (a sum)."""
    if entry is None:
        return ()
    if isinstance(entry, CoefficientSpec):
        return (entry,)
    if isinstance(entry, SpatialExpr):
        return (CoefficientSpec(entry),)
    if isinstance(entry, (int, float, Fraction)):
        value = float(entry)
        return () if value == 0.0 else (CoefficientSpec(const(value)),)
    if isinstance(entry, (list, tuple)):
        out: list[CoefficientSpec] = []
        for item in entry:
            out.extend(_as_specs(item))
        return tuple(out)
    raise ConfigError(f"cannot interpret coefficient entry {entry!r}")


def _unit(i: int) -> MultiIndex:
    return (1, 0) if i == 0 else (0, 1)


def _pair(i: int, j: int) -> MultiIndex:
    return tuple(a + b for a, b in zip(_unit(i), _unit(j)))  # type: ignore[return-value]


def _merge_monomials(linear, quadratic):
    """Sum coefficient trees of repeated derivative patterns and drop
    the ones that cancel (mixed-derivative pairs land here)."""
    lin_groups: dict = {}
    for mono in linear:
        lin_groups.setdefault((mono.deriv, mono.exp_rate), []).append(mono.coef)
    quad_groups: dict = {}
    for mono in quadratic:
        slots = tuple(sorted((mono.deriv_a, mono.deriv_b)))
        quad_groups.setdefault((slots, mono.exp_rate), []).append(mono.coef)

    lin_out = []
    for (deriv, rate), coefs in lin_groups.items():
        coef = add(*coefs)
        if fp_norm(fingerprint(coef)) != 0.0:
            lin_out.append(LinearMonomial(coef, deriv, rate))
    quad_out = []
    for ((da, db), rate), coefs in quad_groups.items():
        coef = add(*coefs)
        if fp_norm(fingerprint(coef)) != 0.0:
            quad_out.append(QuadraticMonomial(coef, da, db, rate))
    return tuple(lin_out), tuple(quad_out)


def _check_shapes(dim: int, drift, diffusion) -> None:
    if len(drift) != dim:
        raise ConfigError(f"drift needs {dim} entries, got {len(drift)}")
    if len(diffusion) != dim or any(len(row) != dim for row in diffusion):
        raise ConfigError(f"diffusion needs a {dim}x{dim} matrix")


def build_forward(
    dim: int,
    drift: Sequence,
    diffusion: Sequence[Sequence],
    initial: SpatialExpr,
    source: FracSeries | None = None,
) -> ProblemSpec:
    """Expand the forward equation into derivative monomials."""
    _check_shapes(dim, drift, diffusion)
    linear: list[LinearMonomial] = []
    quadratic: list[QuadraticMonomial] = []

    for i, entry in enumerate(drift):
        for spec in _as_specs(entry):
            a, rate = spec.spatial, spec.exp_rate
            da = differentiate(a, _VARS[i])
            if spec.u_degree == 0:
                linear.append(LinearMonomial(mul(const(-1), da), (0, 0), rate))
                linear.append(LinearMonomial(mul(const(-1), a), _unit(i), rate))
            else:
                quadratic.append(QuadraticMonomial(mul(const(-1), da), (0, 0), (0, 0), rate))
                quadratic.append(QuadraticMonomial(mul(const(-2), a), (0, 0), _unit(i), rate))

    for i, row in enumerate(diffusion):
        for j, entry in enumerate(row):
            for spec in _as_specs(entry):
                b, rate = spec.spatial, spec.exp_rate
                dbi = differentiate(b, _VARS[i])
                dbj = differentiate(b, _VARS[j])
                dbij = differentiate(dbi, _VARS[j])
                if spec.u_degree == 0:
                    linear.append(LinearMonomial(dbij, (0, 0), rate))
                    linear.append(LinearMonomial(dbi, _unit(j), rate))
                    linear.append(LinearMonomial(dbj, _unit(i), rate))
                    linear.append(LinearMonomial(b, _pair(i, j), rate))
                else:
                    quadratic.append(QuadraticMonomial(dbij, (0, 0), (0, 0), rate))
                    quadratic.append(QuadraticMonomial(mul(const(2), dbi), (0, 0), _unit(j), rate))
                    quadratic.append(QuadraticMonomial(mul(const(2), dbj), (0, 0), _unit(i), rate))
                    quadratic.append(QuadraticMonomial(mul(const(2), b), _unit(i), _unit(j), rate))
                    quadratic.append(QuadraticMonomial(mul(const(2), b), (0, 0), _pair(i, j), rate))

    linear, quadratic = _merge_monomials(linear, quadratic)
    return ProblemSpec(dim, linear, quadratic, initial, source or FracSeries.zero())


def build_backward(
    dim: int,
    drift: Sequence,
    diffusion: Sequence[Sequence],
    initial: SpatialExpr,
    source: FracSeries | None = None,
) -> ProblemSpec:
    """Backward form: coefficients stay outside the derivatives."""
    _check_shapes(dim, drift, diffusion)
    linear: list[LinearMonomial] = []

    def specs_of(entry, where: str):
        specs = _as_specs(entry)
        for spec in specs:
            if spec.u_degree != 0:
                raise DegreeError(
                    f"backward form takes state-free coefficients; {where} has u_degree=1"
                )
        return specs

    for i, entry in enumerate(drift):
        for spec in specs_of(entry, f"A[{i}]"):
            linear.append(
                LinearMonomial(mul(const(-1), spec.spatial), _unit(i), spec.exp_rate)
            )
    for i, row in enumerate(diffusion):
        for j, entry in enumerate(row):
            for spec in specs_of(entry, f"B[{i}][{j}]"):
                linear.append(LinearMonomial(spec.spatial, _pair(i, j), spec.exp_rate))

    linear, _ = _merge_monomials(linear, ())
    return ProblemSpec(dim, linear, (), initial, source or FracSeries.zero())


def _preset_41() -> ProblemSpec:
    return build_forward(1, [const(-1)], [[const(1)]], X)


def _preset_42() -> ProblemSpec:
    drift = [
        [
            CoefficientSpec(add(mul(coth(X), cosh(X)), sinh(X)), exp_rate=1),
            CoefficientSpec(mul(const(-1), coth(X))),
        ]
    ]
    diffusion = [[CoefficientSpec(cosh(X), exp_rate=1)]]
    return build_forward(1, drift, diffusion, sinh(X))


def _preset_43() -> ProblemSpec:
    drift = [mul(const(-1), add(X, const(1)))]
    diffusion = [[CoefficientSpec(pow_(X, 2), exp_rate=1)]]
    return build_backward(1, drift, diffusion, add(X, const(1)))


def _preset_44() -> ProblemSpec:
    drift = [X, mul(const(5), Y)]
    diffusion = [[pow_(X, 2), const(1)], [const(1), pow_(Y, 2)]]
    return build_forward(2, drift, diffusion, X)


def _preset_45() -> ProblemSpec:
    drift = [
        [
            CoefficientSpec(mul(const(4), pow_(X, -1)), u_degree=1),
            CoefficientSpec(mul(const(Fraction(-1, 3)), X)),
        ]
    ]
    diffusion = [[CoefficientSpec(const(1), u_degree=1)]]
    return build_forward(1, drift, diffusion, pow_(X, 2))


_PRESETS = {
    "4.1": _preset_41,
    "4.2": _preset_42,
    "4.3": _preset_43,
    "4.4": _preset_44,
    "4.5": _preset_45,
}

PRESET_IDS = tuple(sorted(_PRESETS))


def preset(preset_id: str) -> ProblemSpec:
    try:
        builder = _PRESETS[preset_id]
    except KeyError:
        raise PresetError(
            f"unknown preset {preset_id!r}; known: {', '.join(PRESET_IDS)}"
        ) from None
    return builder()


# -- problem definition files -----------------------------------------


def _spec_from_obj(obj) -> tuple[CoefficientSpec, ...]:
    if obj is None:
        return ()
    if isinstance(obj, str):
        return (CoefficientSpec(parse_prefix(obj)),)
    if isinstance(obj, (int, float)):
        return _as_specs(obj)
    if isinstance(obj, dict):
        return (
            CoefficientSpec(
                parse_prefix(obj["expr"]),
                int(obj.get("exp_rate", 0)),
                int(obj.get("u_degree", 0)),
            ),
        )
    if isinstance(obj, list):
        out: list[CoefficientSpec] = []
        for item in obj:
            out.extend(_spec_from_obj(item))
        return tuple(out)
    raise ConfigError(f"cannot read coefficient entry {obj!r}")


def _source_from_obj(obj) -> FracSeries:
    if not obj:
        return FracSeries.zero()
    terms = []
    for item in obj:
        terms.append(
            FracTerm(
                Coefficient.number(float(item.get("coef", 1.0))),
                parse_prefix(item["expr"]),
                TimeFactor(
                    Fraction(str(item.get("p", 0))),
                    int(item.get("q", 0)),
                    int(item.get("c", 0)),
                ),
            )
        )
    return FracSeries(_collect(terms, None))


def problem_from_obj(obj: dict) -> ProblemSpec:
    """Build a problem from its JSON object form."""
    try:
        form = obj["form"]
        dim = int(obj["dim"])
        drift = [_spec_from_obj(entry) for entry in obj["A"]]
        diffusion = [[_spec_from_obj(entry) for entry in row] for row in obj["B"]]
        initial = parse_prefix(obj["f"])
        source = _source_from_obj(obj.get("g"))
        if form == "forward":
            return build_forward(dim, drift, diffusion, initial, source)
        if form == "backward":
            return build_backward(dim, drift, diffusion, initial, source)
        raise ConfigError(f"form must be 'forward' or 'backward', got {form!r}")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed problem definition: {exc}") from exc
    except HatmError as exc:
        raise ConfigError(f"invalid problem definition: {exc}") from exc


def load_problem(path: str | Path) -> ProblemSpec:
    """Read a problem definition JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"problem file {path} is not valid JSON: {exc}") from exc
    return problem_from_obj(obj)


def problem_to_obj(form: str, dim: int, drift, diffusion, initial, source=None) -> dict:
    """Inverse convenience for writing definition files from code."""

    def spec_obj(spec: CoefficientSpec):
        out: dict = {"expr": to_prefix(spec.spatial)}
        if spec.exp_rate:
            out["exp_rate"] = spec.exp_rate
        if spec.u_degree:
            out["u_degree"] = spec.u_degree
        return out

    def entry_obj(entry):
        specs = [spec_obj(s) for s in _as_specs(entry)]
        if len(specs) == 1:
            return specs[0]
        return specs

    obj = {
        "form": form,
        "dim": dim,
        "A": [entry_obj(e) for e in drift],
        "B": [[entry_obj(e) for e in row] for row in diffusion],
        "f": to_prefix(initial),
    }
    if source is not None and not source.is_zero:
        obj["g"] = [
            {
                "expr": to_prefix(t.spatial),
                "coef": t.coef.value(1.0),
                "p": str(t.time.p),
                "q": t.time.q,
                "c": t.time.c,
            }
            for t in source.terms
        ]
    return obj
