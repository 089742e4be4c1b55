"""Immutable symbolic expressions over the spatial variables x and y.

Drift and diffusion coefficients live here: hyperbolic functions,
rational powers and polynomial combinations. Trees never rewrite
themselves; the only construction-time simplifications are constant
folding and absorbing 0/1 in sums, products and powers. Equality is
decided numerically instead, by comparing evaluations on a fixed panel
of sample points (the "fingerprint"). The panel sits away from the
poles of coth, csch and 1/x, so fingerprints of the coefficient
families handled here are always finite.

Nodes are hash-consed: the module-level constructors return one shared
object per distinct tree, and hash, node count, variable set and
fingerprint are cached on the node. Repeated differentiation and
collection therefore build a shared DAG, and every traversal here costs
one visit per distinct subtree rather than one per path. Build through
the constructors; instantiating the dataclasses directly still gives
correct (structural) equality but skips the sharing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Union

from .errors import DomainError, SingularityError

Number = Union[int, float, Fraction]

# Magnitudes below this count as a zero divisor.
SINGULAR_FLOOR = 1e-300

# Numeric-equality tolerances shared by fingerprint comparisons.
REL_TOL = 1e-10
ABS_TOL = 1e-12

FINGERPRINT_VERSION = 1
FINGERPRINT_POINTS: tuple[tuple[float, float], ...] = tuple(
    (x, y) for x in (0.531, 0.877, 1.203, 1.618) for y in (0.733, 1.414)
)

Fingerprint = tuple[float, ...]


@dataclass(frozen=True)
class SpatialExpr:
    """Base node. Build through the module-level constructors."""

    def __add__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return add(self, mul(const(-1), _coerce(other)))

    def __rsub__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return add(_coerce(other), mul(const(-1), self))

    def __mul__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return mul(self, recip(_coerce(other)))

    def __rtruediv__(self, other: "SpatialExpr | Number") -> "SpatialExpr":
        return mul(_coerce(other), recip(self))

    def __pow__(self, exponent: Number) -> "SpatialExpr":
        return pow_(self, exponent)

    def __neg__(self) -> "SpatialExpr":
        return mul(const(-1), self)


@dataclass(frozen=True)
class Const(SpatialExpr):
    value: float


@dataclass(frozen=True)
class Var(SpatialExpr):
    name: str  # "x" or "y"


@dataclass(frozen=True)
class Add(SpatialExpr):
    children: tuple[SpatialExpr, ...]


@dataclass(frozen=True)
class Mul(SpatialExpr):
    children: tuple[SpatialExpr, ...]


@dataclass(frozen=True)
class Pow(SpatialExpr):
    base: SpatialExpr
    exponent: Fraction


@dataclass(frozen=True)
class Func(SpatialExpr):
    kind: str  # sinh | cosh | tanh | coth | csch | recip
    arg: SpatialExpr


def _structural_key(expr: SpatialExpr) -> tuple:
    if isinstance(expr, Const):
        return ("c", expr.value)
    if isinstance(expr, Var):
        return ("v", expr.name)
    if isinstance(expr, Add):
        return ("a", expr.children)
    if isinstance(expr, Mul):
        return ("m", expr.children)
    if isinstance(expr, Pow):
        return ("p", expr.base, expr.exponent)
    if isinstance(expr, Func):
        return ("f", expr.kind, expr.arg)
    raise DomainError(f"unknown node {expr!r}")  # pragma: no cover


def _node_hash(self: SpatialExpr) -> int:
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash(_structural_key(self))
        object.__setattr__(self, "_hash", h)
    return h


# The generated dataclass hash recomputes over the whole tree on every
# call; replace it with the cached one (keys of child nodes are already
# cached, so a fresh node hashes in one shallow step).
for _cls in (Const, Var, Add, Mul, Pow, Func):
    _cls.__hash__ = _node_hash  # type: ignore[assignment]


_INTERN: dict[tuple, SpatialExpr] = {}
_SEQUENCE = itertools.count()


def _shared(key: tuple, ctor: Callable[..., SpatialExpr], *args) -> SpatialExpr:
    node = _INTERN.get(key)
    if node is None:
        node = ctor(*args)
        object.__setattr__(node, "_seq", next(_SEQUENCE))
        _INTERN[key] = node
    return node


def creation_index(expr: SpatialExpr) -> int:
    """Construction order of the node: a cheap, deterministic sort key."""
    seq = expr.__dict__.get("_seq")
    if seq is None:
        seq = next(_SEQUENCE)
        object.__setattr__(expr, "_seq", seq)
    return seq


def _coerce(value: SpatialExpr | Number) -> SpatialExpr:
    if isinstance(value, SpatialExpr):
        return value
    if isinstance(value, (int, float, Fraction)):
        return const(value)
    raise TypeError(f"cannot interpret {value!r} as a spatial expression")


def const(value: Number) -> Const:
    v = float(value)
    return _shared(("c", v), Const, v)  # type: ignore[return-value]


X: Var = _shared(("v", "x"), Var, "x")  # type: ignore[assignment]
Y: Var = _shared(("v", "y"), Var, "y")  # type: ignore[assignment]

ZERO = const(0.0)
ONE = const(1.0)


def var(name: str) -> Var:
    if name not in ("x", "y"):
        raise DomainError(f"unknown spatial variable {name!r}")
    return X if name == "x" else Y


def add(*terms: SpatialExpr | Number) -> SpatialExpr:
    """Sum node: flattens nested sums, folds constants, drops zeros."""
    flat: list[SpatialExpr] = []
    csum = 0.0
    for node in (_coerce(t) for t in terms):
        parts = node.children if isinstance(node, Add) else (node,)
        for part in parts:
            if isinstance(part, Const):
                csum += part.value
            else:
                flat.append(part)
    if csum != 0.0:
        flat.insert(0, const(csum))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    children = tuple(flat)
    return _shared(("a", children), Add, children)


def mul(*factors: SpatialExpr | Number) -> SpatialExpr:
    """Product node: flattens, folds constants, absorbs 0 and 1."""
    flat: list[SpatialExpr] = []
    cprod = 1.0
    for node in (_coerce(f) for f in factors):
        parts = node.children if isinstance(node, Mul) else (node,)
        for part in parts:
            if isinstance(part, Const):
                cprod *= part.value
            else:
                flat.append(part)
    if cprod == 0.0:
        return ZERO
    if cprod != 1.0:
        flat.insert(0, const(cprod))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    children = tuple(flat)
    return _shared(("m", children), Mul, children)


def pow_(base: SpatialExpr | Number, exponent: Number) -> SpatialExpr:
    """Power with an exact rational exponent."""
    base = _coerce(base)
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return const(_pow_value(base.value, exponent))
    return _shared(("p", base, exponent), Pow, base, exponent)


def _pow_value(value: float, exponent: Fraction) -> float:
    if value < 0.0 and exponent.denominator != 1:
        raise DomainError(f"fractional power of negative base {value}")
    if exponent < 0 and abs(value) < SINGULAR_FLOOR:
        raise SingularityError(f"negative power of {value}")
    return value ** float(exponent)


def _guarded_div(numerator: float, denominator: float) -> float:
    if abs(denominator) < SINGULAR_FLOOR:
        raise SingularityError(f"division by {denominator}")
    return numerator / denominator


_FUNC_EVAL = {
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "coth": lambda v: _guarded_div(math.cosh(v), math.sinh(v)),
    "csch": lambda v: _guarded_div(1.0, math.sinh(v)),
    "recip": lambda v: _guarded_div(1.0, v),
}


def _func(kind: str, arg: SpatialExpr | Number) -> SpatialExpr:
    arg = _coerce(arg)
    if isinstance(arg, Const):
        return const(_FUNC_EVAL[kind](arg.value))
    return _shared(("f", kind, arg), Func, kind, arg)


def sinh(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("sinh", arg)


def cosh(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("cosh", arg)


def tanh(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("tanh", arg)


def coth(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("coth", arg)


def csch(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("csch", arg)


def recip(arg: SpatialExpr | Number) -> SpatialExpr:
    return _func("recip", arg)


@lru_cache(maxsize=None)
def differentiate(expr: SpatialExpr, name: str) -> SpatialExpr:
    """Exact partial derivative with respect to variable `name`."""
    if name not in ("x", "y"):
        raise DomainError(f"unknown spatial variable {name!r}")
    if isinstance(expr, Const):
        return ZERO
    if isinstance(expr, Var):
        return ONE if expr.name == name else ZERO
    if isinstance(expr, Add):
        return add(*(differentiate(c, name) for c in expr.children))
    if isinstance(expr, Mul):
        parts = []
        for i, child in enumerate(expr.children):
            rest = expr.children[:i] + expr.children[i + 1 :]
            parts.append(mul(differentiate(child, name), *rest))
        return add(*parts)
    if isinstance(expr, Pow):
        return mul(
            const(float(expr.exponent)),
            pow_(expr.base, expr.exponent - 1),
            differentiate(expr.base, name),
        )
    if isinstance(expr, Func):
        inner = differentiate(expr.arg, name)
        a = expr.arg
        if expr.kind == "sinh":
            outer = cosh(a)
        elif expr.kind == "cosh":
            outer = sinh(a)
        elif expr.kind == "tanh":
            outer = add(ONE, mul(const(-1), pow_(tanh(a), 2)))
        elif expr.kind == "coth":
            outer = mul(const(-1), pow_(csch(a), 2))
        elif expr.kind == "csch":
            outer = mul(const(-1), coth(a), csch(a))
        elif expr.kind == "recip":
            outer = mul(const(-1), pow_(a, -2))
        else:  # pragma: no cover - constructors keep kinds closed
            raise DomainError(f"unknown function kind {expr.kind!r}")
        return mul(outer, inner)
    raise DomainError(f"cannot differentiate {expr!r}")  # pragma: no cover


def evaluate(expr: SpatialExpr, x: float, y: float = 0.0) -> float:
    """Evaluate at a point; singular divisions raise, never return NaN."""
    memo: dict[int, float] = {}

    def walk(e: SpatialExpr) -> float:
        got = memo.get(id(e))
        if got is not None:
            return got
        if isinstance(e, Const):
            out = e.value
        elif isinstance(e, Var):
            out = x if e.name == "x" else y
        elif isinstance(e, Add):
            out = sum(walk(c) for c in e.children)
        elif isinstance(e, Mul):
            out = 1.0
            for c in e.children:
                out *= walk(c)
        elif isinstance(e, Pow):
            out = _pow_value(walk(e.base), e.exponent)
        elif isinstance(e, Func):
            out = _FUNC_EVAL[e.kind](walk(e.arg))
        else:  # pragma: no cover
            raise DomainError(f"cannot evaluate {e!r}")
        memo[id(e)] = out
        return out

    return walk(expr)


_PANEL = len(FINGERPRINT_POINTS)
_PANEL_X: Fingerprint = tuple(p[0] for p in FINGERPRINT_POINTS)
_PANEL_Y: Fingerprint = tuple(p[1] for p in FINGERPRINT_POINTS)


def fingerprint(expr: SpatialExpr) -> Fingerprint:
    """Evaluations on the fixed sample panel, in panel order."""
    fp = expr.__dict__.get("_fp")
    if fp is not None:
        return fp
    if isinstance(expr, Const):
        fp = (expr.value,) * _PANEL
    elif isinstance(expr, Var):
        fp = _PANEL_X if expr.name == "x" else _PANEL_Y
    elif isinstance(expr, Add):
        cols = [fingerprint(c) for c in expr.children]
        fp = tuple(sum(col[i] for col in cols) for i in range(_PANEL))
    elif isinstance(expr, Mul):
        acc = [1.0] * _PANEL
        for c in expr.children:
            col = fingerprint(c)
            acc = [a * b for a, b in zip(acc, col)]
        fp = tuple(acc)
    elif isinstance(expr, Pow):
        fp = tuple(_pow_value(v, expr.exponent) for v in fingerprint(expr.base))
    elif isinstance(expr, Func):
        f = _FUNC_EVAL[expr.kind]
        fp = tuple(f(v) for v in fingerprint(expr.arg))
    else:  # pragma: no cover
        raise DomainError(f"cannot fingerprint {expr!r}")
    object.__setattr__(expr, "_fp", fp)
    return fp


def fp_norm(fp: Fingerprint) -> float:
    return max(abs(v) for v in fp)


def is_numerically_equal(a: SpatialExpr, b: SpatialExpr) -> bool:
    """Fingerprint agreement within REL_TOL (ABS_TOL near zero)."""
    fa, fb = fingerprint(a), fingerprint(b)
    return all(
        abs(va - vb) <= max(ABS_TOL, REL_TOL * max(abs(va), abs(vb)))
        for va, vb in zip(fa, fb)
    )


def proportional_ratio(fa: Fingerprint, fb: Fingerprint) -> float | None:
    """Ratio r with fa ~= r * fb, or None if the panels are not parallel."""
    denom = sum(v * v for v in fb)
    if denom == 0.0:
        return None
    ratio = sum(va * vb for va, vb in zip(fa, fb)) / denom
    scale = max(fp_norm(fa), abs(ratio) * fp_norm(fb))
    tol = max(ABS_TOL, REL_TOL * scale)
    if all(abs(va - ratio * vb) <= tol for va, vb in zip(fa, fb)):
        return ratio
    return None


def size(expr: SpatialExpr) -> int:
    """Node count along every path, used to pick compact representatives."""
    s = expr.__dict__.get("_size")
    if s is None:
        if isinstance(expr, (Add, Mul)):
            s = 1 + sum(size(c) for c in expr.children)
        elif isinstance(expr, Pow):
            s = 1 + size(expr.base)
        elif isinstance(expr, Func):
            s = 1 + size(expr.arg)
        else:
            s = 1
        object.__setattr__(expr, "_size", s)
    return s


def variables(expr: SpatialExpr) -> set[str]:
    """Names of the variables that actually occur in the tree."""
    vs = expr.__dict__.get("_vars")
    if vs is None:
        if isinstance(expr, Var):
            vs = frozenset((expr.name,))
        elif isinstance(expr, (Add, Mul)):
            vs = frozenset().union(*(variables(c) for c in expr.children))
        elif isinstance(expr, Pow):
            vs = frozenset(variables(expr.base))
        elif isinstance(expr, Func):
            vs = frozenset(variables(expr.arg))
        else:
            vs = frozenset()
        object.__setattr__(expr, "_vars", vs)
    return set(vs)


# Expansion gives up (and keeps the original tree) past this many monomials.
EXPAND_CAP = 20000

# Relative threshold below which an expanded monomial is cancellation dust.
EXPAND_DROP_TOL = 1e-13


class _ExpandOverflow(Exception):
    pass


# A monomial signature: atoms with their exact exponents, sorted by the
# atom's prefix form so equal products always share one signature.
_MonoSig = tuple  # tuple[tuple[SpatialExpr, Fraction], ...]


def _sig_of(atom: SpatialExpr, exponent: Fraction = Fraction(1)) -> _MonoSig:
    return ((atom, exponent),)


def _sig_mul(sa: _MonoSig, sb: _MonoSig) -> _MonoSig:
    exps: dict[SpatialExpr, Fraction] = {}
    for atom, e in sa + sb:
        exps[atom] = exps.get(atom, Fraction(0)) + e
    items = [(a, e) for a, e in exps.items() if e != 0]
    items.sort(key=lambda it: to_prefix(it[0]))
    return tuple(items)


def _sig_pow(sig: _MonoSig, exponent: Fraction) -> _MonoSig:
    return tuple((a, e * exponent) for a, e in sig)


def _acc(table: dict, peaks: dict, sig: _MonoSig, coef: float) -> None:
    table[sig] = table.get(sig, 0.0) + coef
    mag = abs(coef)
    if mag > peaks.get(sig, 0.0):
        peaks[sig] = mag


def _expand(expr: SpatialExpr) -> tuple[dict, dict]:
    """Monomial table of the tree: {signature: coefficient}.

    The second dict holds the largest |addend| seen per signature, so
    callers can tell a genuinely small coefficient from cancellation
    residue. Peaks are tracked where sums happen; cancellation buried
    inside a factor of a product is not propagated outward.
    """
    if isinstance(expr, Const):
        return {(): expr.value}, {(): abs(expr.value)}
    if isinstance(expr, Var):
        return {_sig_of(expr): 1.0}, {_sig_of(expr): 1.0}
    if isinstance(expr, Add):
        table: dict = {}
        peaks: dict = {}
        for child in expr.children:
            ct, _ = _expand(child)
            for sig, coef in ct.items():
                _acc(table, peaks, sig, coef)
        return table, peaks
    if isinstance(expr, Mul):
        table = {(): 1.0}
        peaks = {(): 1.0}
        for child in expr.children:
            ct, _ = _expand(child)
            nt: dict = {}
            np_: dict = {}
            for sa, ca in table.items():
                for sb, cb in ct.items():
                    _acc(nt, np_, _sig_mul(sa, sb), ca * cb)
                    if len(nt) > EXPAND_CAP:
                        raise _ExpandOverflow
            table, peaks = nt, np_
        return table, peaks
    if isinstance(expr, Pow):
        bt, _ = _expand(expr.base)
        if len(bt) == 1:
            ((sig, coef),) = bt.items()
            try:
                out = _pow_value(coef, expr.exponent)
            except (DomainError, SingularityError):
                pass
            else:
                osig = _sig_pow(sig, expr.exponent)
                return {osig: out}, {osig: abs(out)}
        e = expr.exponent
        if e.denominator == 1 and 1 < e <= 64:
            table = {(): 1.0}
            peaks = {(): 1.0}
            for _ in range(int(e)):
                nt, np_ = {}, {}
                for sa, ca in table.items():
                    for sb, cb in bt.items():
                        _acc(nt, np_, _sig_mul(sa, sb), ca * cb)
                        if len(nt) > EXPAND_CAP:
                            raise _ExpandOverflow
                table, peaks = nt, np_
            return table, peaks
        return {_sig_of(expr): 1.0}, {_sig_of(expr): 1.0}
    if isinstance(expr, Func):
        if expr.kind == "recip":
            at, _ = _expand(expr.arg)
            if len(at) == 1:
                ((sig, coef),) = at.items()
                try:
                    out = _pow_value(coef, Fraction(-1))
                except (DomainError, SingularityError):
                    pass
                else:
                    osig = _sig_pow(sig, Fraction(-1))
                    return {osig: out}, {osig: abs(out)}
        return {_sig_of(expr): 1.0}, {_sig_of(expr): 1.0}
    raise DomainError(f"cannot expand {expr!r}")  # pragma: no cover


def normalize(expr: SpatialExpr) -> SpatialExpr:
    """Canonical monomial-sum form: sum of coefficient * product of atoms.

    Atoms are variables, the hyperbolic functions and powers whose base
    stays opaque. Equal-signature monomials merge exactly and cancelled
    ones drop, so repeated differentiation of normalized trees grows
    with the number of distinct monomials instead of with tree paths.
    Trees whose expansion would exceed EXPAND_CAP monomials are
    returned unchanged. Value-preserving up to float reassociation
    (and up to removable singularities like x * 1/x at x = 0).
    """
    norm = expr.__dict__.get("_norm")
    if norm is not None:
        return norm
    try:
        table, peaks = _expand(expr)
    except _ExpandOverflow:
        norm = expr
    else:
        monos = [
            (sig, coef)
            for sig, coef in table.items()
            if abs(coef) > EXPAND_DROP_TOL * peaks.get(sig, 0.0)
        ]
        monos.sort(key=lambda it: tuple((to_prefix(a), e) for a, e in it[0]))
        norm = add(*(mul(const(c), *(pow_(a, e) for a, e in sig)) for sig, c in monos))
    object.__setattr__(expr, "_norm", norm)
    object.__setattr__(norm, "_norm", norm)
    return norm


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@lru_cache(maxsize=None)
def to_prefix(expr: SpatialExpr) -> str:
    """Serialize to prefix notation, e.g. ``(mul (sinh x) (pow x 2))``."""
    if isinstance(expr, Const):
        return _format_number(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Add):
        return "(add " + " ".join(to_prefix(c) for c in expr.children) + ")"
    if isinstance(expr, Mul):
        return "(mul " + " ".join(to_prefix(c) for c in expr.children) + ")"
    if isinstance(expr, Pow):
        return f"(pow {to_prefix(expr.base)} {_format_fraction(expr.exponent)})"
    if isinstance(expr, Func):
        return f"({expr.kind} {to_prefix(expr.arg)})"
    raise DomainError(f"cannot serialize {expr!r}")  # pragma: no cover


_FUNC_NAMES = ("sinh", "cosh", "tanh", "coth", "csch", "recip")


def _tokenize(text: str) -> Iterator[str]:
    for token in text.replace("(", " ( ").replace(")", " ) ").split():
        yield token


def _parse_number(token: str) -> Fraction:
    try:
        return Fraction(token)
    except ValueError:
        raise DomainError(f"bad numeric token {token!r}") from None


def parse_prefix(text: str) -> SpatialExpr:
    """Parse the prefix notation produced by ``to_prefix``."""
    tokens = list(_tokenize(text))
    pos = 0

    def parse() -> SpatialExpr:
        nonlocal pos
        if pos >= len(tokens):
            raise DomainError("unexpected end of expression")
        token = tokens[pos]
        pos += 1
        if token == ")":
            raise DomainError("unexpected ')'")
        if token != "(":
            if token in ("x", "y"):
                return var(token)
            return const(float(_parse_number(token)))
        op = tokens[pos]
        pos += 1
        if op == "pow":
            base = parse()
            exponent = _parse_number(tokens[pos])
            pos += 1
            expect_close()
            return pow_(base, exponent)
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            args.append(parse())
        expect_close()
        if op == "add":
            return add(*args)
        if op == "mul":
            return mul(*args)
        if op in _FUNC_NAMES:
            if len(args) != 1:
                raise DomainError(f"{op} takes one argument")
            return _func(op, args[0])
        raise DomainError(f"unknown operator {op!r}")

    def expect_close() -> None:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != ")":
            raise DomainError("missing ')'")
        pos += 1

    result = parse()
    if pos != len(tokens):
        raise DomainError(f"trailing tokens in {text!r}")
    return result
