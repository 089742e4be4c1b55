"""Reference solutions for the built-in problems.

Every preset has a closed form at alpha = 1 and a Mittag-Leffler form
for fractional orders: the constant-coefficient problem solves to
f + t^alpha / gamma(alpha + 1), the others to f(x, y) * E_alpha(t^alpha)
because their operators act as the identity on multiples of f.
"""

from __future__ import annotations

from functools import lru_cache

from .errors import OracleError
from .expr import evaluate
from .fokker_planck import PRESET_IDS, preset
from .special import MLParams, gamma, mittag_leffler

CLOSED_FORM_LABELS = {
    "4.1": "x + t^a/G(a+1)",
    "4.2": "sinh(x) E_a(t^a)",
    "4.3": "(x+1) E_a(t^a)",
    "4.4": "x E_a(t^a)",
    "4.5": "x^2 E_a(t^a)",
}


def has_reference(preset_id: str) -> bool:
    return preset_id in PRESET_IDS


@lru_cache(maxsize=None)
def _initial(preset_id: str):
    return preset(preset_id).initial


def reference_solution(
    preset_id: str, x: float, t: float, alpha: float, y: float = 0.0
) -> float:
    """Exact solution value at (x, y, t) for a preset problem."""
    if not has_reference(preset_id):
        raise OracleError(f"no reference solution registered for {preset_id!r}")
    if preset_id == "4.1":
        return x + t**alpha / gamma(alpha + 1.0)
    f = evaluate(_initial(preset_id), x, y)
    return f * mittag_leffler(MLParams(alpha), t**alpha)
