import math

import pytest

from helpers import (
    assert_q_map_close,
    constant_image_coeffs,
    identity_coeffs,
    q_coefficient_map,
)
from hatmfp.errors import ConfigError, DegreeError, ExponentError
from hatmfp.engine import (
    HatmConfig,
    LinearMonomial,
    ProblemSpec,
    QuadraticMonomial,
    apply_operator,
    apply_operator_full,
    build_rm,
    chi,
    deformation_step,
    h_curve,
    partial_sum,
    residual,
    run,
    run_report,
)
from hatmfp.expr import ONE, X, Y, add, const, evaluate, mul, pow_, sinh
from hatmfp.fokker_planck import preset
from hatmfp.series import FracSeries


def cfg(alpha=0.75, hbar=-1.0, order=3, **kw):
    return HatmConfig(alpha=alpha, hbar=hbar, order=order, **kw)


# --------------------------------------------------------------- config guards


def test_chi_step_indicator():
    assert chi(1) == 0
    assert chi(2) == 1
    assert chi(100) == 1
    with pytest.raises(ConfigError):
        chi(0)


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(hbar=0.0)
    with pytest.raises(ConfigError):
        cfg(order=-1)
    with pytest.raises(ConfigError):
        cfg(alpha=0.0)
    with pytest.raises(ConfigError):
        cfg(alpha=1.0001)
    with pytest.raises(ConfigError):
        cfg(taylor_terms=0)


def test_only_constant_auxiliary_function():
    with pytest.raises(ConfigError, match="auxiliary"):
        cfg(aux_function=2.0)
    assert cfg(aux_function=1.0).aux_function == 1.0


def test_problem_spec_guards():
    with pytest.raises(ConfigError):
        ProblemSpec(dim=3, linear=(), quadratic=(), initial=X)
    with pytest.raises(ConfigError):
        # y appears in a one-dimensional problem
        ProblemSpec(dim=1, linear=(LinearMonomial(Y, (1, 0)),), quadratic=(), initial=X)
    with pytest.raises(DegreeError):
        LinearMonomial(ONE, (3, 0))
    with pytest.raises(DegreeError):
        QuadraticMonomial(ONE, (1, 0), (0, 3))


# ------------------------------------------------------------- operator action


def test_apply_operator_identity_preset():
    # the hyperbolic drift/diffusion pair acts as the identity on
    # multiples of sinh(x) (their e^t parts cancel)
    prob = preset("4.2")
    u0 = FracSeries.from_spatial(prob.initial)
    out = apply_operator(prob, u0, [u0], 1)
    assert out.evaluate(1.0, 0.4, 0.75) == pytest.approx(math.sinh(1.0), rel=1e-10)
    assert out.evaluate(1.7, 0.0, 0.5) == pytest.approx(math.sinh(1.7), rel=1e-10)


def test_apply_operator_quadratic_identity():
    prob = preset("4.5")
    u0 = FracSeries.from_spatial(prob.initial)
    out = apply_operator(prob, u0, [u0], 1)
    assert out.evaluate(1.3, 0.2, 1.0) == pytest.approx(1.3**2, rel=1e-10)


def test_apply_operator_drift_only():
    # hand problem: N[u] = x * du/dx on u = x^2 t^alpha
    prob = ProblemSpec(dim=1, linear=(LinearMonomial(X, (1, 0)),), quadratic=(), initial=X)
    u = FracSeries.from_spatial(pow_(X, 2), q=1)
    out = apply_operator(prob, u, [u], 1)
    alpha, x, t = 0.5, 1.4, 0.3
    assert out.evaluate(x, t, alpha) == pytest.approx(2 * x**2 * t**alpha, rel=1e-12)


def test_apply_operator_quadratic_convolution():
    # N[u] = u * du/dx; with history (u0, u1) the homotopy convolution at
    # m=2 is u1*u0' + u0*u1'
    prob = ProblemSpec(
        dim=1,
        linear=(),
        quadratic=(QuadraticMonomial(ONE, (0, 0), (1, 0)),),
        initial=X,
    )
    u0 = FracSeries.from_spatial(X)
    u1 = FracSeries.from_spatial(pow_(X, 2), q=1)
    out = apply_operator(prob, u1, [u0, u1], 2)
    alpha, x, t = 0.75, 1.2, 0.5
    want = x**2 * t**alpha + x * 2 * x * t**alpha
    assert out.evaluate(x, t, alpha) == pytest.approx(want, rel=1e-12)


def test_apply_operator_full_uses_square():
    prob = ProblemSpec(
        dim=1,
        linear=(),
        quadratic=(QuadraticMonomial(ONE, (0, 0), (0, 0)),),
        initial=X,
    )
    s = FracSeries.from_spatial(X, q=1)
    out = apply_operator_full(prob, s)
    alpha, x, t = 0.5, 1.5, 0.64
    assert out.evaluate(x, t, alpha) == pytest.approx((x * t**alpha) ** 2, rel=1e-12)


# ----------------------------------------------------------- deformation steps


def test_first_iterate_of_drift_diffusion_problem():
    # R_1 = D^alpha u0 - N[u0]; for the unit-drift problem N[x] = 1, so
    # u_1 = -hbar * t^alpha / gamma(1+alpha)
    prob = preset("4.1")
    for h in (-1.0, -0.7):
        for alpha in (0.5, 1.0):
            u1 = deformation_step(prob, cfg(alpha=alpha, hbar=h), [FracSeries.from_spatial(X)], 1)
            want = -h * 0.3**alpha / math.gamma(1 + alpha)
            assert u1.evaluate(2.0, 0.3, alpha) == pytest.approx(want, rel=1e-12)


def test_iterates_match_hand_recursion():
    for pid, f in (("4.3", add(X, 1)), ("4.4", X), ("4.5", pow_(X, 2))):
        for h in (-1.0, -0.6):
            alpha = 0.75
            us = run(preset(pid), cfg(alpha=alpha, hbar=h, order=3))
            x, y = 1.25, 0.8
            fval = evaluate(f, x, y)
            for m in (1, 2, 3):
                got = q_coefficient_map(us[m], alpha, x, y)
                want = {q: c * fval for q, c in identity_coeffs(m, h, alpha).items()}
                assert_q_map_close(got, want, rel=1e-10)


def test_iterates_constant_image_problem():
    alpha, h = 0.5, -0.8
    us = run(preset("4.1"), cfg(alpha=alpha, hbar=h, order=3))
    for m in (1, 2, 3):
        got = q_coefficient_map(us[m], alpha, 1.7)  # spatial part is the constant 1
        assert_q_map_close(got, constant_image_coeffs(m, h, alpha), rel=1e-10)


def test_build_rm_source_enters_once():
    # pure-source problem (no operator): D^alpha u = t^alpha, u(x,0) = x,
    # whose solution is x + J^alpha[t^alpha]; the source must enter the
    # recursion once (with the 1 - chi_m switch), else iterates never stop
    source = FracSeries.from_spatial(ONE, q=1)
    prob = ProblemSpec(dim=1, linear=(), quadratic=(), initial=X, source=source)
    c = cfg(alpha=0.5, hbar=-1.0, order=2)
    u0 = FracSeries.from_spatial(X)
    r1 = build_rm(prob, c, [u0], 1)
    x, t, alpha = 1.0, 0.5, 0.5
    jg = math.gamma(1 + alpha) / math.gamma(1 + 2 * alpha) * t ** (2 * alpha)
    assert r1.evaluate(x, t, alpha) == pytest.approx(-jg, rel=1e-12)
    u1 = deformation_step(prob, c, [u0], 1)
    assert u1.evaluate(x, t, alpha) == pytest.approx(jg, rel=1e-12)
    # m = 2: u_1 - J^alpha[operator] with no second copy of the source,
    # so the hbar = -1 step terminates the series
    r2 = build_rm(prob, c, [u0, u1], 2)
    assert r2.evaluate(x, t, alpha) == pytest.approx(u1.evaluate(x, t, alpha), rel=1e-12)
    u2 = deformation_step(prob, c, [u0, u1], 2)
    assert abs(u2.evaluate(x, t, alpha)) < 1e-14
    total = partial_sum([u0, u1, u2], 2)
    assert total.evaluate(x, t, alpha) == pytest.approx(x + jg, rel=1e-12)


def test_run_length_and_zeroth_iterate():
    prob = preset("4.3")
    us = run(prob, cfg(order=4))
    assert len(us) == 5
    assert us[0].evaluate(1.2, 0.9, 0.75) == pytest.approx(2.2, rel=1e-15)


def test_run_order_zero():
    us = run(preset("4.1"), cfg(order=0))
    assert len(us) == 1


# ----------------------------------------------------------------- partial sums


def test_partial_sum_truncations():
    prob = preset("4.2")
    us = run(prob, cfg(alpha=1.0, hbar=-1.0, order=4))
    x, t = 1.0, 0.3
    want = math.sinh(x) * sum(t**k / math.factorial(k) for k in range(3))
    assert partial_sum(us, 2).evaluate(x, t, 1.0) == pytest.approx(want, rel=1e-12)
    with pytest.raises(IndexError):
        partial_sum(us, 9)


def test_partial_sum_exponential_truncation():
    # four-term truncation at alpha = 1 of the sinh problem:
    # sinh(1) * (1 + 0.3 + 0.045 + 0.0045)
    us = run(preset("4.2"), cfg(alpha=1.0, hbar=-1.0, order=3))
    got = partial_sum(us, 3).evaluate(1.0, 0.3, 1.0)
    assert got == pytest.approx(math.sinh(1.0) * 1.3495, rel=1e-12)


# -------------------------------------------------------------------- residual


def test_residual_of_initial_guess():
    # truncating at u0 leaves |D^alpha x - N[x]| = |0 - 1| = 1
    prob = preset("4.1")
    s = FracSeries.from_spatial(X)
    vals = residual(prob, s, cfg(alpha=0.5), [(1.0, 0.0, 0.3), (2.0, 0.0, 0.8)])
    assert vals == [pytest.approx(1.0, abs=1e-14), pytest.approx(1.0, abs=1e-14)]


def test_residual_shrinks_with_order():
    prob = preset("4.5")
    prev = None
    for order in (2, 4, 8):
        c = cfg(alpha=1.0, hbar=-1.0, order=order)
        s = partial_sum(run(prob, c), order)
        (r,) = residual(prob, s, c, [(1.0, 0.0, 0.3)])
        assert prev is None or r < prev
        prev = r
    assert prev < 1e-4


def test_residual_rejects_exponentials():
    prob = preset("4.1")
    s = FracSeries.from_spatial(X, c=1)
    with pytest.raises(ExponentError):
        residual(prob, s, cfg(), [(1.0, 0.0, 0.3)])


# --------------------------------------------------------------------- h-curve


def test_h_curve_pairs_and_flat_region():
    prob = preset("4.2")
    c = cfg(alpha=0.75, hbar=-1.0, order=8)
    hs = [-1.05, -1.0, -0.95]
    pairs = h_curve(prob, c, (1.0, 0.0, 0.3), hs)
    assert [h for h, _ in pairs] == hs
    near = [v for _, v in pairs]
    wide = [v for _, v in h_curve(prob, c, (1.0, 0.0, 0.3), [-2.0, -1.0, -0.2])]
    assert max(near) - min(near) < (max(wide) - min(wide)) / 100.0
    # the h = -1 entry is the plain run
    want = partial_sum(run(prob, c), 8).evaluate(1.0, 0.3, 0.75)
    assert pairs[1][1] == pytest.approx(want, rel=1e-14)


def test_h_curve_exact_point():
    # the unit-drift problem sums to x + t at alpha = 1, so the curve
    # value at hbar = -1, probe (1, 1), is exactly 2
    (pair,) = h_curve(preset("4.1"), cfg(alpha=1.0, order=3), (1.0, 0.0, 1.0), [-1.0])
    assert pair[1] == pytest.approx(2.0, rel=1e-14)


def test_h_curve_rejects_zero():
    with pytest.raises(ConfigError):
        h_curve(preset("4.1"), cfg(), (1.0, 0.0, 0.3), [-1.0, 0.0])


# ------------------------------------------------------------------ run report


def test_run_report_shape():
    report = run_report(preset("4.3"), cfg(alpha=0.5, order=3), problem_label="preset:4.3")
    assert report["problem"] == "preset:4.3"
    assert report["config"] == {
        "alpha": 0.5,
        "hbar": -1.0,
        "order": 3,
        "taylor_terms": 12,
        "aux_function": 1.0,
    }
    assert len(report["iterates"]) == 4
    assert isinstance(report["partial_sum"], list)
    assert report["wall_time_s"] >= 0.0
    s = FracSeries.from_obj(report["partial_sum"])
    assert s.evaluate(1.0, 0.4, 0.5) > 0.0


def test_taylor_events_recorded():
    # N[u] = e^t du/dx keeps a genuine exponential coefficient alive,
    # forcing an expansion before every integration step
    prob = ProblemSpec(
        dim=1, linear=(LinearMonomial(ONE, (1, 0), exp_rate=1),), quadratic=(), initial=X
    )
    events = []
    run(prob, cfg(alpha=0.5, order=3, taylor_terms=9), events)
    assert events, "surviving exponential coefficients must force expansions"
    assert all(e.taylor_terms == 9 for e in events)
    assert all(e.terms_expanded > 0 for e in events)
    assert [e.order for e in events] == sorted(e.order for e in events)


def test_hyperbolic_preset_needs_no_expansion():
    # the e^t parts of the sinh problem cancel identically on the iterate
    # family, so nothing survives to be expanded
    events = []
    run(preset("4.2"), cfg(alpha=0.5, order=4), events)
    assert events == []
    events41 = []
    run(preset("4.1"), cfg(order=2), events41)
    assert events41 == []


def test_run_is_deterministic():
    prob = preset("4.4")
    c = cfg(alpha=0.75, hbar=-0.9, order=6)
    a = partial_sum(run(prob, c), 6).to_json()
    b = partial_sum(run(prob, c), 6).to_json()
    assert a == b
