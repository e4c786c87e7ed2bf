import numpy as np
import pytest

from dnpsteady import (allee_source, check_hypotheses, decay_source,
                       eval_extended, logistic_source, make_source,
                       signomial_source, symmetric_sine_source,
                       truncate_source)
from dnpsteady.quadrature import adaptive_simpson
from dnpsteady.sources import (SourceConstructionError, in_admissible_band,
                               membership_bounds)

PTS = np.zeros((1, 1))


def test_logistic_lambda0_estimate():
    # slope ratio -df/db peaks at 2s-1 -> 1, plus the 5% head room
    src = logistic_source()
    assert 1.0 <= src.lambda0 <= 1.051
    assert src.lambda0_tilde == pytest.approx(src.lambda0 / 2.0)


def test_zero_reaction_gets_positive_lambda0():
    src = make_source(0.0, lambda pts, s: s, 1.0)
    assert src.lambda0 > 0.0


def test_right_side_membership_on_grid():
    # f + lam*b stays between lam*b(0) and lam*b(delta0) for states in the box
    src = logistic_source()
    lam = 2.0
    grid = np.linspace(0.0, 1.0, 101)
    lo, hi = membership_bounds(src, PTS, lam)
    for s in grid:
        g = src.g_lam(PTS, np.array([s]), lam)
        assert lo[0] - 1e-12 <= g[0] <= hi[0] + 1e-12
    assert in_admissible_band(src, PTS, np.array([lam * 0.3]), lam)
    assert not in_admissible_band(src, PTS, np.array([lam + 1.0]), lam)


def test_confinement_sign_rejections():
    with pytest.raises(SourceConstructionError, match="f\\(x, 0\\)"):
        make_source(lambda pts, s: s - 2.0, lambda pts, s: s, 1.0)
    with pytest.raises(SourceConstructionError, match="delta0"):
        make_source(1.0, lambda pts, s: s, 1.0)


def test_nonincreasing_capacity_rejected():
    with pytest.raises(SourceConstructionError, match="strictly increasing"):
        make_source(0.0, lambda pts, s: -s, 1.0)
    with pytest.raises(SourceConstructionError, match="strictly increasing"):
        make_source(0.0, 1.0, 1.0)


def test_provided_lambda0_is_validated():
    with pytest.raises(SourceConstructionError, match="not increasing"):
        make_source(lambda pts, s: s * (1.0 - s), lambda pts, s: s, 1.0,
                    lambda0=0.1)
    src = make_source(lambda pts, s: s * (1.0 - s), lambda pts, s: s, 1.0,
                      lambda0=2.0)
    assert src.lambda0 == 2.0


def test_extension_branch_values():
    src = logistic_source()
    lam0 = src.lambda0
    # below zero the reaction is continued with slope -lam0/2
    assert eval_extended(src, "f_bar", PTS, np.array([-1.0]))[0] == \
        pytest.approx(0.0 + lam0 / 2.0)
    # above delta0 the capacity is continued with unit slope
    assert eval_extended(src, "b_bar", PTS, np.array([2.0]))[0] == \
        pytest.approx(1.0 + 1.0)
    assert eval_extended(src, "b_bar", PTS, np.array([-0.5]))[0] == \
        pytest.approx(0.0 - 0.5)


def test_capacity_primitive_lower_bound():
    rng = np.random.default_rng(0)
    src = logistic_source()
    s = rng.uniform(-10.0, 10.0, size=200)
    vals = eval_extended(src, "B_bar", np.zeros((200, 1)), s)
    assert np.all(vals >= -0.5 * 1.0 ** 2 - 1e-12)


def test_extended_primitives_are_antiderivatives():
    rng = np.random.default_rng(1)
    src = logistic_source()
    h = 1e-6
    for _ in range(100):
        s = rng.uniform(-2.0, 3.0)
        if min(abs(s), abs(s - 1.0)) < 1e-3:
            continue
        dF = (eval_extended(src, "F_bar", PTS, np.array([s + h]))[0]
              - eval_extended(src, "F_bar", PTS, np.array([s - h]))[0]) / (2 * h)
        fb = eval_extended(src, "f_bar", PTS, np.array([s]))[0]
        assert dF == pytest.approx(fb, rel=1e-5, abs=1e-8)
        dB = (eval_extended(src, "B_bar", PTS, np.array([s + h]))[0]
              - eval_extended(src, "B_bar", PTS, np.array([s - h]))[0]) / (2 * h)
        bb = eval_extended(src, "b_bar", PTS, np.array([s]))[0]
        assert dB == pytest.approx(bb, rel=1e-5, abs=1e-8)


def test_extended_capacity_increasing_across_joints():
    src = logistic_source()
    s = np.array([-0.1, -1e-9, 0.0, 1e-9, 0.5, 1.0 - 1e-9, 1.0, 1.0 + 1e-9,
                  1.5])
    vals = eval_extended(src, "b_bar", np.zeros((s.size, 1)), s)
    assert np.all(np.diff(vals) > 0.0)


def test_eval_extended_guards():
    src = logistic_source()
    with pytest.raises(ValueError, match="unknown evaluator"):
        eval_extended(src, "nope", PTS, np.array([0.5]))
    with pytest.raises(ValueError, match="lam"):
        eval_extended(src, "g_lambda", PTS, np.array([0.5]))
    with pytest.raises(ValueError, match="below the monotonicity"):
        eval_extended(src, "g_lambda", PTS, np.array([0.5]),
                      lam=src.lambda0 / 2.0)


def test_numeric_primitive_matches_quadrature():
    # custom source without closed forms falls back to quadrature
    src = make_source(lambda pts, s: np.cos(s) * (1.0 - s),
                      lambda pts, s: s + 0.2 * s ** 2, 1.0)
    for s in (0.2, 0.7, 1.0):
        got = float(src.prim_F(PTS, np.array([s]))[0])
        ref = adaptive_simpson(lambda t: np.cos(t) * (1.0 - t), 0.0, s,
                               tol=1e-12)
        assert got == pytest.approx(ref, abs=1e-9)
        gotB = float(src.prim_B(PTS, np.array([s]))[0])
        refB = s ** 2 / 2.0 + 0.2 * s ** 3 / 3.0
        assert gotB == pytest.approx(refB, abs=1e-9)


def test_hypothesis_checks_pass_for_stock_sources():
    for src in (logistic_source(), allee_source(), decay_source(),
                symmetric_sine_source()):
        report = check_hypotheses(src, trials=100, seed=0)
        assert report.ok, report.violations[:3]


def test_hypothesis_checks_zero_reaction():
    src = make_source(0.0, lambda pts, s: s, 1.0)
    report = check_hypotheses(src, trials=50, seed=0)
    assert report.ok


def test_truncate_identity_band():
    src = logistic_source()
    assert truncate_source(src, 0.0, 1.0) is src


def test_truncate_allee_band():
    src = allee_source()
    band = truncate_source(src, 0.3, 1.0)
    assert band.band == (0.3, 1.0)
    # reaction frozen below the band
    got = band.f(PTS, np.array([0.1]))[0]
    assert got == pytest.approx(src.f(PTS, np.array([0.3]))[0])
    # unchanged inside
    assert band.f(PTS, np.array([0.5]))[0] == \
        pytest.approx(src.f(PTS, np.array([0.5]))[0])


def test_truncate_rejects_negative_lower_endpoint():
    src = allee_source()
    with pytest.raises(ValueError, match="lower endpoint"):
        truncate_source(src, 0.1, 1.0)


def test_truncate_rejects_bad_interval():
    src = logistic_source()
    with pytest.raises(ValueError):
        truncate_source(src, 0.5, 0.2)
    with pytest.raises(ValueError):
        truncate_source(src, 0.0, 2.0)


def test_truncated_closed_primitive_consistent():
    src = allee_source()
    band = truncate_source(src, 0.3, 1.0)
    h = 1e-6
    for s in (0.1, 0.45, 0.9):
        dF = (band.prim_F(PTS, np.array([s + h]))[0]
              - band.prim_F(PTS, np.array([s - h]))[0]) / (2 * h)
        assert dF == pytest.approx(band.f(PTS, np.array([s]))[0], rel=1e-5)


def test_signomial_example():
    # f(s) = sqrt(s) - s^1.5
    src, delta0, eps0 = signomial_source(
        [1.0], [1.0], 0.0, [0.5], [1.5], 1.6, lambda pts, s: s)
    assert src.f(PTS, np.array([4.0]))[0] == pytest.approx(-6.0)
    assert delta0 >= 1.0
    assert 0.0 < eps0 < 1.0
    for e in np.linspace(1e-4, min(eps0, 0.999), 25):
        assert src.f(PTS, np.array([e]))[0] > 0.0
    assert src.alpha == pytest.approx(1.6)


def test_signomial_ratio_strictly_decreasing():
    src, delta0, _ = signomial_source(
        [1.0], [1.0], 0.0, [0.5], [1.5], 1.6, lambda pts, s: s)
    tau = np.linspace(1e-4, delta0, 200)
    ratio = src.f(PTS, tau[:, None]).ravel() / tau ** 0.6
    assert np.all(np.diff(ratio) < 0.0)


def test_signomial_condition_rejections():
    b = lambda pts, s: s
    with pytest.raises(SourceConstructionError, match="alpha"):
        signomial_source([1.0], [1.0], 0.0, [0.5], [1.5], 2.5, b)
    with pytest.raises(SourceConstructionError, match="q_1"):
        signomial_source([1.0], [1.0], 0.0, [0.7], [1.5], 1.6, b)
    with pytest.raises(SourceConstructionError, match="r_1"):
        signomial_source([1.0], [1.0], 0.0, [0.5], [0.55], 1.6, b)
    with pytest.raises(SourceConstructionError, match="negative"):
        signomial_source([1.0], [1.0], -1.0, [0.5], [1.5], 1.6, b)
    with pytest.raises(SourceConstructionError, match="pair up"):
        signomial_source([1.0, 1.0], [1.0], 0.0, [0.5], [1.5], 1.6, b)


def test_signomial_primitive_closed_form():
    src, _, _ = signomial_source([1.0], [1.0], 0.5, [0.5], [1.5], 1.6,
                                 lambda pts, s: s)
    s = 0.8
    exact = s ** 1.5 / 1.5 - s ** 2.5 / 2.5 + 0.5 * s
    assert src.prim_F(PTS, np.array([s]))[0] == pytest.approx(exact)


def test_source_ratio_check_in_hypothesis_report():
    src, _, _ = signomial_source([1.0], [1.0], 0.0, [0.5], [1.5], 1.6,
                                 lambda pts, s: s)
    report = check_hypotheses(src, trials=20, seed=0)
    assert report.checks["source_ratio_decreasing"] == 1
    assert report.ok


def test_upper_extension_slope_respects_alpha_requirement():
    # a strongly negative f(delta0) pushes the required slope above the
    # lambda0/2 default when alpha is declared
    alpha = 1.9
    src = make_source(lambda pts, s: 0.25 - s, lambda pts, s: s, 1.0,
                      alpha=alpha)
    required = (alpha - 1.0) * 0.75
    assert src.lambda0_tilde >= min(required, 0.99 * src.lambda0) - 1e-12
    assert src.lambda0_tilde < src.lambda0
