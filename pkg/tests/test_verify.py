import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtnlab.boundary import DecayFamily, TraceSeries
from dtnlab.diagnostics import NormSeries
from dtnlab.verify import (HypothesisWarning, TheoremVerdict, build_report,
                           check_appendix, check_F_bounded, check_T21, check_T32, check_T36,
                           check_T38, check_T39, fit_decay, predicted_delta, estimate_monitors)


def _trace(t, P, Q=None):
    Q = np.zeros_like(t, dtype=complex) if Q is None else Q
    tr = TraceSeries(t, Q + 0j, np.gradient(Q + 0j, t), np.zeros_like(t, complex),
                     P + 0j, np.zeros_like(t, complex))
    return tr.with_P(P)


def _norms(t, l4):
    z = np.ones_like(t)
    return NormSeries(t, z, z, l4, z + l4, z, z * 0, z)


def test_fit_exact_power():
    t = np.linspace(1, 100, 500)
    fit = fit_decay(t, 5 / t, (10, 100))
    assert fit.slope == pytest.approx(-1, abs=1e-12)
    assert fit.rms_residual < 1e-12


def test_fit_perturbed_power():
    t = np.linspace(1, 200, 2000)
    v = 3 * t**-2.5 * (1 + 0.01 * np.sin(t))
    assert fit_decay(t, v, (20, 200)).slope == pytest.approx(-2.5, abs=0.02)


def test_fit_constant():
    t = np.linspace(1, 100, 200)
    assert fit_decay(t, np.full_like(t, 4.0), (10, 100)).slope == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("window, msg", [((0.5, 100), "degenerate"), ((10, 15), "degenerate")])
def test_fit_degenerate_window(window, msg):
    t = np.linspace(1, 100, 200)
    with pytest.raises(ValueError, match=msg):
        fit_decay(t, 1 / t, window)


def test_fit_insufficient_points():
    t = np.array([1.0, 10, 50, 100])
    with pytest.raises(ValueError, match="insufficient"):
        fit_decay(t, 1 / t, (10, 100))


def test_fit_floors_zeros_with_warning():
    t = np.linspace(1, 100, 200)
    v = 1 / t
    v[50] = 0
    with pytest.warns(RuntimeWarning, match="floored"):
        fit_decay(t, v, (10, 100))


@pytest.mark.parametrize("alpha, beta, case, expected", [
    (3, 3, "defocusing", 2.5),
    (2.6, 2.6, "defocusing", 2.1),
    (3, 3, "focusing", 2.5),
])
def test_predicted_delta_examples(alpha, beta, case, expected):
    assert predicted_delta(alpha, beta, case) == pytest.approx(expected)


def test_predicted_delta_warns_outside_hypotheses():
    with pytest.warns(HypothesisWarning):
        predicted_delta(2.0, 2.0)


@settings(max_examples=50)
@given(a=st.floats(2.6, 10), b=st.floats(2.6, 10), da=st.floats(0, 2), db=st.floats(0, 2))
def test_predicted_delta_monotone(a, b, da, db):
    for case in ("defocusing", "focusing"):
        assert predicted_delta(a + da, b + db, case) >= predicted_delta(a, b, case) - 1e-12


@settings(max_examples=50)
@given(a=st.floats(2.6, 10))
def test_oscillating_family_uses_first_branch(a):
    # beta = alpha when omega != 0, and (2 alpha - 1)/2 <= (4 alpha - 1)/4
    fam = DecayFamily(alpha=a, omega=1.0)
    assert predicted_delta(fam.alpha, fam.beta) == pytest.approx(a - 0.5)


def test_unknown_theorem_id():
    with pytest.raises(ValueError, match="unknown theorem"):
        TheoremVerdict("T9.9", {}, {}, True)


# --- negative controls: synthetic data that must fail -----------------------

T = np.linspace(0, 200, 20001)


def test_T36_fails_for_slow_mixed_derivative():
    tr = _trace(T, np.zeros_like(T))
    tr.Pt = (1 + T) ** -0.4 + 0j
    v = check_T36(tr)
    assert not v.passed and v.measured["dyadic_increment"] > 0.05


def test_T36_passes_for_integrable_mixed_derivative():
    tr = _trace(T, np.zeros_like(T))
    tr.Pt = (1 + T) ** -2.0 + 0j
    assert check_T36(tr).passed


def test_F_bounded_fails_for_slow_traces():
    s = (1 + T) ** -0.4
    tr = _trace(T, s, s)
    assert not check_F_bounded(estimate_monitors(tr)).passed


def test_F_bounded_passes_for_fast_traces():
    s = (1 + T) ** -3.0
    tr = _trace(T, s, s)
    assert check_F_bounded(estimate_monitors(tr)).passed


def test_appendix_fails_for_inverse_t():
    v = check_appendix(_trace(T, (1 + T) ** -1.0), p=1.1)
    assert not v.passed
    assert v.measured["l1_dyadic_increment"] > 0.05


def test_appendix_passes_for_fast_decay():
    assert check_appendix(_trace(T, (1 + T) ** -2.5), p=1.1).passed


def test_T32_fails_without_decay():
    v = check_T32(_norms(T, np.ones_like(T)))
    assert not v.passed


def test_T32_passes_for_inverse_t():
    t = T[T >= 1]
    assert check_T32(_norms(t, 1 / t)).passed


def test_T38_T39_on_synthetic_power():
    t = T[T >= 0.5]
    tr = _trace(t, t**-2.5)
    fam = DecayFamily(alpha=3, omega=1.0)
    assert check_T38(tr, fam).passed
    assert check_T39(tr, fam).passed
    slow = _trace(t, t**-1.5)
    assert not check_T38(slow, fam).passed
    assert not check_T39(slow, fam).passed


def test_T21_growing_ratio_fails():
    t = T[T >= 1]
    Q = (1 + t) ** -3.0
    tr = _trace(t, np.sqrt(t) * 0.01, Q)
    assert not check_T21(tr, 1).passed


def test_T21_smallness_flag():
    fam = DecayFamily(A=0.5)
    t = T[T >= 0.01]
    tr = _trace(t, fam.Q(t), fam.Q(t))
    v = check_T21(tr, -1, family=fam)
    assert "smallness assumed" in v.notes


def test_build_report_orders_and_counts():
    vs = [TheoremVerdict(tid, {"x": 1.0}, {}, True) for tid in
          ("AppA", "T3.9", "T3.8", "T3.6", "P3.5", "T3.4", "T3.2", "T2.1")]
    rep = build_report(vs, {"lambda": 1})
    assert [v.theorem_id for v in rep.verdicts][:2] == ["T2.1", "T3.2"]
    assert len(rep.verdicts) == 8 and rep.all_passed
    assert "[T3.9]" in rep.to_text()
    assert rep.to_csv().splitlines()[0] == "theorem_id,quantity,value,status"
    with pytest.raises(ValueError):
        build_report([], {})


def test_inconclusive_does_not_fail_report():
    vs = [TheoremVerdict("T2.1", {}, {}, False, [], "inconclusive")]
    assert build_report(vs, {}).all_passed
