import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from junction_atlas import special as sp
from junction_atlas import stats as js

# frozen output of tests/oracles/gh_reference.py (mpmath, dps=20)
GH_FIXTURE = {
    "A": [12.1, 14.3, 13.8, 12.9, 15.2, 13.4, 12.7, 14.9],
    "B": [16.8, 18.2, 15.9, 17.4, 19.1, 16.3],
    "C": [13.0, 13.9, 12.5, 14.4, 13.3, 12.8, 14.1, 13.6, 12.2, 13.7],
}
GH_REFERENCE = [
    ("A", "B", 5.78919232563339, 10.265110917501, 0.000423539382076996),
    ("A", "C", 0.698256226483281, 11.5914692730808, 0.769153139867958),
    ("B", "C", 7.25827511875817, 7.16689021313781, 0.000381957726609002),
]


# ---------------------------------------------------------------- special

def test_betainc_cross_implementation_agreement():
    grid_a = [0.5, 1.0, 2.5, 7.0, 25.0]
    grid_b = [0.5, 1.5, 4.0, 18.0]
    grid_x = [0.01, 0.1, 0.35, 0.5, 0.73, 0.95, 0.999]
    for a in grid_a:
        for b in grid_b:
            for x in grid_x:
                cf = sp.betainc(a, b, x)
                series = sp.betainc_series(a, b, x)
                assert abs(cf - series) <= 1e-10, (a, b, x)


def test_betainc_endpoints_and_symmetry():
    assert sp.betainc(2.0, 3.0, 0.0) == 0.0
    assert sp.betainc(2.0, 3.0, 1.0) == 1.0
    # I_x(a,b) + I_{1-x}(b,a) = 1
    for (a, b, x) in [(2.0, 5.0, 0.3), (0.7, 0.9, 0.62)]:
        assert sp.betainc(a, b, x) + sp.betainc(b, a, 1 - x) == pytest.approx(1.0, abs=1e-14)


def test_normal_cdf_reference_points():
    assert sp.normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert sp.normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    assert sp.normal_cdf(-8.0) == pytest.approx(6.22096057427178e-16, rel=1e-9)


# ------------------------------------------------------------------- anova

def test_anova_identical_groups():
    res = js.one_way_anova([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_anova_hand_worked_fixture():
    """Sums of squares worked by hand: groups (1,2,3), (2,3,4), (4,5,6).

    Means 2, 3, 5; grand mean 10/3. SSB = 3*((4/3)^2 + (1/3)^2 + (5/3)^2)
    = 14; SSW = 2 per group * 3 = 6. F = (14/2)/(6/6) = 7 on (2, 6) df;
    p = I_{6/20}(3, 1) = 0.3^3 = 0.027 exactly.
    """
    res = js.one_way_anova([[1, 2, 3], [2, 3, 4], [4, 5, 6]])
    assert res.statistic == pytest.approx(7.0, abs=1e-10)
    assert res.df == (2.0, 6.0)
    assert res.p_value == pytest.approx(0.027, abs=1e-10)


def test_anova_zero_variance_unequal_means_degenerate():
    res = js.one_way_anova([[2.0, 2.0], [3.0, 3.0]])
    assert res.p_value == 0.0 and res.degenerate


def test_anova_requires_two_groups_of_two():
    with pytest.raises(ValueError):
        js.one_way_anova([[1.0, 2.0]])
    with pytest.raises(ValueError):
        js.one_way_anova([[1.0, 2.0], [3.0]])


def test_anova_shift_and_scale_invariance():
    rng = np.random.default_rng(0)
    groups = [rng.normal(i, 1.0, 15) for i in range(3)]
    base = js.one_way_anova(groups)
    shifted = js.one_way_anova([g + 100.0 for g in groups])
    scaled = js.one_way_anova([g * 7.5 for g in groups])
    assert shifted.statistic == pytest.approx(base.statistic, rel=1e-9)
    assert scaled.statistic == pytest.approx(base.statistic, rel=1e-9)


def test_anova_null_pvalues_uniform():
    pvals = js.anova_null_calibration(1000, seed=123)
    from scipy import stats as ss

    ks = ss.kstest(pvals, "uniform")
    assert ks.pvalue > 0.01


# ------------------------------------------------------------ games-howell

def test_games_howell_identical_pair():
    res = js.games_howell([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
    assert len(res) == 1
    assert res[0].result.statistic == 0.0
    assert res[0].result.p_value == 1.0


def test_games_howell_k2_reduces_to_welch_t():
    rng = np.random.default_rng(1)
    a = rng.normal(0.0, 1.0, 12)
    b = rng.normal(0.8, 2.0, 9)
    res = js.games_howell([a, b])[0].result
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    t = abs(a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    welch_p = sp.student_t_sf2(t, df)
    assert res.p_value == pytest.approx(welch_p, abs=1e-6)


def test_games_howell_three_group_fixture_matches_reference_table():
    groups = [GH_FIXTURE[k] for k in ("A", "B", "C")]
    results = js.games_howell(groups, labels=["A", "B", "C"])
    by_pair = {(r.label_a, r.label_b): r.result for r in results}
    for la, lb, t_ref, df_ref, p_ref in GH_REFERENCE:
        res = by_pair[(la, lb)]
        assert res.statistic == pytest.approx(t_ref, rel=1e-10)
        assert res.df[0] == pytest.approx(df_ref, rel=1e-10)
        assert res.p_value == pytest.approx(p_ref, abs=1e-6)


# ----------------------------------------------------------------- pearson

def test_pearson_perfect_lines():
    x = np.arange(10.0)
    assert js.pearson_correlation(x, x) == pytest.approx(1.0, abs=1e-15)
    assert js.pearson_correlation(x, -2.0 * x + 3.0) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_zero_variance_rejected():
    with pytest.raises(ValueError):
        js.pearson_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_pearson_matches_fraction_oracle():
    from fractions import Fraction

    rng = np.random.default_rng(2)
    x = rng.normal(0.0, 3.0, 100)
    y = 0.5 * x + rng.normal(0.0, 1.0, 100)
    got = js.pearson_correlation(x, y)

    fx = [Fraction(v) for v in x]
    fy = [Fraction(v) for v in y]
    mx = sum(fx) / len(fx)
    my = sum(fy) / len(fy)
    sxy = sum((a - mx) * (b - my) for a, b in zip(fx, fy))
    sxx = sum((a - mx) ** 2 for a in fx)
    syy = sum((b - my) ** 2 for b in fy)
    expected = float(sxy) / math.sqrt(float(sxx) * float(syy))
    assert got == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------- logistic

def test_logistic_constant_features_give_base_rate_intercept():
    rng = np.random.default_rng(3)
    y = (rng.random(200) < 0.3).astype(float)
    x = np.ones((200, 2)) * 5.0  # no information
    model = js.logistic_fit(x, y)
    base = y.mean()
    assert model.coefficients[0] == pytest.approx(math.log(base / (1 - base)), abs=1e-6)
    assert np.abs(model.coefficients[1:]).max() <= 1e-6


def test_logistic_separable_flags_nonconvergence():
    x = np.linspace(-1, 1, 20)
    y = (x > 0).astype(float)
    with pytest.warns(UserWarning, match="separation|converge"):
        model = js.logistic_fit(x, y)
    assert not model.converged


def test_logistic_recovers_known_coefficients():
    rng = np.random.default_rng(4)
    n = 5000
    volume = rng.gamma(3.0, 50.0, n)
    hd = rng.gamma(2.0, 1e-4, n)
    true_beta = np.array([-2.0, 0.004, 3000.0])
    eta = true_beta[0] + true_beta[1] * volume + true_beta[2] * hd
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    model = js.logistic_fit(np.column_stack([volume, hd]), y)
    assert model.converged
    for got, se, truth in zip(model.coefficients, model.std_errors, true_beta):
        assert abs(got - truth) <= 3.0 * se


def test_logistic_log_likelihood_monotone():
    rng = np.random.default_rng(5)
    x = rng.normal(0.0, 1.0, (300, 2))
    eta = 0.5 + x @ np.array([1.0, -2.0])
    y = (rng.random(300) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    model = js.logistic_fit(x, y)
    for a, b in zip(model.ll_history, model.ll_history[1:]):
        assert b >= a - 1e-10


def test_logistic_input_validation():
    with pytest.raises(ValueError):
        js.logistic_fit(np.ones((2, 1)), [0.0, 1.0])
    with pytest.raises(ValueError):
        js.logistic_fit(np.ones((5, 1)), [1.0, 1.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        js.logistic_fit(np.ones((3, 1)), [0.0, 0.5, 1.0])


# --------------------------------------------------------------------- auc

def test_auc_perfect_ranking():
    assert js.roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 0, 1]) == 1.0
    assert js.roc_auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0


def test_auc_all_equal_scores_half():
    assert js.roc_auc([0.5] * 10, [0, 1] * 5) == 0.5


def test_auc_single_class_rejected():
    with pytest.raises(ValueError):
        js.roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(6)
    scores = np.round(rng.random(200), 2)  # rounding forces ties
    labels = (rng.random(200) < 0.4).astype(int)
    got = js.roc_auc(scores, labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    expected = wins / (len(pos) * len(neg))
    assert abs(got - expected) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=60), st.data())
def test_auc_invariant_under_monotone_transform(scores, data):
    labels = data.draw(
        st.lists(st.integers(0, 1), min_size=len(scores), max_size=len(scores))
    )
    if len(set(labels)) < 2:
        labels[0], labels[-1] = 0, 1
    base = js.roc_auc(scores, labels)
    squashed = js.roc_auc([math.atan(s) for s in scores], labels)
    assert squashed == pytest.approx(base, abs=1e-12)


# ----------------------------------------------------------------- results

def test_result_serialization():
    res = js.one_way_anova([[1, 2, 3], [2, 3, 4], [4, 5, 6]])
    d = res.to_dict()
    assert set(d) == {"statistic", "df", "p", "method", "degenerate"}
    assert d["method"] == "one-way ANOVA"


def test_all_pvalues_in_unit_interval():
    rng = np.random.default_rng(7)
    for _ in range(25):
        groups = [rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0),
                             rng.integers(3, 20)) for _ in range(3)]
        assert 0.0 <= js.one_way_anova(groups).p_value <= 1.0
        for pair in js.games_howell(groups):
            assert 0.0 <= pair.result.p_value <= 1.0


def test_games_howell_skips_single_value_group_with_warning():
    with pytest.warns(UserWarning, match="fewer than 2"):
        res = js.games_howell([[1.0, 2.0, 3.0], [5.0], [2.0, 4.0, 6.0]],
                              labels=["a", "b", "c"])
    pairs = {(r.label_a, r.label_b) for r in res}
    assert pairs == {("a", "c")}


def test_p_monotone_decreasing_in_statistic():
    # fixed df: larger statistics never yield larger p-values
    f_ps = [sp.f_sf(f, 2.0, 10.0) for f in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a >= b for a, b in zip(f_ps, f_ps[1:]))
    t_ps = [sp.student_t_sf2(t, 7.3) for t in (0.1, 0.5, 1.5, 3.0, 6.0)]
    assert all(a >= b for a, b in zip(t_ps, t_ps[1:]))
    q_ps = [1 - sp.studentized_range_cdf(q, 3, 9.0) for q in (0.5, 1.5, 3.0, 5.0)]
    assert all(a >= b for a, b in zip(q_ps, q_ps[1:]))
