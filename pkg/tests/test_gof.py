import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from inhibhawkes import (
    TOTAL,
    EventSequence,
    HawkesError,
    HawkesModel,
    SCENARIOS,
    SimConfig,
    benjamini_hochberg,
    compensator,
    gof_report,
    ks_exp_test,
    simulate,
    time_rescale,
)
from inhibhawkes.gof import TooFewEvents, kolmogorov_sf, sequence_tests


def poisson(mu=1.0):
    return HawkesModel([mu], [[0.0]], [1.0])


# --- time rescaling ---------------------------------------------------------

def test_poisson_increments_are_interarrival_times():
    s = EventSequence([0.5, 1.25, 3.0, 3.5], [0, 0, 0, 0], horizon=4.0)
    np.testing.assert_allclose(time_rescale(poisson(), s, 0), [0.75, 1.75, 0.5])
    np.testing.assert_allclose(time_rescale(poisson(), s, 0, include_first=True), [0.5, 0.75, 1.75, 0.5])
    np.testing.assert_allclose(time_rescale(poisson(), s, TOTAL), [0.75, 1.75, 0.5])


def test_too_few_events():
    s = EventSequence([0.5], [0], horizon=4.0)
    with pytest.raises(TooFewEvents):
        time_rescale(poisson(), s, 0)
    with pytest.raises(HawkesError):
        time_rescale(poisson(), s, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["S1", "S2", "S3"]))
def test_increments_nonnegative_and_telescoping(seed, name):
    m = SCENARIOS[name]
    s = simulate(SimConfig(m, n_events=200, seed=seed))
    for i in range(2):
        inc = time_rescale(m, s, i)
        assert np.all(inc >= 0)
        ti = s.times_of(i)
        total = compensator(m, s, i, ti[-1]) - compensator(m, s, i, ti[0])
        assert inc.sum() == pytest.approx(total, rel=1e-10, abs=1e-10)
    inc = time_rescale(m, s, TOTAL)
    total = sum(compensator(m, s, i, s.times[-1]) - compensator(m, s, i, s.times[0]) for i in range(2))
    assert inc.sum() == pytest.approx(total, rel=1e-10)


def test_true_model_increments_have_unit_mean():
    m = SCENARIOS["S1"]
    s = simulate(SimConfig(m, n_events=5000, seed=21))
    for target in (0, 1, TOTAL):
        inc = time_rescale(m, s, target)
        assert abs(inc.mean() - 1.0) < 3 / np.sqrt(inc.size)


# --- KS test ----------------------------------------------------------------

def test_kolmogorov_tail_matches_scipy():
    for x in np.concatenate([np.linspace(0.05, 3.5, 400), [1.18 - 1e-12, 1.18]]):
        assert kolmogorov_sf(x) == pytest.approx(special.kolmogorov(x), abs=1e-13)
    assert kolmogorov_sf(0.0) == 1.0


def test_ks_statistic_matches_scipy():
    x = np.random.default_rng(3).exponential(1.2, 300)
    ref = stats.kstest(x, "expon")
    assert ks_exp_test(x)[0] == pytest.approx(ref.statistic, abs=1e-15)


def test_ks_stratified_sample():
    n = 100
    x = -np.log1p(-(np.arange(1, n + 1) - 0.5) / n)
    d, p = ks_exp_test(x)
    assert d <= 0.5 / n + 1e-15
    assert p > 0.99


def test_ks_degenerate_and_errors():
    d, p = ks_exp_test(np.zeros(50))
    assert d == 1.0 and p < 1e-20
    with pytest.raises(HawkesError):
        ks_exp_test([])
    with pytest.raises(HawkesError):
        ks_exp_test([1.0, -0.1])


def test_ks_calibration():
    rng = np.random.default_rng(5)
    rejections = sum(ks_exp_test(rng.exponential(size=1000))[1] < 0.05 for _ in range(1000))
    # binomial(1000, 0.05): mean 50, sd 6.9
    assert 29 <= rejections <= 71


def test_doubled_rate_rejected():
    s = simulate(SimConfig(poisson(1.0), horizon=500.0, seed=2))
    inc = time_rescale(poisson(2.0), s, 0)
    assert inc.mean() == pytest.approx(2.0, rel=0.15)
    assert ks_exp_test(inc)[1] < 1e-6


# --- report -----------------------------------------------------------------

def test_report_average_is_arithmetic_mean():
    m = SCENARIOS["S2"]
    seqs = [simulate(SimConfig(m, n_events=300, seed=s)) for s in range(5)]
    rep = gof_report(m, seqs, q=0.05)
    per = np.array([sequence_tests(m, s)[1] for s in seqs])
    np.testing.assert_array_equal(rep.all_p, per.mean(axis=0))
    assert rep.n_sequences.tolist() == [5, 5, 5]
    np.testing.assert_array_equal(rep.bh_rejected, benjamini_hochberg(rep.all_p, 0.05, 3))
    rows = rep.ordered_rows()
    assert [r[1] for r in rows] == sorted(rep.all_p.tolist())
    assert [r[2] for r in rows] == pytest.approx([0.05 / 3, 0.1 / 3, 0.05])
    d = rep.to_dict()
    assert set(d) >= {"p", "p_tot", "ks_stats", "bh_rejected", "n_intervals"}


def test_report_skips_short_sequences():
    m = poisson()
    good = simulate(SimConfig(m, n_events=200, seed=1))
    short = EventSequence([1.0], [0], horizon=2.0)
    with pytest.warns(RuntimeWarning, match="skipping"):
        rep = gof_report(m, [good, short])
    np.testing.assert_array_equal(rep.all_p, gof_report(m, [good]).all_p)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(HawkesError):
            gof_report(m, [short])


def test_report_q_zero_rejects_nothing():
    m = poisson(3.0)
    s = simulate(SimConfig(poisson(1.0), n_events=500, seed=1))
    rep = gof_report(m, [s], q=0.0)
    assert not rep.bh_rejected.any()
    assert gof_report(m, [s], q=0.05).bh_rejected.all()


def test_poisson_true_model_average_p():
    m = poisson(1.0)
    seqs = [simulate(SimConfig(m, n_events=300, seed=100 + k)) for k in range(40)]
    rep = gof_report(m, seqs)
    assert 0.4 < rep.p_tot < 0.6


# --- Benjamini-Hochberg -----------------------------------------------------

def test_bh_examples():
    assert benjamini_hochberg([0.0, 0.0, 0.0], 0.05).all()
    assert not benjamini_hochberg([1.0, 1.0], 0.05).any()
    got = benjamini_hochberg([0.001, 0.012, 0.02, 0.2], 0.05, 4)
    assert got.tolist() == [True, True, True, False]
    # input order preserved
    assert benjamini_hochberg([0.2, 0.02, 0.001, 0.012], 0.05, 4).tolist() == [False, True, True, True]
    # strict inequality at the threshold
    assert not benjamini_hochberg([0.05], 0.05, 1).any()
    # larger family is stricter
    assert benjamini_hochberg([0.02], 0.05, 1).all() and not benjamini_hochberg([0.02], 0.05, 4).any()


def test_bh_errors():
    with pytest.raises(HawkesError):
        benjamini_hochberg([0.1], 1.5)
    with pytest.raises(HawkesError):
        benjamini_hochberg([1.1], 0.05)
    with pytest.raises(HawkesError):
        benjamini_hochberg([0.1, 0.2], 0.05, 1)


pvals = st.lists(st.floats(0, 1), min_size=1, max_size=20)


@settings(max_examples=300, deadline=None)
@given(pvals, st.floats(0, 1), st.floats(0, 1))
def test_bh_monotone_in_q(p, q1, q2):
    lo, hi = sorted((q1, q2))
    a = benjamini_hochberg(p, lo)
    b = benjamini_hochberg(p, hi)
    assert np.all(b[a])


@settings(max_examples=300, deadline=None)
@given(pvals, st.floats(0, 1))
def test_bh_rejects_a_lower_set(p, q):
    rej = benjamini_hochberg(p, q)
    p = np.array(p)
    if rej.any():
        assert p[rej].max() <= p[~rej].min(initial=np.inf)
