import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockvar.errors import InvalidArgument, NumericalBreakdown, TuningFailure
from blockvar.estimate import EstimationConfig, estimate_block1
from blockvar.evaluation import (TestDesign, TuningGrid, bic_score, bic_select, clustering_profile,
                                 global_clustering_coefficient, max_trace_increase,
                                 penalty_scales, regime_change_panel, rolling_windows,
                                 run_experiment, run_test_design, stability_selection,
                                 streaming_mean_sd, subsample_starts, support_metrics,
                                 window_slices)
from blockvar.simulate import ExperimentSpec


def _var_panel(A, T, rng, noise=1.0):
    p = A.shape[0]
    X = np.zeros((T + 50, p))
    for t in range(1, T + 50):
        X[t] = A @ X[t - 1] + noise * rng.standard_normal(p)
    return X[50:]


# ---------------------------------------------------------------- metrics

def test_metrics_exact_match(rng):
    M = rng.standard_normal((4, 4)) * (rng.random((4, 4)) < 0.5)
    M[0, 0] = 1.0
    M[0, 1] = 0.0
    rep = support_metrics(M, M)
    assert (rep.sen, rep.spc, rep.rel_error) == (1.0, 1.0, 0.0)


def test_metrics_zero_estimate(rng):
    truth = np.diag([1.0, -2.0, 0.5])
    rep = support_metrics(np.zeros((3, 3)), truth)
    assert (rep.sen, rep.spc, rep.rel_error) == (0.0, 1.0, 1.0)


def test_metrics_hand_instance():
    truth = np.array([[1.0, 0.0], [0.0, 1.0]])
    est = np.array([[0.7, 0.3], [0.0, 0.0]])
    rep = support_metrics(est, truth)
    assert rep.sen == 0.5 and rep.spc == 0.5


def test_metrics_rank_and_shape_check(rng):
    B = np.outer(rng.standard_normal(3), rng.standard_normal(4))
    assert support_metrics(B, B, with_rank=True).rank == 1
    with pytest.raises(InvalidArgument):
        support_metrics(np.zeros((2, 2)), np.zeros((3, 3)))


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_streaming_moments_match_numpy(values):
    mean, sd = streaming_mean_sd(values)
    n = len(values)
    assert mean == pytest.approx(np.mean(values), rel=1e-9, abs=1e-6)
    if n == 1:
        assert math.isnan(sd)
    else:
        assert sd == pytest.approx(np.std(values, ddof=1), rel=1e-7, abs=1e-6)


def test_trace_increase_helper():
    assert max_trace_increase([3.0, 2.0, 2.0, 1.0]) == 0.0
    assert max_trace_increase([3.0, 3.5, 1.0]) == 0.5


# ---------------------------------------------------------------- clustering

def test_clustering_complete_graph():
    assert global_clustering_coefficient(np.ones((4, 4))) == 1.0


def test_clustering_star_graph():
    g = np.zeros((5, 5))
    g[0, 1:] = g[1:, 0] = 1
    assert global_clustering_coefficient(g) == 0.0


def test_clustering_path_with_chord():
    g = np.zeros((4, 4))
    for i, j in [(0, 1), (1, 2), (2, 3), (0, 2)]:
        g[i, j] = g[j, i] = 1
    assert global_clustering_coefficient(g) == pytest.approx(0.6)


def test_clustering_ignores_direction_and_loops():
    g = np.triu(np.ones((3, 3)))
    assert global_clustering_coefficient(g) == 1.0


# ---------------------------------------------------------------- tuning

def test_single_point_grid_returns_that_point(rng):
    X = rng.standard_normal((60, 4))
    grid = TuningGrid(lambda_A=0.3, rho_u=0.05, relative=False)
    sel = bic_select(X, None, grid, "block1")
    assert sel.config.lambda_A == 0.3 and sel.config.rho_u == 0.05
    assert len(sel.surface) == 1 and sel.index == 0


def test_bic_recovers_support_on_clean_instance():
    rng = np.random.default_rng(0)
    A = np.array([[0.6, 0.0, 0.0, 0.0], [0.0, 0.0, -0.5, 0.0],
                  [0.0, 0.0, 0.5, 0.0], [0.4, 0.0, 0.0, 0.0]])
    X = _var_panel(A, 20000, rng)
    grid = TuningGrid(lambda_A=(0.02, 0.9, 15), rho_u=0.01)
    sel = bic_select(X, None, grid, "block1")
    assert np.array_equal(np.abs(sel.fit.A) > 1e-6, A != 0)
    # exhaustive oracle: refit every lattice point and take the smallest score
    scale = penalty_scales(X)["lambda_A"]
    scores = [bic_score(estimate_block1(X, EstimationConfig(lambda_A=v * scale, rho_u=0.01)), X)[0]
              for v in grid.values("lambda_A")]
    assert sel.index == int(np.argmin(scores))


def test_bic_degrees_of_freedom(rng):
    X = rng.standard_normal((50, 3))
    fit = estimate_block1(X, EstimationConfig(lambda_A=0.05, rho_u=0.01))
    score, ll, df = bic_score(fit, X)
    expect = np.count_nonzero(fit.A) + np.count_nonzero(np.triu(fit.Omega_u, 1))
    assert df == expect
    assert score == pytest.approx(-2 * ll + math.log(49) * df)


def test_relative_grid_scales_by_full_shrinkage_level(rng):
    X = rng.standard_normal((60, 3))
    grid = TuningGrid(lambda_A=1.0, rho_u=0.1)
    sel = bic_select(X, None, grid, "block1")
    assert sel.config.lambda_A == pytest.approx(penalty_scales(X)["lambda_A"])
    # the scale zeroes the identity-weighted two-step fit
    assert not np.any(sel.fit.initial["A"])


def test_tuning_failure_when_every_point_fails(rng, monkeypatch):
    import blockvar.evaluation as ev

    def broken(X, cfg):
        raise NumericalBreakdown("synthetic failure")

    monkeypatch.setattr(ev, "estimate_block1", broken)
    with pytest.raises(TuningFailure) as info:
        bic_select(rng.standard_normal((40, 3)), None, TuningGrid(lambda_A=(0.1, 0.2, 2), rho_u=0.1))
    assert len(info.value.errors) == 2


def test_grid_round_trip_and_validation():
    g = TuningGrid(lambda_A=(0.1, 0.5, 3), rho_u=0.2)
    assert TuningGrid.from_dict(g.to_dict()) == g
    assert len(g.points("block1")) == 3
    with pytest.raises(InvalidArgument):
        TuningGrid.from_dict({"lambda_Q": 1})
    with pytest.raises(InvalidArgument):
        TuningGrid(lambda_A=(0.5, 0.1, 3))


# ---------------------------------------------------------------- windows

def test_window_counts():
    assert len(window_slices(36, 36)) == 1
    assert len(window_slices(178, 36, 1)) == 143
    assert [s.start for s in window_slices(10, 4, 3)] == [0, 3, 6]
    with pytest.raises(InvalidArgument):
        window_slices(10, 11)


def test_rolling_windows_are_deterministic(rng):
    X = rng.standard_normal((60, 3))
    cfg = EstimationConfig(lambda_A=0.1, rho_u=0.1)
    a = rolling_windows(X, None, 30, 10, cfg)
    b = rolling_windows(X, None, 30, 10, cfg)
    assert len(a) == 4
    assert all(np.array_equal(x.A, y.A) for x, y in zip(a, b))


def test_stability_identical_support_at_full_threshold(rng):
    M = np.array([[1.0, 0.0], [0.5, 0.0]])
    assert np.array_equal(stability_selection([M] * 5, threshold=1.0), M != 0)


def test_stability_alternating_support_is_dropped():
    a, b = np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])
    assert not stability_selection([a, b], threshold=0.6).any()


def test_stability_recovers_persistent_support():
    rng = np.random.default_rng(3)
    A = np.zeros((8, 8))
    A[np.arange(8), (np.arange(8) + 1) % 8] = 0.5
    X = _var_panel(A, 20 * 60, rng)
    cfg = EstimationConfig(lambda_A=0.4 * penalty_scales(X[:60])["lambda_A"], rho_u=0.1)
    fits = rolling_windows(X, None, 60, 60, cfg)
    assert len(fits) == 20
    sel = stability_selection(fits, threshold=0.6)
    assert support_metrics(sel.astype(float), A).sen >= 0.9


def test_regime_change_peaks_inside_planted_window():
    X, A_low, A_high = regime_change_panel(rng=np.random.default_rng(0))
    assert global_clustering_coefficient(A_low) == 0.0
    assert global_clustering_coefficient(A_high) == 1.0
    centers, coefs, _ = clustering_profile(X, 120, 20)
    assert 300 < centers[np.argmax(coefs)] < 500


# ---------------------------------------------------------------- experiments

def test_single_replication_has_no_sd():
    spec = ExperimentSpec(p1=6, p2=4, rank_B=2, T=60, replications=1, omega_density=0.3)
    grid = TuningGrid(lambda_A=0.3, rho_u=0.1, lambda_B=0.05, lambda_C=0.05, rho_v=0.1)
    rep = run_experiment(spec, grid, workers=1)
    summary = rep.summary()
    assert summary["A_error"]["n"] == 1 and "sd" not in summary["A_error"]
    assert {"B_rank", "C_sen", "forecast_z_error"} <= set(summary)
    rows = rep.csv_rows()
    assert all(r[0] == 0 for r in rows)


def test_experiment_records_failures_instead_of_raising():
    spec = ExperimentSpec(p1=6, p2=40, rank_B=2, T=20, replications=2, omega_density=0.3)
    grid = TuningGrid(lambda_A=0.3, rho_u=0.1, lambda_B=0.05, lambda_C=0.05, rho_v=0.1)
    rep = run_experiment(spec, grid, blocks=("block2",), forecast=False, workers=1)
    assert len(rep.failures) + len(rep.replications) == 2


def test_subsample_starts_fit_inside_panel():
    starts = subsample_starts(100, 30, 50, np.random.default_rng(0))
    assert starts.min() >= 0 and starts.max() <= 70


def test_test_design_reports_each_alpha():
    d = TestDesign(p1=4, p2=4, T=100, n_subsamples=30, n_panels=2, seed=3)
    res = run_test_design(d)
    assert set(res["rates"]) == {"0.01", "0.05", "0.1"}
    assert res["rates"]["0.01"] <= res["rates"]["0.05"] <= res["rates"]["0.1"]
    hc = run_test_design(TestDesign(p1=4, p2=4, T=100, n_subsamples=30, n_panels=2, method="hc"))
    assert set(hc["rates"]) == {"rule"}
