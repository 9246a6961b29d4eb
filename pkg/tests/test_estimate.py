import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockvar.errors import InvalidArgument
from blockvar.estimate import (EstimationConfig, FitResult, build_design_response, combine_fits,
                               estimate_block1, estimate_block2, forecast_one_step,
                               penalized_objective, rank_of)
from blockvar.simulate import ExperimentSpec, ModelParams, generate_params, replication_rng, simulate_system
from blockvar.solvers import svt


def _small_system(seed=0, T=80, p1=6, p2=4):
    spec = ExperimentSpec(p1=p1, p2=p2, rank_B=2, T=T, omega_density=0.3)
    rng = replication_rng(seed, 0)
    params = generate_params(spec, rng)
    X, Z = simulate_system(params, T + 1, rng=rng, burn_in=100)
    return params, X, Z


# ---------------------------------------------------------------- design

def test_design_shifts_by_one_row():
    X = np.arange(6.0).reshape(3, 2)
    d = build_design_response(X)
    assert d.x_design.shape == (2, 2) and d.x_response.shape == (2, 2)
    assert np.array_equal(d.x_response[0], d.x_design[1])
    assert d.T == 2


def test_constant_series_is_centered_to_zero():
    d = build_design_response(np.full((5, 3), 7.0), np.full((5, 2), -1.0))
    assert not np.any(d.x_design) and not np.any(d.z_response)


def test_joint_design_has_both_blocks(rng):
    d = build_design_response(rng.standard_normal((10, 3)), rng.standard_normal((10, 2)))
    assert d.joint_design.shape == (9, 5)


def test_design_rejects_mismatched_lengths(rng):
    with pytest.raises(InvalidArgument):
        build_design_response(rng.standard_normal((10, 3)), rng.standard_normal((9, 2)))


# ---------------------------------------------------------------- estimators

def test_block1_full_shrinkage_on_white_noise(rng):
    X = rng.standard_normal((300, 5)) * np.array([1.0, 2.0, 0.5, 1.5, 1.0])
    d = build_design_response(X)
    S = d.x_response.T @ d.x_response / d.T
    big = 100.0 * np.abs(d.x_design.T @ d.x_response).max() / d.T
    fit = estimate_block1(X, EstimationConfig(lambda_A=big, rho_u=10 * np.abs(S).max()))
    assert np.array_equal(fit.A, np.zeros((5, 5)))
    assert np.allclose(fit.Omega_u, np.diag(1.0 / np.diag(S)), atol=1e-10)


def test_block2_full_shrinkage_on_null_system(rng):
    X, Z = rng.standard_normal((200, 4)), rng.standard_normal((200, 3))
    d = build_design_response(X, Z)
    big = 100.0 * np.abs(d.joint_design.T @ d.z_response).max() / d.T
    for structure in ("low-rank", "sparse"):
        fit = estimate_block2(X, Z, EstimationConfig(lambda_B=big, lambda_C=big, rho_v=1.0,
                                                     b_structure=structure))
        assert not np.any(fit.B) and not np.any(fit.C)


@given(seed=st.integers(0, 500), lam=st.floats(0.01, 0.5), rho=st.floats(0.01, 0.5))
def test_block1_trace_never_increases(seed, lam, rho):
    _, X, _ = _small_system(seed)
    fit = estimate_block1(X, EstimationConfig(lambda_A=lam, rho_u=rho))
    assert np.all(np.diff(fit.objective_trace) <= 1e-9)


@given(seed=st.integers(0, 500), lb=st.floats(0.01, 2.0), lc=st.floats(0.01, 0.5),
       rho=st.floats(0.01, 0.5), penalty=st.sampled_from(["plain", "whitened"]),
       structure=st.sampled_from(["low-rank", "sparse"]))
def test_block2_trace_never_increases(seed, lb, lc, rho, penalty, structure):
    _, X, Z = _small_system(seed)
    cfg = EstimationConfig(lambda_B=lb, lambda_C=lc, rho_v=rho, b_penalty=penalty,
                           b_structure=structure, max_outer=8)
    fit = estimate_block2(X, Z, cfg)
    assert np.all(np.diff(fit.objective_trace) <= 1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_trace_end_equals_recomputed_objective(seed):
    _, X, Z = _small_system(seed)
    cfg = EstimationConfig(lambda_A=0.1, rho_u=0.05, lambda_B=0.3, lambda_C=0.05, rho_v=0.05)
    f1 = estimate_block1(X, cfg)
    f2 = estimate_block2(X, Z, cfg)
    assert penalized_objective(f1, X, None, cfg) == pytest.approx(f1.objective_trace[-1], abs=1e-9)
    assert penalized_objective(f2, X, Z, cfg) == pytest.approx(f2.objective_trace[-1], abs=1e-9)


def test_ml_improves_on_two_step_start():
    _, X, Z = _small_system(1, T=150)
    cfg = EstimationConfig(lambda_A=0.1, rho_u=0.05)
    fit = estimate_block1(X, cfg)
    start = penalized_objective(ModelParams(fit.initial["A"], np.zeros((4, 6)), np.eye(4),
                                            np.eye(6), np.eye(4)), X, None, cfg)
    assert fit.objective_trace[0] == pytest.approx(start)
    assert fit.objective_trace[-1] <= start


def test_estimators_validate_config(rng):
    X = rng.standard_normal((20, 2))
    with pytest.raises(InvalidArgument):
        estimate_block1(X, {"lambda_A": 0.1})
    with pytest.raises(InvalidArgument):
        estimate_block2(X, None, EstimationConfig())
    with pytest.raises(InvalidArgument):
        EstimationConfig(lambda_A=-1.0)
    with pytest.raises(InvalidArgument):
        EstimationConfig(b_structure="banded")


# ---------------------------------------------------------------- objective

def test_objective_identity_precision_zero_transitions(rng):
    X = rng.standard_normal((40, 3))
    d = build_design_response(X)
    p = ModelParams(np.zeros((3, 3)), np.zeros((1, 3)), np.zeros((1, 1)), np.eye(3), np.eye(1))
    cfg = EstimationConfig(lambda_A=0.7, rho_u=0.4)
    expected = np.trace(d.x_response.T @ d.x_response) / d.T
    assert penalized_objective(p, X, None, cfg) == pytest.approx(expected, rel=1e-12)


def test_objective_noiseless_cross_block_has_no_trace_term(rng):
    T, p1, p2 = 30, 3, 2
    X = rng.standard_normal((T + 1, p1))
    X[-1] = 0.0
    X[:-1] -= X[:-1].mean(axis=0)       # full-panel and lagged means are both zero
    B = rng.standard_normal((p2, p1))
    Z = np.zeros((T + 1, p2))
    Z[1:] = X[:-1] @ B.T
    Om = np.array([[2.0, 0.3], [0.3, 1.0]])
    params = ModelParams(np.zeros((p1, p1)), B, np.zeros((p2, p2)), np.eye(p1), Om)
    got = penalized_objective(params, X, Z, EstimationConfig())
    assert got == pytest.approx(-np.linalg.slogdet(Om)[1], abs=1e-12)


def test_objective_rejects_indefinite_precision(rng):
    X = rng.standard_normal((10, 2))
    p = ModelParams(np.zeros((2, 2)), np.zeros((1, 2)), np.zeros((1, 1)),
                    np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(1))
    with pytest.raises(InvalidArgument):
        penalized_objective(p, X)


# ---------------------------------------------------------------- rank and forecast

def test_rank_of_simple_cases(rng):
    assert rank_of(np.zeros((3, 4))) == 0
    assert rank_of(np.eye(5)) == 5
    M = rng.standard_normal((6, 5))
    s = np.linalg.svd(M, compute_uv=False)
    assert rank_of(svt(M, s[2])) == 2


def test_forecast_zero_and_identity(rng):
    x, z = rng.standard_normal(3), rng.standard_normal(2)
    zero = ModelParams(np.zeros((3, 3)), np.zeros((2, 3)), np.zeros((2, 2)), np.eye(3), np.eye(2))
    xh, zh = forecast_one_step(zero, x, z)
    assert not np.any(xh) and not np.any(zh)
    ident = ModelParams(np.eye(3), np.zeros((2, 3)), np.zeros((2, 2)), np.eye(3), np.eye(2))
    assert np.array_equal(forecast_one_step(ident, x)[0], x)


def test_forecast_shape_mismatch(rng):
    p = ModelParams(np.eye(3), np.zeros((2, 3)), np.zeros((2, 2)), np.eye(3), np.eye(2))
    with pytest.raises(InvalidArgument):
        forecast_one_step(p, np.ones(2))


# ---------------------------------------------------------------- serialization

def test_fit_result_round_trip():
    _, X, Z = _small_system(2)
    cfg = EstimationConfig(lambda_B=0.2, lambda_C=0.05, rho_v=0.1, b_penalty="whitened")
    fit = estimate_block2(X, Z, cfg)
    back = FitResult.from_dict(fit.to_dict())
    assert back.config == cfg
    assert np.array_equal(back.B, fit.B) and back.objective_trace == fit.objective_trace
    assert np.array_equal(back.initial["C"], fit.initial["C"])


def test_config_from_dict_rejects_unknown_fields():
    with pytest.raises(InvalidArgument, match="lambda_D"):
        EstimationConfig.from_dict({"lambda_D": 1.0})
    with pytest.raises(InvalidArgument):
        EstimationConfig.from_dict({"ctrl": {"iterations": 3}})
    assert EstimationConfig.from_dict(EstimationConfig(rho_u=0.2).to_dict()).rho_u == 0.2


def test_combine_fits_builds_full_params():
    _, X, Z = _small_system(3)
    cfg = EstimationConfig(lambda_A=0.1, rho_u=0.1, lambda_B=0.2, lambda_C=0.05, rho_v=0.1)
    params = combine_fits(estimate_block1(X, cfg), estimate_block2(X, Z, cfg))
    assert params.p1 == 6 and params.p2 == 4
