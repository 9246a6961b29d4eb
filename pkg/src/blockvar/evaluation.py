"""Support metrics, BIC tuning, rolling-window analysis and the Monte Carlo harness."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import BlockVARError, InvalidArgument, TuningFailure
from .estimate import (SCHEMA_VERSION, EstimationConfig, FitResult, build_design_response,
                       estimate_block1, estimate_block2, rank_of)
from .granger import chi2_upper_quantile, partial_covariances, rank_test, run_test
from .simulate import (ExperimentSpec, ModelParams, generate_counted_signal, generate_lowrank,
                       generate_params, generate_sparse_transition, replication_rng,
                       simulate_system, _as_rng)

DEFAULT_ZERO_TOL = 1e-6
WORKERS_ENV = "BLOCKVAR_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items, workers=None):
    """Ordered map, in worker processes when more than one worker is requested."""
    workers = default_workers() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# metrics


@dataclass
class MetricReport:
    sen: float | None
    spc: float | None
    rel_error: float
    rank: int | None = None

    def to_dict(self):
        return asdict(self)


def support_metrics(est, truth, zero_tol=DEFAULT_ZERO_TOL, with_rank=False):
    """Sensitivity, specificity and relative Frobenius error of ``est`` against ``truth``.

    SEN or SPC is ``None`` when its denominator is empty. The relative error
    against an all-zero truth is 0 for an exact match and infinite otherwise.
    """
    est = np.atleast_2d(np.asarray(est, dtype=float))
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    if est.shape != truth.shape:
        raise InvalidArgument(f"shape mismatch: estimate {est.shape} vs truth {truth.shape}")
    if not zero_tol > 0:
        raise InvalidArgument("zero_tol must be positive")
    e = np.abs(est) > zero_tol
    t = np.abs(truth) > zero_tol
    tp, fn = int(np.sum(e & t)), int(np.sum(~e & t))
    tn, fp = int(np.sum(~e & ~t)), int(np.sum(e & ~t))
    diff = float(np.linalg.norm(est - truth))
    scale = float(np.linalg.norm(truth))
    if scale > 0:
        rel = diff / scale
    else:
        rel = 0.0 if diff == 0 else math.inf
    return MetricReport(
        sen=tp / (tp + fn) if tp + fn else None,
        spc=tn / (tn + fp) if tn + fp else None,
        rel_error=rel,
        rank=rank_of(est) if with_rank else None,
    )


def global_clustering_coefficient(adjacency):
    """Three times the triangle count over the number of connected triples.

    Direction and self-loops are ignored; a graph without triples scores 0.
    """
    adj = np.asarray(adjacency)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InvalidArgument("adjacency must be a square matrix")
    g = (adj != 0)
    g = (g | g.T).astype(float)
    np.fill_diagonal(g, 0.0)
    deg = g.sum(axis=1)
    triples = float(np.sum(deg * (deg - 1)) / 2.0)
    if triples == 0:
        return 0.0
    closed = float(np.trace(g @ g @ g))    # six times the triangle count
    return closed / 2.0 / triples


def streaming_mean_sd(values):
    """Welford's one-pass mean and sample standard deviation."""
    n, mean, m2 = 0, 0.0, 0.0
    for v in values:
        n += 1
        delta = v - mean
        mean += delta / n
        m2 += delta * (v - mean)
    if n == 0:
        return math.nan, math.nan
    return mean, math.sqrt(m2 / (n - 1)) if n > 1 else math.nan


# --------------------------------------------------------------------------
# tuning

_AXES = {"block1": ("lambda_A", "rho_u"), "block2": ("lambda_B", "lambda_C", "rho_v")}


def _axis_values(spec, name):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        if spec < 0:
            raise InvalidArgument(f"{name} must be nonnegative")
        return np.array([float(spec)])
    try:
        lo, hi, n = spec
    except (TypeError, ValueError):
        raise InvalidArgument(f"{name} must be a number or a (low, high, points) triple") from None
    if not (lo > 0 and hi >= lo):
        raise InvalidArgument(f"{name} range must satisfy 0 < low <= high")
    if int(n) != n or n < 1 or (n == 1 and lo != hi):
        raise InvalidArgument(f"{name} needs at least 2 points unless low == high")
    return np.geomspace(lo, hi, int(n))


@dataclass(frozen=True)
class TuningGrid:
    """Geometric lattice of penalty levels.

    Each axis is ``(low, high, points)`` or a single fixed value. With
    ``relative`` the lambda axes are fractions of the smallest penalty that
    zeroes the corresponding least-squares block; rho axes are always
    absolute.
    """

    lambda_A: tuple | float = (0.03, 0.8, 16)
    rho_u: tuple | float = (0.05, 0.4, 4)
    lambda_B: tuple | float = (0.02, 0.1, 10)
    lambda_C: tuple | float = (0.005, 0.1, 5)
    rho_v: tuple | float = (0.1, 0.25, 2)
    relative: bool = True
    selection: str = "bic"

    def __post_init__(self):
        if self.selection != "bic":
            raise InvalidArgument(f"unsupported selection rule {self.selection!r}")
        for names in _AXES.values():
            for name in names:
                self.values(name)

    def values(self, name):
        return _axis_values(getattr(self, name), name)

    def points(self, block):
        names = _AXES[block]
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.values(n) for n in names))]

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        d = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgument(f"unknown grid field(s): {', '.join(sorted(unknown))}")
        return cls(**d)


def penalty_scales(X, Z=None):
    """Penalty levels at which the least-squares blocks are fully shrunk to zero."""
    d = build_design_response(X, Z)
    T = d.T
    out = {"lambda_A": 2.0 * float(np.abs(d.x_design.T @ d.x_response).max()) / T}
    if Z is not None:
        out["lambda_B"] = 2.0 * float(np.linalg.norm(d.x_design.T @ d.z_response, 2)) / T
        out["lambda_C"] = 2.0 * float(np.abs(d.z_design.T @ d.z_response).max()) / T
    return out


def _gaussian_loglik(resid, Omega):
    T = resid.shape[0]
    S = resid.T @ resid / T
    return 0.5 * T * (np.linalg.slogdet(Omega)[1] - float(np.sum(Omega * S)))


def bic_score(fit, X, Z=None):
    """``(bic, loglik, df)`` of a fitted block on its own data."""
    d = build_design_response(X, Z)
    T = d.T
    if fit.block == "block1":
        resid = d.x_response - d.x_design @ fit.A.T
        Omega = fit.Omega_u
        df = np.count_nonzero(fit.A)
    else:
        resid = d.z_response - d.x_design @ fit.B.T - d.z_design @ fit.C.T
        Omega = fit.Omega_v
        if fit.config is not None and fit.config.b_structure == "sparse":
            df_b = np.count_nonzero(fit.B)
        else:
            r = rank_of(fit.B) if np.any(fit.B) else 0
            df_b = r * (sum(fit.B.shape) - r)
        df = df_b + np.count_nonzero(fit.C)
    df += np.count_nonzero(np.triu(Omega, 1))
    ll = _gaussian_loglik(resid, Omega)
    return -2.0 * ll + math.log(T) * df, ll, int(df)


def max_trace_increase(trace):
    """Largest step-to-step increase of an objective trace (0 when monotone)."""
    t = np.asarray(trace, dtype=float)
    return float(max(np.max(np.diff(t), initial=0.0), 0.0)) if t.size > 1 else 0.0


@dataclass
class Selection:
    config: EstimationConfig
    fit: FitResult
    surface: list
    index: int

    def surface_rows(self):
        return [dict(row) for row in self.surface]


def bic_select(X, Z=None, grid=None, estimator="block1", base=None):
    """Fit every lattice point independently and keep the BIC minimizer.

    Ties go to the point with larger penalties, compared axis by axis.
    """
    if estimator not in _AXES:
        raise InvalidArgument(f"estimator must be one of {sorted(_AXES)}")
    if estimator == "block2" and Z is None:
        raise InvalidArgument("block2 tuning needs the z panel")
    grid = grid or TuningGrid()
    base = base or EstimationConfig()
    scales = penalty_scales(X, Z) if grid.relative else {}
    names = _AXES[estimator]
    surface, errors = [], []
    best = None
    for i, point in enumerate(grid.points(estimator)):
        penalties = {n: float(v) * scales.get(n, 1.0) for n, v in point.items()}
        cfg = replace(base, **penalties)
        row = {**penalties, **{f"{n}_grid": float(v) for n, v in point.items()}}
        try:
            fit = estimate_block1(X, cfg) if estimator == "block1" else estimate_block2(X, Z, cfg)
            score, ll, df = bic_score(fit, X, Z)
        except BlockVARError as exc:
            errors.append({"point": row, "error": f"{type(exc).__name__}: {exc}"})
            row.update(score=math.nan, error=str(exc))
            surface.append(row)
            continue
        row.update(score=score, loglik=ll, df=df, converged=fit.converged,
                   max_trace_increase=max_trace_increase(fit.objective_trace))
        surface.append(row)
        key = (score, tuple(-penalties[n] for n in names))
        if best is None or key < best[0]:
            best = (key, i, cfg, fit)
    if best is None:
        raise TuningFailure(f"all {len(surface)} lattice points failed", errors)
    _, index, cfg, fit = best
    return Selection(cfg, fit, surface, index)


# --------------------------------------------------------------------------
# rolling windows and stability selection


def window_slices(n, window_length, step=1):
    if window_length < 2 or window_length > n:
        raise InvalidArgument(f"window_length must lie in [2, {n}], got {window_length}")
    if step < 1:
        raise InvalidArgument("step must be at least 1")
    count = (n - window_length) // step + 1
    return [slice(k * step, k * step + window_length) for k in range(count)]


def rolling_windows(X, Z=None, window_length=36, step=1, cfg=None, block="block1"):
    """Independent fits on contiguous windows of the panel."""
    X = np.asarray(X, dtype=float)
    cfg = cfg or EstimationConfig()
    if block not in _AXES:
        raise InvalidArgument(f"block must be one of {sorted(_AXES)}")
    if block == "block2" and Z is None:
        raise InvalidArgument("block2 windows need the z panel")
    fits = []
    for sl in window_slices(X.shape[0], window_length, step):
        if block == "block1":
            fits.append(estimate_block1(X[sl], cfg))
        else:
            fits.append(estimate_block2(X[sl], np.asarray(Z)[sl], cfg))
    return fits


def stability_selection(fits, threshold=0.6, key="A", zero_tol=DEFAULT_ZERO_TOL):
    """Edges present in at least a ``threshold`` fraction of the windows.

    ``fits`` may hold :class:`FitResult` objects (``key`` picks the matrix)
    or plain arrays.
    """
    mats = [np.asarray(getattr(f, key) if isinstance(f, FitResult) else f) for f in fits]
    if not mats:
        raise InvalidArgument("stability selection needs at least one fit")
    if not 0 < threshold <= 1:
        raise InvalidArgument("threshold must lie in (0, 1]")
    if len({m.shape for m in mats}) != 1:
        raise InvalidArgument("all fits must have the same dimensions")
    freq = np.mean([np.abs(m) > zero_tol for m in mats], axis=0)
    return freq >= threshold


def regime_change_panel(p=15, n=800, high=(300, 500), rho=0.8, clique=3, rng=None):
    """Panel whose transition graph switches from a chain to disjoint cliques inside ``high``.

    Outside the window each series loads on itself and on its predecessor,
    a triangle-free graph. Inside it the off-diagonal mass moves into dense
    ``clique`` blocks. Both matrices have spectral radius ``rho``.
    Returns ``(X, A_low, A_high)``.
    """
    rng = _as_rng(rng)
    lo_idx, hi_idx = high
    if not 0 < lo_idx < hi_idx < n:
        raise InvalidArgument("high window must lie strictly inside the panel")
    if not 2 <= clique <= p:
        raise InvalidArgument("clique size must lie between 2 and p")
    # lower bidiagonal: eigenvalues are the diagonal, so the radius is exact
    A_low = 0.5 * rho * (np.eye(p) + np.eye(p, k=-1))
    A_high = np.zeros((p, p))
    off = np.ones((clique, clique)) - np.eye(clique)
    for b in range(p // clique):
        s = slice(b * clique, (b + 1) * clique)
        A_high[s, s] = off * np.where(rng.random((clique, clique)) < 0.5, -1.0, 1.0)
    A_high *= rho / np.max(np.abs(np.linalg.eigvals(A_high)))
    burn = 200
    X = np.zeros((n + burn, p))
    noise = rng.standard_normal((n + burn, p))
    for t in range(1, n + burn):
        A = A_high if lo_idx <= t - burn < hi_idx else A_low
        X[t] = A @ X[t - 1] + noise[t]
    return X[burn:], A_low, A_high


def clustering_profile(X, window_length, step, cfg=None, zero_tol=DEFAULT_ZERO_TOL):
    """Clustering coefficient of the estimated transition graph in every window.

    Without ``cfg`` every window shares one penalty, 0.4 times the
    full-shrinkage level of the whole panel, so the coefficients are
    comparable across windows. Returns ``(window_centers, coefficients, fits)``.
    """
    X = np.asarray(X, dtype=float)
    if cfg is None:
        cfg = EstimationConfig(lambda_A=0.4 * penalty_scales(X)["lambda_A"], rho_u=0.1)
    fits = rolling_windows(X, None, window_length, step, cfg, "block1")
    centers = np.array([s.start + window_length / 2.0
                        for s in window_slices(X.shape[0], window_length, step)])
    coefs = np.array([global_clustering_coefficient(np.abs(f.A) > zero_tol) for f in fits])
    return centers, coefs, fits


# --------------------------------------------------------------------------
# estimation experiments


@dataclass
class ExperimentReport:
    """Per-replication metric values with their aggregates."""

    spec: dict
    metrics: dict = field(default_factory=dict)
    replications: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def summary(self):
        out = {}
        for name, vals in self.metrics.items():
            arr = np.asarray(vals, dtype=float)
            entry = {"mean": float(arr.mean()), "n": int(arr.size)}
            if arr.size > 1:
                entry["sd"] = float(arr.std(ddof=1))
            out[name] = entry
        return out

    def mean(self, name):
        return float(np.mean(self.metrics[name]))

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": self.spec,
            "summary": self.summary(),
            "metrics": {k: [float(v) for v in vals] for k, vals in self.metrics.items()},
            "replications": list(self.replications),
            "failures": list(self.failures),
            "failure_count": len(self.failures),
        }

    def csv_rows(self):
        """One ``(replication, metric, value)`` row per replication and metric."""
        rows = []
        for name, vals in self.metrics.items():
            rows.extend((rep, name, float(v)) for rep, v in zip(self.replications, vals))
        return rows


def _put_metrics(out, prefix, report):
    for name in ("sen", "spc"):
        value = getattr(report, name)
        if value is not None:
            out[f"{prefix}_{name}"] = value
    out[f"{prefix}_error"] = report.rel_error
    if report.rank is not None:
        out[f"{prefix}_rank"] = report.rank


def _replicate(task):
    spec, grid, rep, blocks, forecast = task
    rng = replication_rng(spec.seed, rep)
    params = generate_params(spec, rng)
    n = spec.T + 1 + (1 if forecast else 0)
    X, Z = simulate_system(params, n, spec.noise, spec.burn_in, rng)
    Xt, Zt = (X[:-1], Z[:-1]) if forecast else (X, Z)
    out = {}
    fit1 = fit2 = None
    if "block1" in blocks:
        sel = bic_select(Xt, None, grid, "block1")
        fit1 = sel.fit
        _put_metrics(out, "A", support_metrics(fit1.A, params.A))
        _put_metrics(out, "A_twostep", support_metrics(fit1.initial["A"], params.A))
        out["A_fro"] = float(np.linalg.norm(fit1.A - params.A))
        out["A_outer_iterations"] = fit1.iterations["outer"]
        out["A_trace_increase"] = max(r.get("max_trace_increase", 0.0) for r in sel.surface)
        out["lambda_A_grid"] = sel.surface[sel.index]["lambda_A_grid"]
    if "block2" in blocks:
        structure = "sparse" if spec.b_structure == "sparse" else "low-rank"
        sel = bic_select(Xt, Zt, grid, "block2", EstimationConfig(b_structure=structure))
        fit2 = sel.fit
        low_rank = structure == "low-rank"
        _put_metrics(out, "B", support_metrics(fit2.B, params.B, with_rank=low_rank))
        _put_metrics(out, "B_twostep",
                     support_metrics(fit2.initial["B"], params.B, with_rank=low_rank))
        if low_rank:
            for key in ("B_sen", "B_spc", "B_twostep_sen", "B_twostep_spc"):
                out.pop(key, None)
        _put_metrics(out, "C", support_metrics(fit2.C, params.C))
        _put_metrics(out, "C_twostep", support_metrics(fit2.initial["C"], params.C))
        out["BC_fro"] = float(np.linalg.norm(np.hstack([fit2.B - params.B, fit2.C - params.C])))
        out["BC_outer_iterations"] = fit2.iterations["outer"]
        out["BC_trace_increase"] = max(r.get("max_trace_increase", 0.0) for r in sel.surface)
        out["lambda_B_grid"] = sel.surface[sel.index]["lambda_B_grid"]
        out["lambda_C_grid"] = sel.surface[sel.index]["lambda_C_grid"]
    if forecast and fit1 is not None and fit2 is not None:
        mx, mz = Xt.mean(axis=0), Zt.mean(axis=0)
        x_last, z_last = Xt[-1] - mx, Zt[-1] - mz
        x_hat = mx + fit1.A @ x_last
        z_hat = mz + fit2.B @ x_last + fit2.C @ z_last
        out["forecast_x_error"] = float(np.linalg.norm(x_hat - X[-1]) / np.linalg.norm(X[-1]))
        out["forecast_z_error"] = float(np.linalg.norm(z_hat - Z[-1]) / np.linalg.norm(Z[-1]))
    return out


def _safe_replicate(task):
    try:
        return _replicate(task)
    except BlockVARError as exc:
        return {"__error__": f"{type(exc).__name__}: {exc}"}


def run_experiment(spec, grid=None, blocks=("block1", "block2"), forecast=True,
                   workers=None, replications=None):
    """Simulate, tune by BIC and score every replication of ``spec``.

    A replication that raises a package error is recorded in ``failures``
    and left out of the aggregates.
    """
    if not isinstance(spec, ExperimentSpec):
        raise InvalidArgument("spec must be an ExperimentSpec")
    blocks = tuple(blocks)
    if not set(blocks) <= set(_AXES) or not blocks:
        raise InvalidArgument(f"blocks must be a nonempty subset of {sorted(_AXES)}")
    grid = grid or TuningGrid()
    reps = range(spec.replications) if replications is None else replications
    tasks = [(spec, grid, rep, blocks, forecast) for rep in reps]
    results = _map(_safe_replicate, tasks, workers)
    report = ExperimentReport(spec=spec.to_dict())
    for (_, _, rep, _, _), res in zip(tasks, results):
        if "__error__" in res:
            report.failures.append({"replication": rep, "error": res["__error__"]})
            continue
        report.replications.append(rep)
        for k, v in res.items():
            report.metrics.setdefault(k, []).append(v)
    return report


def _consistency_replicate(task):
    spec, grid, rep, lengths = task
    rng = replication_rng(spec.seed, rep)
    params = generate_params(spec, rng)
    X, Z = simulate_system(params, max(lengths) + 1, spec.noise, spec.burn_in, rng)
    base = lengths[0]
    cfg1 = bic_select(X[:base + 1], None, grid, "block1").config
    cfg2 = bic_select(X[:base + 1], Z[:base + 1], grid, "block2").config
    errors = {}
    for T in lengths:
        shrink = math.sqrt(base / T)
        fit1 = estimate_block1(X[:T + 1], replace(cfg1, lambda_A=cfg1.lambda_A * shrink,
                                                   rho_u=cfg1.rho_u * shrink))
        fit2 = estimate_block2(X[:T + 1], Z[:T + 1],
                               replace(cfg2, lambda_B=cfg2.lambda_B * shrink,
                                       lambda_C=cfg2.lambda_C * shrink,
                                       rho_v=cfg2.rho_v * shrink))
        errors[T] = (float(np.linalg.norm(fit1.A - params.A)),
                     float(np.linalg.norm(np.hstack([fit2.B - params.B, fit2.C - params.C]))))
    return errors


def consistency_path(spec, lengths=(200, 400, 800), grid=None, workers=None):
    """Frobenius errors of A and of (B, C) along growing sample sizes on nested panels.

    Each replication simulates one panel of the largest length. Penalties
    are chosen by BIC on the shortest prefix and then scaled by
    ``sqrt(lengths[0] / T)``, the usual ``T^(-1/2)`` rate, for the longer
    prefixes. Returns ``{T: (A_errors, BC_errors)}`` with one entry per
    replication.
    """
    lengths = tuple(int(T) for T in lengths)
    if len(lengths) < 2 or list(lengths) != sorted(set(lengths)):
        raise InvalidArgument("lengths must be at least two strictly increasing sample sizes")
    grid = grid or TuningGrid()
    tasks = [(spec, grid, rep, lengths) for rep in range(spec.replications)]
    results = _map(_consistency_replicate, tasks, workers)
    return {T: (np.array([r[T][0] for r in results]), np.array([r[T][1] for r in results]))
            for T in lengths}


# --------------------------------------------------------------------------
# testing experiments


@dataclass(frozen=True)
class TestDesign:
    """Rejection-rate study for one test on one data-generating setting.

    Blocks of ``T + 1`` rows are cut uniformly at random from ``n_panels``
    independent panels of ``panel_factor * T`` rows, each with its own draw
    of the transition matrices. Innovations have identity covariance.
    """

    __test__ = False  # not a pytest class

    p1: int = 20
    p2: int = 20
    T: int = 2000
    rho_A: float = 0.5
    rho_C: float = 0.5
    b_kind: str = "zero"
    rank_B: int = 1
    snr: float = 0.8
    sparsity_exponent: float = 0.6
    method: str = "granger"
    r_null: int = 0
    alphas: tuple = (0.01, 0.05, 0.1)
    n_subsamples: int = 500
    n_panels: int = 10
    panel_factor: int = 20
    seed: int = 20240101

    def __post_init__(self):
        if self.b_kind not in ("zero", "low-rank", "sparse"):
            raise InvalidArgument(f"unknown b_kind {self.b_kind!r}")
        if self.n_subsamples < 1 or self.n_panels < 1 or self.panel_factor < 1:
            raise InvalidArgument("subsample, panel and length counts must be positive")

    def to_dict(self):
        return asdict(self)


def _test_params(design, rng):
    p1, p2 = design.p1, design.p2
    A = generate_sparse_transition(p1, min(1.0, 2.0 / p1), design.rho_A, rng)
    C = generate_sparse_transition(p2, min(1.0, 1.0 / p2), design.rho_C, rng)
    I1, I2 = np.eye(p1), np.eye(p2)
    if design.b_kind == "zero":
        B = np.zeros((p2, p1))
    elif design.b_kind == "low-rank":
        B = generate_lowrank(p2, p1, design.rank_B, rng)
    else:
        n_active = max(1, int(round((p1 * p2) ** design.sparsity_exponent)))
        B = generate_counted_signal(p2, p1, n_active, design.snr, A, I1, I2, rng)
    return ModelParams(A, B, C, I1, I2, "sparse")


def subsample_starts(n_rows, block_length, count, rng):
    return rng.integers(0, n_rows - block_length + 1, size=count)


def run_test_design(design):
    """Rejection rate of the design's test, per significance level.

    For the higher-criticism test the rejection rule has no level, so the
    result has a single ``"rule"`` entry.
    """
    hc = design.method in ("hc", "higher-criticism")
    counts = {a: 0 for a in (("rule",) if hc else design.alphas)}
    statistics = []
    per_panel = np.full(design.n_panels, design.n_subsamples // design.n_panels)
    per_panel[: design.n_subsamples % design.n_panels] += 1
    L = design.T + 1
    for k, m in enumerate(per_panel):
        if m == 0:
            continue
        rng = replication_rng(design.seed, k)
        params = _test_params(design, rng)
        X, Z = simulate_system(params, design.panel_factor * design.T + 1, rng=rng)
        for s in subsample_starts(X.shape[0], L, int(m), rng):
            x, z = X[s:s + L], Z[s:s + L]
            if hc:
                rep = run_test("hc", x, z)
                counts["rule"] += rep.reject
            else:
                kwargs = {"r_null": design.r_null} if design.method in ("rank", "rank-test") else {}
                rep = run_test(design.method, x, z, alpha=design.alphas[0], **kwargs)
                for a in design.alphas:
                    counts[a] += rep.statistic > chi2_upper_quantile(rep.dof, a) / (L - 1)
            statistics.append(rep.statistic)
    total = int(per_panel.sum())
    return {"rates": {str(a): c / total for a, c in counts.items()},
            "n_subsamples": total, "statistics": statistics, "design": design.to_dict()}


def null_statistic_sample(p1=5, p2=5, T=2000, replications=500, seed=7):
    """``T * Psi_0`` from independent Gaussian panels with ``B = 0``."""
    out = np.empty(replications)
    for r in range(replications):
        rng = replication_rng(seed, r)
        X = rng.standard_normal((T + 1, p1))
        Z = rng.standard_normal((T + 1, p2))
        pc = partial_covariances(X, Z)
        out[r] = pc.T * rank_test(X, Z, r_null=0, pc=pc).statistic
    return out
