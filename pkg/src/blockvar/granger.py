"""Group Granger-causality tests of ``H0: B = 0`` between the x and z blocks.

All statistics are built from the residuals of the lagged x design and of
the z response after projecting out the lagged z design. Panels are centered
first, the same way the estimators do it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, special

from .errors import InvalidArgument, RankDeficiency
from .estimate import build_design_response
from .simulate import _as_rng

METHODS = ("rank-test", "granger-corollary", "higher-criticism")
_RANK_TOL = 1e-10


@dataclass
class PartialCovariances:
    S00: np.ndarray   # z response residuals, p2 x p2
    S11: np.ndarray   # lagged x residuals, p1 x p1
    S10: np.ndarray   # p1 x p2
    T: int

    @property
    def S01(self):
        return self.S10.T


@dataclass
class TestReport:
    statistic: float
    threshold: float
    p_value: float | None
    reject: bool
    method: str
    dof: int | None = None
    r_null: int | None = None
    alpha: float | None = None
    eigenvalues: list[float] = field(default_factory=list)

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self):
        return asdict(self)


def std_normal_upper_tail(t):
    """``P(N(0,1) > t)`` through the complementary error function."""
    return 0.5 * special.erfc(np.asarray(t, dtype=float) / np.sqrt(2.0))


def chi2_upper_quantile(dof, alpha):
    """Point ``q`` with ``P(chi2_dof > q) = alpha``."""
    if dof < 1:
        raise InvalidArgument("dof must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument("alpha must lie strictly between 0 and 1")
    return float(2.0 * special.gammainccinv(dof / 2.0, alpha))


def chi2_upper_tail(dof, x):
    if x <= 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, x / 2.0))


def _residualize(design, *targets, block="Z"):
    """Residuals of ``targets`` after least squares on ``design`` (via thin QR)."""
    T, p = design.shape
    if p >= T:
        raise RankDeficiency(f"lagged {block} design has {p} columns but only {T} rows; "
                             f"the projection needs p2 < T", block=block)
    Q, R = np.linalg.qr(design)
    diag = np.abs(np.diag(R))
    if diag.size and diag.min() <= _RANK_TOL * max(diag.max(), 1e-300):
        raise RankDeficiency(f"lagged {block} design is singular ({block}'{block} not invertible)",
                             block=block)
    return [Y - Q @ (Q.T @ Y) for Y in targets]


def partial_covariances(X, Z):
    """Residual (partial) covariances of lagged x and current z given lagged z."""
    d = build_design_response(X, Z)
    rx, rz = _residualize(d.z_design, d.x_design, d.z_response)
    T = d.T
    return PartialCovariances(S00=rz.T @ rz / T, S11=rx.T @ rx / T, S10=rx.T @ rz / T, T=T)


def _cholesky(S, block):
    try:
        return linalg.cholesky(S, lower=True)
    except linalg.LinAlgError:
        raise RankDeficiency(f"{block} residual covariance is singular", block=block) from None


def _whitened_eigenvalues(S00, M):
    """Eigenvalues of ``|M - phi S00| = 0`` in descending order."""
    L = _cholesky(S00, "S00")
    W = linalg.solve_triangular(L, linalg.solve_triangular(L, M, lower=True).T, lower=True)
    phi = np.linalg.eigvalsh(0.5 * (W + W.T))[::-1]
    return np.clip(phi, 0.0, None)


def canonical_eigenvalues(pc):
    """Solutions of ``|S01 S11^{-1} S10 - phi S00| = 0``, descending.

    Only the first ``min(p1, p2)`` are returned; the rest are zero by rank.
    """
    L11 = _cholesky(pc.S11, "S11")
    half = linalg.solve_triangular(L11, pc.S10, lower=True)     # L11^{-1} S10
    return _whitened_eigenvalues(pc.S00, half.T @ half)[:min(pc.S10.shape)]


def rank_test(X, Z, r_null=0, alpha=0.05, pc=None):
    """Test ``rank(B) <= r_null`` against a larger rank.

    ``T * sum_{k > r_null} phi_k`` is compared with chi-squared on
    ``(p1 - r) (p2 - r)`` degrees of freedom.
    """
    pc = pc or partial_covariances(X, Z)
    p1, p2 = pc.S11.shape[0], pc.S00.shape[0]
    if not 0 <= r_null < min(p1, p2):
        raise InvalidArgument(f"r_null must lie in [0, {min(p1, p2) - 1}]")
    _check_alpha(alpha)
    phi = canonical_eigenvalues(pc)
    psi = float(phi[r_null:].sum())
    dof = (p1 - r_null) * (p2 - r_null)
    p_value = chi2_upper_tail(dof, pc.T * psi)
    return TestReport(statistic=psi, threshold=chi2_upper_quantile(dof, alpha) / pc.T,
                      p_value=p_value, reject=p_value < alpha, method="rank-test",
                      dof=dof, r_null=r_null, alpha=alpha, eigenvalues=phi.tolist())


def psi_profile(pc):
    """``Psi_r`` for ``r = 0..min(p1, p2)``; the last entry is the empty sum."""
    phi = canonical_eigenvalues(pc)
    tails = np.concatenate([np.cumsum(phi[::-1])[::-1], [0.0]])
    return tails


def granger_test(X, Z, alpha=0.05, pc=None):
    """Test ``B = 0`` using only the diagonal of S11, so p1 may exceed T."""
    pc = pc or partial_covariances(X, Z)
    _check_alpha(alpha)
    d11 = np.diag(pc.S11)
    if np.any(d11 <= _RANK_TOL * max(d11.max(initial=0.0), 1e-300)):
        raise RankDeficiency("a lagged x residual has zero variance", block="X")
    scaled = pc.S10 / np.sqrt(d11)[:, None]
    phi = _whitened_eigenvalues(pc.S00, scaled.T @ scaled)
    psi = float(phi.sum())
    p1, p2 = pc.S11.shape[0], pc.S00.shape[0]
    dof = p1 * p2
    cut = chi2_upper_quantile(dof, alpha) / pc.T
    return TestReport(statistic=psi, threshold=cut, p_value=chi2_upper_tail(dof, pc.T * psi),
                      reject=psi > cut, method="granger-corollary", dof=dof, r_null=0,
                      alpha=alpha, eigenvalues=phi.tolist())


def default_t_grid(n_pairs):
    upper = int(np.floor(np.sqrt(5.0 * np.log(n_pairs))))
    return np.arange(1, max(upper, 1) + 1, dtype=float)


def standardized_cross_statistics(pc):
    """``sqrt(T) |S10_ij| / sqrt(S11_ii S00_jj)`` for every pair."""
    d11, d00 = np.diag(pc.S11), np.diag(pc.S00)
    scale = max(d11.max(initial=0.0), d00.max(initial=0.0), 1e-300)
    if np.any(d11 <= _RANK_TOL * scale) or np.any(d00 <= _RANK_TOL * scale):
        raise RankDeficiency("zero residual variance in the higher-criticism statistic",
                             block="X" if np.any(d11 <= _RANK_TOL * scale) else "Z")
    return np.sqrt(pc.T) * np.abs(pc.S10) / np.sqrt(np.outer(d11, d00))


def higher_criticism_statistic(stats, t_grid):
    n = stats.size
    tail = 2.0 * std_normal_upper_tail(t_grid)
    frac = (stats.ravel()[:, None] > t_grid[None, :]).mean(axis=0)
    return float(np.max(np.sqrt(n / (tail * (1.0 - tail))) * (frac - tail)))


def higher_criticism_test(X, Z, t_grid=None, pc=None):
    """Sparse-alternative test: rejects when HC* exceeds ``2 sqrt(log log(p1 p2))``."""
    pc = pc or partial_covariances(X, Z)
    n_pairs = pc.S10.size
    if n_pairs < 3:
        raise InvalidArgument("higher criticism needs p1 * p2 >= 3")
    grid = default_t_grid(n_pairs) if t_grid is None else np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise InvalidArgument("t_grid must be a nonempty list of positive thresholds")
    hc = higher_criticism_statistic(standardized_cross_statistics(pc), grid)
    cut = 2.0 * np.sqrt(np.log(np.log(n_pairs)))
    return TestReport(statistic=hc, threshold=float(cut), p_value=None, reject=hc > cut,
                      method="higher-criticism")


_TESTS: dict[str, Callable] = {
    "rank": rank_test,
    "rank-test": rank_test,
    "granger": granger_test,
    "granger-corollary": granger_test,
    "hc": higher_criticism_test,
    "higher-criticism": higher_criticism_test,
}


def run_test(method, X, Z, **kwargs):
    try:
        fn = _TESTS[method]
    except KeyError:
        raise InvalidArgument(f"unknown test {method!r}; choose from {sorted(_TESTS)}") from None
    return fn(X, Z, **kwargs)


def subsample_calibration(X, Z, test="granger", n_subsamples=500, block_length=None,
                          rng=None, **test_kwargs):
    """Fraction of contiguous subsamples on which ``test`` rejects.

    Blocks of ``block_length`` rows start uniformly at random. A block may
    cover the whole panel, which reduces to a single 0/1 decision.
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    n = X.shape[0]
    block_length = n if block_length is None else int(block_length)
    if not 2 < block_length <= n:
        raise InvalidArgument(f"block_length must lie in (2, {n}], got {block_length}")
    if n_subsamples < 1:
        raise InvalidArgument("n_subsamples must be positive")
    rng = _as_rng(rng)
    starts = rng.integers(0, n - block_length + 1, size=n_subsamples)
    fn = test if callable(test) else (lambda x, z, **kw: run_test(test, x, z, **kw))
    hits = sum(bool(fn(X[s:s + block_length], Z[s:s + block_length], **test_kwargs).reject)
               for s in starts)
    return hits / n_subsamples


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument("alpha must lie strictly between 0 and 1")
