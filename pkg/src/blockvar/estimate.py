"""Penalized maximum-likelihood estimation of the two-block VAR(1).

Block 1 fits ``(A, Omega_u)`` from the x-panel alone. Block 2 fits
``(B, C, Omega_v)`` by regressing z_t on ``[x_{t-1}, z_{t-1}]``, with B either
nuclear-norm penalized (low rank) or l1 penalized (sparse).

Both fits alternate between a graphical-Lasso step for the precision matrix
and a precision-weighted regression step for the transition matrices. Every
step is an exact (or safeguarded) block minimization, so the recorded
objective never increases.

All heavy lifting happens on Gram matrices, so after
:func:`build_design_response` the cost no longer depends on T.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import InvalidArgument, NumericalBreakdown
from .simulate import ModelParams
from .solvers import (DEFAULT_CONTROL, SolverControl, fista_nuclear_gram,
                      graphical_lasso, nuclear_norm)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EstimationConfig:
    """Penalty levels and iteration limits for both estimators.

    ``b_structure`` is ``low-rank`` (nuclear penalty on B) or ``sparse``
    (l1 penalty on B). For the low-rank case ``b_penalty`` chooses what the
    nuclear norm is applied to. ``plain`` penalizes ``B`` and is the default;
    its precision update is an exact graphical Lasso. ``whitened`` penalizes
    ``Omega_v^{1/2} B`` and updates the precision by a majorize-minimize
    step, because that penalty depends on the precision.

    Either way the penalized likelihood is not convex jointly. With large
    penalties the descent can move to fits where the precision is small in
    a signal direction and B is zero there, so penalties are best picked by
    an information criterion that sees the unpenalized likelihood.
    """

    lambda_A: float = 0.0
    lambda_B: float = 0.0
    lambda_C: float = 0.0
    rho_u: float = 0.0
    rho_v: float = 0.0
    b_structure: str = "low-rank"
    ctrl: SolverControl = field(default_factory=lambda: DEFAULT_CONTROL)
    accelerate: bool = True
    max_outer: int = 25
    max_alternation: int = 50
    update_precision: bool = True
    b_penalty: str = "plain"

    def __post_init__(self):
        for name in ("lambda_A", "lambda_B", "lambda_C", "rho_u", "rho_v"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidArgument(f"{name} must be a finite nonnegative number, got {v!r}")
        if self.b_structure not in ("low-rank", "sparse"):
            raise InvalidArgument(f"unknown b_structure {self.b_structure!r}")
        if self.b_penalty not in ("whitened", "plain"):
            raise InvalidArgument(f"unknown b_penalty {self.b_penalty!r}")
        if self.max_outer < 1 or self.max_alternation < 1:
            raise InvalidArgument("iteration caps must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["ctrl"] = asdict(self.ctrl)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidArgument(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "ctrl" in d and isinstance(d["ctrl"], dict):
            try:
                d["ctrl"] = SolverControl(**d["ctrl"])
            except TypeError as exc:
                raise InvalidArgument(f"bad solver control: {exc}") from None
        return cls(**d)


@dataclass
class FitResult:
    """Output of one estimator run.

    Block-1 fits fill ``A`` and ``Omega_u``; block-2 fits fill ``B``, ``C``
    and ``Omega_v``. ``initial`` holds the iteration-0 (two-step) estimates.
    """

    block: str
    estimates: dict
    objective_trace: list
    iterations: dict
    converged: bool
    initial: dict = field(default_factory=dict)
    config: EstimationConfig | None = None

    def __getattr__(self, name):
        est = self.__dict__.get("estimates", {})
        if name in est:
            return est[name]
        raise AttributeError(name)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "block": self.block,
            "estimates": {k: np.asarray(v).tolist() for k, v in self.estimates.items()},
            "initial": {k: np.asarray(v).tolist() for k, v in self.initial.items()},
            "objective_trace": [float(v) for v in self.objective_trace],
            "iterations": dict(self.iterations),
            "converged": bool(self.converged),
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        cfg = d.get("config")
        return cls(
            block=d["block"],
            estimates={k: np.asarray(v, dtype=float) for k, v in d["estimates"].items()},
            objective_trace=list(d["objective_trace"]),
            iterations=dict(d["iterations"]),
            converged=bool(d["converged"]),
            initial={k: np.asarray(v, dtype=float) for k, v in d.get("initial", {}).items()},
            config=None if cfg is None else EstimationConfig.from_dict(cfg),
        )


def combine_fits(fit1, fit2):
    """Merge a block-1 and a block-2 fit into a full :class:`ModelParams`."""
    return ModelParams(fit1.A, fit2.B, fit2.C, fit1.Omega_u, fit2.Omega_v,
                       "sparse" if fit2.config and fit2.config.b_structure == "sparse" else "low-rank")


# --------------------------------------------------------------------------
# data preparation


class Design(NamedTuple):
    x_design: np.ndarray
    x_response: np.ndarray
    z_design: np.ndarray | None
    z_response: np.ndarray | None
    joint_design: np.ndarray | None

    @property
    def T(self):
        return self.x_design.shape[0]


def build_design_response(X, Z=None):
    """Center the panels and split them into lagged designs and responses.

    Rows ``0..T-1`` form the designs, rows ``1..T`` the responses.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise InvalidArgument("need at least two time points")
    X = X - X.mean(axis=0)
    if Z is None:
        return Design(X[:-1], X[1:], None, None, None)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != X.shape[0]:
        raise InvalidArgument(f"X has {X.shape[0]} rows but Z has {Z.shape[0]}")
    Z = Z - Z.mean(axis=0)
    return Design(X[:-1], X[1:], Z[:-1], Z[1:], np.hstack([X[:-1], Z[:-1]]))


class _Moments(NamedTuple):
    gram: np.ndarray    # design'design / T
    cross: np.ndarray   # design'response / T
    resp: np.ndarray    # response'response / T


def _moments(design, response):
    T = design.shape[0]
    return _Moments(design.T @ design / T, design.T @ response / T, response.T @ response / T)


def _residual_cov(m, coef):
    """Residual covariance of ``response - design @ coef'`` from moments."""
    sc = coef @ m.cross
    R = m.resp - sc - sc.T + coef @ m.gram @ coef.T
    return 0.5 * (R + R.T)


def _l1_off(M):
    return float(np.abs(M).sum() - np.abs(np.diag(M)).sum())


def _logdet(Omega):
    sign, val = np.linalg.slogdet(Omega)
    if sign <= 0:
        raise InvalidArgument("precision matrix is not positive definite")
    return float(val)


def _gaussian_part(resid_cov, Omega):
    return float(np.sum(Omega * resid_cov)) - _logdet(Omega)


# --------------------------------------------------------------------------
# objectives


def _block1_objective(m, A, Omega, cfg):
    return (_gaussian_part(_residual_cov(m, A), Omega)
            + cfg.lambda_A * float(np.abs(A).sum()) + cfg.rho_u * _l1_off(Omega))


def _b_penalty(B, Omega, cfg):
    if cfg.b_structure == "sparse":
        return cfg.lambda_B * float(np.abs(B).sum())
    if not B.size or cfg.lambda_B == 0:
        return 0.0
    if cfg.b_penalty == "whitened":
        B = _sym_sqrt(Omega)[0] @ B
    return cfg.lambda_B * nuclear_norm(B)


def _block2_objective(m, B, C, Omega, cfg):
    coef = np.hstack([B, C])
    return (_gaussian_part(_residual_cov(m, coef), Omega) + _b_penalty(B, Omega, cfg)
            + cfg.lambda_C * float(np.abs(C).sum()) + cfg.rho_v * _l1_off(Omega))


def penalized_objective(params, X, Z=None, cfg=None, block=None):
    """Penalized negative log-likelihood of the requested block.

    ``params`` may be a :class:`ModelParams` or a :class:`FitResult`. The
    block defaults to ``block1`` when ``Z`` is omitted and ``block2``
    otherwise.
    """
    cfg = cfg or EstimationConfig()
    block = block or ("block1" if Z is None else "block2")
    d = build_design_response(X, Z)
    if block == "block1":
        Omega = np.asarray(params.Omega_u, float)
        _check_spd(Omega)
        return _block1_objective(_moments(d.x_design, d.x_response), np.asarray(params.A, float), Omega, cfg)
    if block != "block2":
        raise InvalidArgument(f"unknown block {block!r}")
    if Z is None:
        raise InvalidArgument("block2 objective needs the z panel")
    Omega = np.asarray(params.Omega_v, float)
    _check_spd(Omega)
    m = _moments(d.joint_design, d.z_response)
    return _block2_objective(m, np.asarray(params.B, float), np.asarray(params.C, float), Omega, cfg)


def _check_spd(Omega):
    if not np.allclose(Omega, Omega.T, atol=1e-10):
        raise InvalidArgument("precision matrix is not symmetric")
    try:
        np.linalg.cholesky(Omega)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgument("precision matrix is not positive definite") from exc


# --------------------------------------------------------------------------
# shared pieces


def _precision_step(resid_cov, rho, ctrl):
    """Graphical Lasso on a residual covariance, guarding against zero variances."""
    d = np.diag(resid_cov)
    floor = 1e-12 * max(float(d.max()), 1.0)
    if np.any(d <= floor):
        resid_cov = resid_cov + np.diag(np.where(d <= floor, floor, 0.0))
    return graphical_lasso(resid_cov, rho, ctrl)


def _try_precision_step(resid_cov, rho, ctrl):
    # a failed graphical Lasso counts as a rejected step; the old precision stays
    try:
        return _precision_step(resid_cov, rho, ctrl)
    except NumericalBreakdown:
        return None


def _damped_precision_step(objective, Omega, cand, f, halvings=12):
    """Move toward the graphical Lasso solution until the full objective drops.

    The graphical Lasso minimises the precision block exactly only when the
    transition penalty does not depend on the precision. When it does, the
    segment from the current precision to the glasso solution is searched
    by halving; every point on it is SPD. Returns ``(Omega, f)`` unchanged
    if no step decreases the objective.
    """
    if cand is None:
        return Omega, f
    step = 1.0
    for _ in range(halvings + 1):
        trial = cand if step == 1.0 else Omega + step * (cand - Omega)
        f_trial = objective(trial)
        if f_trial <= f:
            return trial, f_trial
        step *= 0.5
    return Omega, f


def _row_lasso(gram, cross, Omega, coef, lam, ctrl):
    coef = np.array(coef, dtype=float, order="C")
    lam = np.ascontiguousarray(np.broadcast_to(lam, coef.shape), dtype=float)
    sweeps, ok, _ = _kernels.row_cyclic_lasso(
        np.ascontiguousarray(gram), np.ascontiguousarray(cross), np.ascontiguousarray(Omega),
        coef, lam, ctrl.max_inner_iters, ctrl.max_inner_iters, ctrl.abs_tol)
    return coef, sweeps, ok


def _converged(f_old, f_new, change, ctrl):
    rel = abs(f_old - f_new) / max(abs(f_old), 1e-300)
    return rel < ctrl.rel_tol or change < ctrl.abs_tol


# --------------------------------------------------------------------------
# block 1


def estimate_block1(X, cfg, Z=None):
    """Fit ``(A, Omega_u)``; ``Z`` is accepted for symmetry and ignored."""
    if not isinstance(cfg, EstimationConfig):
        raise InvalidArgument("cfg must be an EstimationConfig")
    ctrl = cfg.ctrl
    d = build_design_response(X)
    m = _moments(d.x_design, d.x_response)
    p = m.gram.shape[0]
    I = np.eye(p)

    A, sweeps, ok = _row_lasso(m.gram, m.cross, I, np.zeros((p, p)), cfg.lambda_A, ctrl)
    inner_total = sweeps
    all_inner_ok = ok
    Omega = I
    f = _block1_objective(m, A, Omega, cfg)
    trace = [f]
    initial = {"A": A.copy(), "Omega_u": _precision_step(_residual_cov(m, A), cfg.rho_u, ctrl)}

    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        f_start, A_old, Om_old = f, A, Omega
        if cfg.update_precision:
            cand = _try_precision_step(_residual_cov(m, A), cfg.rho_u, ctrl)
            Omega, f = _damped_precision_step(
                lambda W: _block1_objective(m, A, W, cfg), Omega, cand, f)
        cand, sweeps, ok = _row_lasso(m.gram, m.cross, Omega, A, cfg.lambda_A, ctrl)
        inner_total += sweeps
        all_inner_ok &= ok
        f_cand = _block1_objective(m, cand, Omega, cfg)
        if f_cand <= f:
            A, f = cand, f_cand
        trace.append(f)
        change = max(np.abs(A - A_old).max(initial=0.0), np.abs(Omega - Om_old).max(initial=0.0))
        if _converged(f_start, f, change, ctrl):
            converged = True
            break
    # the recorded objective must match a fresh evaluation of the returned iterate
    trace[-1] = _block1_objective(m, A, Omega, cfg)
    return FitResult(
        block="block1",
        estimates={"A": A, "Omega_u": Omega},
        objective_trace=trace,
        iterations={"outer": outer, "inner": int(inner_total), "inner_converged": bool(all_inner_ok)},
        converged=converged,
        initial=initial,
        config=cfg,
    )


# --------------------------------------------------------------------------
# block 2


def _sym_sqrt(Omega):
    w, V = np.linalg.eigh(Omega)
    if w[0] <= 0:
        raise NumericalBreakdown("precision matrix lost positive definiteness")
    r = np.sqrt(w)
    return (V * r) @ V.T, (V / r) @ V.T


class _Block2Moments(NamedTuple):
    joint: _Moments
    gxx: np.ndarray
    gzz: np.ndarray
    gzx: np.ndarray
    sx: np.ndarray   # x_design' z_response / T  (p1 x p2)
    sz: np.ndarray   # z_design' z_response / T  (p2 x p2)


def _penalty_tangent(B, Omega, cfg):
    """Gradient in Omega of the whitened nuclear penalty at the current point.

    ``||Omega^{1/2} B||_*`` equals ``tr((B' Omega B)^{1/2})``, a concave
    function of Omega, so its tangent plane majorizes it. With
    ``Omega^{1/2} B = U diag(s) V'`` the gradient is
    ``Omega^{-1/2} U diag(s) U' Omega^{-1/2} / 2``. Adding ``lambda_B`` times
    this matrix to the residual covariance turns the precision update into
    a graphical Lasso that cannot increase the objective.
    """
    if cfg.b_structure == "sparse" or cfg.b_penalty != "whitened" or cfg.lambda_B == 0:
        return 0.0
    root, inv_root = _sym_sqrt(Omega)
    U, s, _ = np.linalg.svd(root @ B, full_matrices=False)
    half = inv_root @ (U * np.sqrt(s))
    return 0.5 * cfg.lambda_B * (half @ half.T)


def _block2_moments(d):
    j = _moments(d.joint_design, d.z_response)
    p1 = d.x_design.shape[1]
    g = j.gram
    return _Block2Moments(j, g[:p1, :p1], g[p1:, p1:], g[p1:, :p1], j.cross[:p1], j.cross[p1:])


def _b_update(mm, B, C, Omega, cfg):
    """Minimise over B with C and Omega fixed (nuclear penalty)."""
    ctrl = cfg.ctrl
    cross_t = mm.sx.T - C @ mm.gzx                    # (z_resp - z_design C')' x_design / T
    r = mm.joint.resp - C @ mm.sz - mm.sz.T @ C.T + C @ mm.gzz @ C.T
    if cfg.b_penalty == "whitened":
        root, inv_root = _sym_sqrt(Omega)
        const = float(np.trace(root @ r @ root))
        Bt, info = fista_nuclear_gram(mm.gxx, root @ cross_t, cfg.lambda_B, cfg.accelerate, ctrl,
                                      warm_start=root @ B, target_gram_trace=const)
        return inv_root @ Bt, info["iterations"]
    const = float(np.sum(Omega * r))
    B_new, info = fista_nuclear_gram(mm.gxx, cross_t, cfg.lambda_B, cfg.accelerate, ctrl,
                                     weight=Omega, warm_start=B, target_gram_trace=const)
    return B_new, info["iterations"]


def _c_update(mm, B, C, Omega, cfg):
    cross = mm.sz - mm.gzx @ B.T                       # z_design' (z_resp - x_design B') / T
    return _row_lasso(mm.gzz, cross, Omega, C, cfg.lambda_C, cfg.ctrl)


def _joint_block(mm, B, C, Omega, cfg):
    """Minimise the block-2 objective over (B, C) with Omega fixed.

    Returns ``(B, C, inner_iterations, ok)``.
    """
    p1 = B.shape[1]
    m = mm.joint
    if cfg.b_structure == "sparse":
        lam = np.empty((C.shape[0], p1 + C.shape[1]))
        lam[:, :p1] = cfg.lambda_B
        lam[:, p1:] = cfg.lambda_C
        coef, sweeps, ok = _row_lasso(m.gram, m.cross, Omega, np.hstack([B, C]), lam, cfg.ctrl)
        return coef[:, :p1], coef[:, p1:], sweeps, ok
    f = _block2_objective(m, B, C, Omega, cfg)
    total = 0
    ok = False
    for _ in range(cfg.max_alternation):
        f_old, B_old, C_old = f, B, C
        cand, its = _b_update(mm, B, C, Omega, cfg)
        total += its
        f_cand = _block2_objective(m, cand, C, Omega, cfg)
        if f_cand <= f:
            B, f = cand, f_cand
        C, sweeps, _ = _c_update(mm, B, C, Omega, cfg)
        total += sweeps
        f = _block2_objective(m, B, C, Omega, cfg)
        change = max(np.abs(B - B_old).max(initial=0.0), np.abs(C - C_old).max(initial=0.0))
        if _converged(f_old, f, change, cfg.ctrl):
            ok = True
            break
    return B, C, total, ok


def estimate_block2(X, Z, cfg):
    """Fit ``(B, C, Omega_v)`` for z_t regressed on (x_{t-1}, z_{t-1})."""
    if not isinstance(cfg, EstimationConfig):
        raise InvalidArgument("cfg must be an EstimationConfig")
    if Z is None:
        raise InvalidArgument("block 2 needs the z panel")
    ctrl = cfg.ctrl
    d = build_design_response(X, Z)
    mm = _block2_moments(d)
    m = mm.joint
    p1 = d.x_design.shape[1]
    p2 = d.z_design.shape[1]
    I = np.eye(p2)

    B, C, inner_total, inner_ok = _joint_block(mm, np.zeros((p2, p1)), np.zeros((p2, p2)), I, cfg)
    Omega = I
    f = _block2_objective(m, B, C, Omega, cfg)
    trace = [f]
    initial = {"B": B.copy(), "C": C.copy(),
               "Omega_v": _precision_step(_residual_cov(m, np.hstack([B, C])), cfg.rho_v, ctrl)}

    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        f_start, B_old, C_old, Om_old = f, B, C, Omega
        if cfg.update_precision:
            surrogate = _residual_cov(m, np.hstack([B, C])) + _penalty_tangent(B, Omega, cfg)
            cand = _try_precision_step(surrogate, cfg.rho_v, ctrl)
            Omega, f = _damped_precision_step(
                lambda W: _block2_objective(m, B, C, W, cfg), Omega, cand, f)
        Bc, Cc, its, ok = _joint_block(mm, B, C, Omega, cfg)
        inner_total += its
        inner_ok &= ok
        f_cand = _block2_objective(m, Bc, Cc, Omega, cfg)
        if f_cand <= f:
            B, C, f = Bc, Cc, f_cand
        trace.append(f)
        change = max(np.abs(B - B_old).max(initial=0.0), np.abs(C - C_old).max(initial=0.0),
                     np.abs(Omega - Om_old).max(initial=0.0))
        if _converged(f_start, f, change, ctrl):
            converged = True
            break
    trace[-1] = _block2_objective(m, B, C, Omega, cfg)
    return FitResult(
        block="block2",
        estimates={"B": B, "C": C, "Omega_v": Omega},
        objective_trace=trace,
        iterations={"outer": outer, "inner": int(inner_total), "inner_converged": bool(inner_ok)},
        converged=converged,
        initial=initial,
        config=cfg,
    )


# --------------------------------------------------------------------------
# small utilities


def rank_of(M, tol=1e-8):
    """Number of singular values above ``tol`` times the largest one."""
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def forecast_one_step(params, x_T, z_T=None):
    """One-step-ahead predictions ``(A x_T, B x_T + C z_T)``."""
    A = np.atleast_2d(np.asarray(params.A, float))
    x_T = np.asarray(x_T, dtype=float).ravel()
    if A.shape[1] != x_T.size:
        raise InvalidArgument(f"A has {A.shape[1]} columns but x_T has {x_T.size} entries")
    x_hat = A @ x_T
    if z_T is None:
        return x_hat, None
    B = np.atleast_2d(np.asarray(params.B, float))
    C = np.atleast_2d(np.asarray(params.C, float))
    z_T = np.asarray(z_T, dtype=float).ravel()
    if B.shape[1] != x_T.size or C.shape[1] != z_T.size or B.shape[0] != C.shape[0]:
        raise InvalidArgument("B, C and the state vectors are not conformable")
    return x_hat, B @ x_T + C @ z_T
