"""Proximal operators and penalized-regression kernels.

Everything here is a pure function of its arguments. The compiled loops live
in :mod:`blockvar._kernels`; this module validates inputs and exposes the
public contracts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceFailure, InvalidArgument, NumericalBreakdown


@dataclass(frozen=True)
class SolverControl:
    """Iteration caps and stopping tolerances.

    A loop stops when the relative objective change drops below ``rel_tol``
    or the largest parameter change drops below ``abs_tol``.
    """

    max_inner_iters: int = 500
    max_outer_iters: int = 50
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    step_size_rule: str = "fixed"

    def __post_init__(self):
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise InvalidArgument("iteration caps must be >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidArgument("tolerances must be positive")
        if self.step_size_rule not in ("fixed", "backtracking"):
            raise InvalidArgument(f"unknown step_size_rule {self.step_size_rule!r}")


DEFAULT_CONTROL = SolverControl()


@dataclass(frozen=True)
class PenaltySpec:
    kind: str
    weight: float

    def __post_init__(self):
        if self.kind not in ("elementwise-l1", "nuclear"):
            raise InvalidArgument(f"unknown penalty kind {self.kind!r}")
        if not self.weight >= 0:
            raise InvalidArgument("penalty weight must be >= 0")

    def value(self, M):
        M = np.asarray(M, dtype=float)
        if self.kind == "nuclear":
            return self.weight * nuclear_norm(M)
        return self.weight * np.abs(M).sum()


def soft_threshold(x, tau):
    """``sign(x) * max(|x| - tau, 0)``; works elementwise on arrays."""
    if np.any(np.asarray(tau) < 0):
        raise InvalidArgument("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def nuclear_norm(M):
    return float(np.linalg.svd(M, compute_uv=False).sum())


def svt(M, tau, return_singular_values=False):
    """Singular value thresholding: shrink every singular value by ``tau``."""
    if tau < 0:
        raise InvalidArgument("threshold must be nonnegative")
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidArgument("matrix has non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"SVD failed: {exc}") from exc
    s_new = np.maximum(s - tau, 0.0)
    keep = s_new > 0
    out = (U[:, keep] * s_new[keep]) @ Vt[keep]
    if return_singular_values:
        return out, s_new
    return out


def _check_ctrl(ctrl):
    return DEFAULT_CONTROL if ctrl is None else ctrl


def weighted_lasso_row_update(design, response_col, offset_residual, weight, lam,
                              warm_start=None, ctrl=None):
    """Solve one row of the precision-weighted Lasso.

    Minimises ``(weight/T) * ||response + offset - design @ beta||^2 + lam * ||beta||_1``
    by cyclic coordinate descent in ascending index order. ``lam`` may be a
    scalar or a per-coordinate vector.

    Raises
    ------
    ConvergenceFailure
        If the sweep cap is hit; ``last_iterate`` holds the coefficients.
    """
    ctrl = _check_ctrl(ctrl)
    X = np.asarray(design, dtype=float)
    T, p = X.shape
    y = np.asarray(response_col, dtype=float).ravel()
    r = np.zeros(T) if offset_residual is None else np.asarray(offset_residual, dtype=float).ravel()
    if y.shape[0] != T or r.shape[0] != T:
        raise InvalidArgument("response and offset must have one entry per design row")
    if not weight > 0:
        raise InvalidArgument("row weight (diagonal precision entry) must be positive")
    lam_vec = np.broadcast_to(np.asarray(lam, dtype=float), (p,)).copy()
    if np.any(lam_vec < 0):
        raise InvalidArgument("penalty must be nonnegative")
    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    G = X.T @ X / T
    c = X.T @ (y + r) / T
    sweeps, ok = _kernels.cd_lasso_gram(G, c, beta, lam_vec / weight,
                                        ctrl.max_inner_iters, ctrl.abs_tol)
    if not ok:
        raise ConvergenceFailure("coordinate descent hit the sweep cap",
                                 last_iterate=beta, iterations=sweeps)
    return beta


def lasso_kkt_violation(design, response_col, offset_residual, weight, lam, beta):
    """Largest violation of the subgradient optimality conditions."""
    X = np.asarray(design, dtype=float)
    T = X.shape[0]
    resid = np.asarray(response_col, float) + np.asarray(offset_residual, float) - X @ beta
    grad = 2.0 * weight / T * (X.T @ resid)
    lam = np.broadcast_to(np.asarray(lam, float), beta.shape)
    nz = beta != 0
    viol = np.zeros_like(beta)
    viol[nz] = np.abs(grad[nz] - lam[nz] * np.sign(beta[nz]))
    viol[~nz] = np.maximum(np.abs(grad[~nz]) - lam[~nz], 0.0)
    return float(viol.max()) if viol.size else 0.0


def multivariate_weighted_lasso(gram, cross, omega, coef, lam, ctrl=None):
    """Row-cyclic solver for ``tr[Omega R'R]/T + sum(lam * |coef|)``.

    ``gram`` is ``design'design/T`` and ``cross`` is ``design'response/T``.
    Returns ``(coef, sweeps, converged)``; ``coef`` is a new array.
    """
    ctrl = _check_ctrl(ctrl)
    coef = np.array(coef, dtype=float, order="C")
    lam = np.ascontiguousarray(np.broadcast_to(np.asarray(lam, float), coef.shape))
    omega = np.ascontiguousarray(omega, dtype=float)
    if np.any(np.diag(omega) <= 0):
        raise InvalidArgument("precision diagonal must be positive")
    sweeps, ok, _ = _kernels.row_cyclic_lasso(
        np.ascontiguousarray(gram, dtype=float), np.ascontiguousarray(cross, dtype=float),
        omega, coef, lam, ctrl.max_inner_iters, ctrl.max_inner_iters, ctrl.abs_tol)
    return coef, sweeps, ok


def glasso_objective(S, Omega, rho):
    """``-log det Omega + tr(S Omega) + rho * sum_{i != j} |Omega_ij|``."""
    sign, logdet = np.linalg.slogdet(Omega)
    if sign <= 0:
        return np.inf
    off = np.abs(Omega).sum() - np.abs(np.diag(Omega)).sum()
    return float(-logdet + np.sum(S * Omega) + rho * off)


def graphical_lasso(S, rho, ctrl=None):
    """Sparse precision estimate maximising ``log det W - tr(S W) - rho ||W||_{1,off}``.

    Solved by block coordinate descent on the covariance (one Lasso per column).
    """
    ctrl = _check_ctrl(ctrl)
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidArgument("S must be square")
    if not np.allclose(S, S.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise InvalidArgument("S must be symmetric")
    if rho < 0:
        raise InvalidArgument("rho must be nonnegative")
    d = np.diag(S)
    if np.any(d <= 0):
        raise InvalidArgument("S must have a strictly positive diagonal")
    p = S.shape[0]
    S = 0.5 * (S + S.T)
    if p == 1:
        return np.array([[1.0 / S[0, 0]]])
    W = S.copy()
    Beta = np.zeros((p, p))
    tol = min(ctrl.abs_tol, 1e-10)
    Theta, sweeps, ok = _kernels.glasso_bcd(S, float(rho), W, Beta, 10 * ctrl.max_outer_iters,
                                            tol, ctrl.max_inner_iters, 1e-12)
    Theta = 0.5 * (Theta + Theta.T)
    if not np.all(np.isfinite(Theta)):
        raise NumericalBreakdown("graphical lasso produced non-finite entries")
    try:
        np.linalg.cholesky(Theta)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown("graphical lasso lost positive definiteness") from exc
    return Theta


def _lipschitz(gram, weight):
    lg = np.linalg.eigvalsh(gram)[-1]
    lw = 1.0 if weight is None else np.linalg.eigvalsh(weight)[-1]
    return 2.0 * max(lg, 0.0) * lw


def nuclear_objective(gram, cross_t, target_gram_trace, weight, lam, B, nuc=None):
    """Objective of :func:`fista_nuclear_gram` at ``B`` (constant term included)."""
    Wm = np.eye(B.shape[0]) if weight is None else weight
    quad = np.sum((Wm @ B @ gram) * B)
    lin = np.sum((Wm @ cross_t) * B)
    if nuc is None:
        nuc = nuclear_norm(B)
    return float(target_gram_trace - 2.0 * lin + quad + lam * nuc)


def fista_nuclear_gram(gram, cross_t, lam, accelerate=True, ctrl=None, weight=None,
                       warm_start=None, step=None, target_gram_trace=0.0):
    """Proximal gradient for nuclear-norm regression in Gram form.

    Minimises ``tr[W (Y - X B')'(Y - X B')]/T + lam ||B||_*`` where
    ``gram = X'X/T``, ``cross_t = Y'X/T`` (rows of B x cols of X) and ``W`` is
    an optional positive-definite row weight (identity when omitted).

    Returns ``(B, info)``; ``info`` has ``objective`` (history), ``iterations``
    and ``converged``. The returned iterate is the best one seen, so the
    result never has a larger objective than the warm start.
    """
    ctrl = _check_ctrl(ctrl)
    gram = np.asarray(gram, dtype=float)
    cross_t = np.asarray(cross_t, dtype=float)
    if lam < 0:
        raise InvalidArgument("lambda must be nonnegative")
    m, q = cross_t.shape
    if gram.shape != (q, q):
        raise InvalidArgument("design Gram and cross-product are not conformable")
    Wm = np.eye(m) if weight is None else np.asarray(weight, dtype=float)
    L = _lipschitz(gram, weight)
    if L <= 0:
        B0 = np.zeros((m, q))
        return B0, {"objective": [nuclear_objective(gram, cross_t, target_gram_trace, weight, lam, B0)],
                    "iterations": 0, "converged": True}
    if step is None:
        step = 1.0 / L
    elif ctrl.step_size_rule == "fixed" and step > 1.0 / L * (1 + 1e-12):
        raise InvalidArgument(f"step size {step:g} exceeds 1/L = {1.0 / L:g}")

    WC = Wm @ cross_t

    def grad(B):
        return 2.0 * (Wm @ B @ gram - WC)

    def obj(B, nuc=None):
        return nuclear_objective(gram, cross_t, target_gram_trace, weight, lam, B, nuc)

    B = np.zeros((m, q)) if warm_start is None else np.array(warm_start, dtype=float)
    f = obj(B)
    best, best_f = B, f
    history = [f]
    Y = B
    t = 1
    converged = False
    backtrack = ctrl.step_size_rule == "backtracking"
    it = 0
    for it in range(1, ctrl.max_inner_iters + 1):
        point = Y if accelerate else B
        g = grad(point)
        while True:
            B_new, s_new = svt(point - step * g, step * lam, return_singular_values=True)
            f_new = obj(B_new, s_new.sum())
            if not backtrack:
                break
            # sufficient decrease for the smooth part
            diff = B_new - point
            smooth_new = f_new - lam * s_new.sum()
            smooth_pt = obj(point) - lam * nuclear_norm(point)
            if smooth_new <= smooth_pt + np.sum(g * diff) + np.sum(diff * diff) / (2 * step) + 1e-12:
                break
            step *= 0.5
        history.append(f_new)
        change = np.max(np.abs(B_new - B)) if B.size else 0.0
        if f_new < best_f:
            best, best_f = B_new, f_new
        if accelerate:
            # momentum weight (t-1)/(t+2)
            Y = B_new + (t - 1.0) / (t + 2.0) * (B_new - B)
            t += 1
        B = B_new
        rel = abs(history[-2] - f_new) / max(abs(history[-2]), 1e-300)
        if change < ctrl.abs_tol or rel < ctrl.rel_tol:
            converged = True
            break
    return best, {"objective": history, "iterations": it, "converged": converged}


def fista_nuclear(design, target, lam, accelerate=True, ctrl=None, weight=None,
                  warm_start=None, step=None, return_info=False):
    """Minimise ``(1/T)||target - design @ B'||_F^2 + lam ||B||_*``.

    ``accelerate`` switches on the momentum variant. With ``weight`` given the
    loss becomes ``tr[W R'R]/T``.
    """
    X = np.asarray(design, dtype=float)
    Y = np.asarray(target, dtype=float)
    if X.shape[0] != Y.shape[0]:
        raise InvalidArgument("design and target must have the same number of rows")
    T = X.shape[0]
    gram = X.T @ X / T
    cross_t = Y.T @ X / T
    Wm = np.eye(Y.shape[1]) if weight is None else np.asarray(weight, float)
    const = float(np.sum(Wm * (Y.T @ Y / T)))
    B, info = fista_nuclear_gram(gram, cross_t, lam, accelerate=accelerate, ctrl=ctrl,
                                 weight=weight, warm_start=warm_start, step=step,
                                 target_gram_trace=const)
    if not info["converged"]:
        ctrl = _check_ctrl(ctrl)
        raise ConvergenceFailure("proximal gradient hit the iteration cap",
                                 last_iterate=B, iterations=info["iterations"])
    return (B, info) if return_info else B
