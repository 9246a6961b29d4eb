"""Compiled inner loops.

All kernels work on Gram-form quantities (``design' design / T`` and
``design' response / T``) so their cost does not grow with the series length.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def soft(x, tau):
    if x > tau:
        return x - tau
    if x < -tau:
        return x + tau
    return 0.0


@njit(cache=True)
def cd_lasso_gram(G, c, beta, lam, max_iter, tol):
    """Minimise ``b'Gb - 2c'b + sum(lam * |b|)`` by cyclic coordinate descent.

    ``beta`` is updated in place. Returns ``(sweeps, converged)``.
    """
    p = c.shape[0]
    Gb = G @ beta
    for it in range(max_iter):
        max_delta = 0.0
        for k in range(p):
            gkk = G[k, k]
            old = beta[k]
            if gkk <= 0.0:
                new = 0.0
            else:
                z = c[k] - Gb[k] + gkk * old
                new = soft(z, 0.5 * lam[k]) / gkk
            d = new - old
            if d != 0.0:
                for i in range(p):
                    Gb[i] += d * G[i, k]
                beta[k] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return it + 1, True
    return max_iter, False


@njit(cache=True)
def row_cyclic_lasso(G, S, Omega, Coef, Lam, max_sweeps, max_inner, tol):
    """Precision-weighted multivariate Lasso, one response row at a time.

    Minimises ``tr[Omega R'R]/T + sum(Lam * |Coef|)`` with
    ``R = response - design @ Coef.T``. For row ``j`` the other rows enter
    through the offset ``r_j = sum_{i != j} omega_ij R_i / omega_jj``.

    Shapes: ``G`` q x q, ``S`` q x m, ``Omega`` m x m, ``Coef``/``Lam`` m x q.
    ``Coef`` is updated in place. Returns ``(sweeps, converged, inner_ok)``.
    """
    q = G.shape[0]
    m = S.shape[1]
    # column i of M is design' R_i / T
    M = S - G @ Coef.T
    beta = np.empty(q)
    lam = np.empty(q)
    c = np.empty(q)
    inner_ok = True
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(m):
            w = Omega[j, j]
            for k in range(q):
                acc = 0.0
                for i in range(m):
                    if i != j:
                        acc += M[k, i] * Omega[i, j]
                c[k] = S[k, j] + acc / w
                beta[k] = Coef[j, k]
                lam[k] = Lam[j, k] / w
            _, ok = cd_lasso_gram(G, c, beta, lam, max_inner, tol)
            if not ok:
                inner_ok = False
            for k in range(q):
                d = abs(beta[k] - Coef[j, k])
                if d > max_change:
                    max_change = d
                Coef[j, k] = beta[k]
            for k in range(q):
                acc = 0.0
                for l in range(q):
                    acc += G[k, l] * beta[l]
                M[k, j] = S[k, j] - acc
        if max_change < tol:
            return sweep + 1, True, inner_ok
    return max_sweeps, False, inner_ok


@njit(cache=True)
def glasso_bcd(S, rho, W, Beta, max_iter, tol, max_inner, inner_tol):
    """Block coordinate descent on the covariance for the graphical Lasso.

    Penalty is on off-diagonal entries only, so ``W_ii = S_ii`` throughout.
    ``W`` (covariance iterate) and ``Beta`` (column regressions, p x p with
    unused diagonal) are updated in place. Returns ``(Theta, sweeps, converged)``.
    """
    p = S.shape[0]
    n = p - 1
    W11 = np.empty((n, n))
    s12 = np.empty(n)
    beta = np.empty(n)
    lam = np.full(n, 2.0 * rho)
    idx = np.empty(n, dtype=np.int64)
    scale = 0.0
    for i in range(p):
        for j in range(p):
            if i != j:
                scale += abs(S[i, j])
    scale = max(scale / max(p * (p - 1), 1), 1e-300)
    converged = False
    sweeps = max_iter
    for it in range(max_iter):
        max_change = 0.0
        for j in range(p):
            t = 0
            for i in range(p):
                if i != j:
                    idx[t] = i
                    t += 1
            for a in range(n):
                ia = idx[a]
                s12[a] = S[ia, j]
                beta[a] = Beta[ia, j]
                for b in range(n):
                    W11[a, b] = W[ia, idx[b]]
            cd_lasso_gram(W11, s12, beta, lam, max_inner, inner_tol)
            for a in range(n):
                ia = idx[a]
                Beta[ia, j] = beta[a]
                acc = 0.0
                for b in range(n):
                    acc += W11[a, b] * beta[b]
                d = abs(acc - W[ia, j])
                if d > max_change:
                    max_change = d
                W[ia, j] = acc
                W[j, ia] = acc
        if max_change < tol * scale:
            converged = True
            sweeps = it + 1
            break
    Theta = np.zeros((p, p))
    for j in range(p):
        t = 0
        for i in range(p):
            if i != j:
                idx[t] = i
                t += 1
        acc = 0.0
        for a in range(n):
            acc += W[idx[a], j] * Beta[idx[a], j]
        denom = W[j, j] - acc
        Theta[j, j] = 1.0 / denom
        for a in range(n):
            Theta[idx[a], j] = -Beta[idx[a], j] * Theta[j, j]
    return Theta, sweeps, converged


@njit(cache=True)
def var1_recursion(A, B, C, U, V, x0, z0):
    """Iterate x_t = A x_{t-1} + u_t, z_t = B x_{t-1} + C z_{t-1} + v_t."""
    n = U.shape[0]
    p1 = A.shape[0]
    p2 = C.shape[0]
    X = np.empty((n, p1))
    Z = np.empty((n, p2))
    x = x0.copy()
    z = z0.copy()
    for t in range(n):
        xn = A @ x + U[t]
        zn = B @ x + C @ z + V[t]
        X[t] = xn
        Z[t] = zn
        x = xn
        z = zn
    return X, Z
