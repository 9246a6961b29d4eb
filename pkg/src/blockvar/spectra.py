"""Model-implied spectral density of the joint process and its extreme eigenvalues.

Frequencies are sampled on the periodic grid ``theta_k = -pi + 2 pi k / n``,
``k = 0..n-1``. It is uniform on the unit circle and contains both ``0`` and
``+-pi`` for even ``n``. Grid extremes stand in for the essential supremum
and infimum, so every reported extreme is an approximation that tightens as
``n`` grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidArgument
from .simulate import assemble_G, spectral_radius

MAX_RADIUS = 0.99
DEFAULT_GRID = 512


def frequency_grid(n):
    if n < 8:
        raise InvalidArgument("grid_size must be at least 8")
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


@dataclass
class SpectralSummary:
    grid: np.ndarray
    values: np.ndarray          # (n, p, p) complex Hermitian
    m_lower: float              # min over grid of the smallest eigenvalue
    M_upper: float              # max over grid of the largest eigenvalue
    mu_min_G: float
    mu_max_G: float

    def eigen_extremes(self):
        """Per-frequency smallest and largest eigenvalues, shape ``(n, 2)``."""
        ev = np.linalg.eigvalsh(self.values)
        return np.column_stack([ev[:, 0], ev[:, -1]])

    def to_dict(self, include_values=False):
        ext = self.eigen_extremes()
        out = {
            "grid": self.grid.tolist(),
            "lambda_min": ext[:, 0].tolist(),
            "lambda_max": ext[:, 1].tolist(),
            "m_lower": self.m_lower,
            "M_upper": self.M_upper,
            "mu_min_G": self.mu_min_G,
            "mu_max_G": self.mu_max_G,
        }
        if include_values:
            out["values_real"] = self.values.real.tolist()
            out["values_imag"] = self.values.imag.tolist()
        return out


def _check_stable(*mats):
    rad = max(spectral_radius(M) for M in mats)
    if rad >= MAX_RADIUS:
        raise InvalidArgument(f"spectral radius {rad:.4f} too close to or beyond the unit circle")
    return rad


def _char_poly(M, grid):
    """Stack of ``I - M e^{i theta}`` over the grid."""
    p = M.shape[0]
    return np.eye(p)[None] - M[None] * np.exp(1j * grid)[:, None, None]


def _sandwich(inv, Sigma):
    return inv @ Sigma @ np.conj(np.swapaxes(inv, -1, -2))


def _density_from_G(G, Sigma, grid):
    inv = np.linalg.inv(_char_poly(G, grid))
    return _sandwich(inv, Sigma) / (2.0 * np.pi)


def _density_by_blocks(params, grid):
    """Assemble f_W from the x-block spectrum and the cross-block filters.

    ``f_W = H1^{-1} (H2 [1 (x) f_X] H2^* + blkdiag(0, Sigma_v / 2pi)) H1^{-*}``
    with ``H1 = blkdiag(I, I - C e^{i theta})`` and ``H2 = blkdiag(I, B e^{i theta})``.
    """
    A, B, C = params.A, params.B, params.C
    p1, p2 = A.shape[0], C.shape[0]
    n = grid.size
    z = np.exp(1j * grid)
    fx = _sandwich(np.linalg.inv(_char_poly(A, grid)), params.Sigma_u) / (2.0 * np.pi)
    ones = np.kron(np.ones((2, 2)), np.eye(p1))
    inner = np.einsum("ij,njk->nik", ones[:, :p1], fx)            # rows of [f; f]
    inner = np.concatenate([inner, inner], axis=2)                  # 1 (x) f_X
    H2 = np.zeros((n, p1 + p2, 2 * p1), dtype=complex)
    H2[:, :p1, :p1] = np.eye(p1)
    H2[:, p1:, p1:] = B[None] * z[:, None, None]
    mid = H2 @ inner @ np.conj(np.swapaxes(H2, 1, 2))
    mid[:, p1:, p1:] += params.Sigma_v / (2.0 * np.pi)
    H1inv = np.zeros((n, p1 + p2, p1 + p2), dtype=complex)
    H1inv[:, :p1, :p1] = np.eye(p1)
    H1inv[:, p1:, p1:] = np.linalg.inv(_char_poly(C, grid))
    return _sandwich(H1inv, mid)


def mu_extremes(M, grid_size=DEFAULT_GRID):
    """Extreme eigenvalues of ``A(theta)^* A(theta)``, ``A(theta) = I - M e^{i theta}``.

    Returns ``(mu_min, mu_max)`` over the frequency grid.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise InvalidArgument("mu_extremes needs a square matrix")
    _check_stable(M)
    sv = np.linalg.svd(_char_poly(M, frequency_grid(grid_size)), compute_uv=False)
    return float((sv[:, -1] ** 2).min()), float((sv[:, 0] ** 2).max())


def spectral_density_W(params, grid_size=DEFAULT_GRID, check=True, tol=1e-8):
    """Spectral density of ``W_t = (x_t, z_t)`` on the frequency grid.

    Computed from the joint characteristic polynomial. With ``check`` the
    block decomposition is evaluated as well and the two must agree to
    ``tol`` (relative to the largest entry) at every frequency.
    """
    _check_stable(params.A, params.C)
    grid = frequency_grid(grid_size)
    G = assemble_G(params.A, params.B, params.C)
    Sigma = block_diag(params.Sigma_u, params.Sigma_v)
    f = _density_from_G(G, Sigma, grid)
    if check:
        alt = _density_by_blocks(params, grid)
        scale = max(np.abs(f).max(), 1e-300)
        gap = np.abs(f - alt).max() / scale
        if gap > tol:
            raise ArithmeticError(f"spectral density formulas disagree by {gap:.3e}")
    f = 0.5 * (f + np.conj(np.swapaxes(f, 1, 2)))
    ev = np.linalg.eigvalsh(f)
    sv = np.linalg.svd(_char_poly(G, grid), compute_uv=False)
    return SpectralSummary(
        grid=grid,
        values=f,
        m_lower=float(ev[:, 0].min()),
        M_upper=float(ev[:, -1].max()),
        mu_min_G=float((sv[:, -1] ** 2).min()),
        mu_max_G=float((sv[:, 0] ** 2).max()),
    )


def block_density_gap(params, grid_size=DEFAULT_GRID):
    """Largest entrywise gap between the two spectral density formulas."""
    grid = frequency_grid(grid_size)
    G = assemble_G(params.A, params.B, params.C)
    f = _density_from_G(G, block_diag(params.Sigma_u, params.Sigma_v), grid)
    return float(np.abs(f - _density_by_blocks(params, grid)).max())


def integrated_density(summary):
    """Periodic trapezoid integral of f_W over ``[-pi, pi]``; equals ``Gamma_W(0)``."""
    step = 2.0 * np.pi / summary.grid.size
    return (summary.values.sum(axis=0) * step).real


def spectrum_bounds_check(params, grid_size=DEFAULT_GRID):
    """Evaluate the four extreme-value inequalities on the grid.

    Each entry of the returned ``margins`` is ``(greater side) - (smaller side)``
    so a nonnegative margin means the inequality holds:

    * ``density_lower``: ``m(f_W) >= min eig(Sigma_u, Sigma_v) / (2 pi mu_max)``
    * ``density_upper``: ``M(f_W) <= max eig(Sigma_u, Sigma_v) / (2 pi mu_min)``
    * ``mu_max_norms``: ``mu_max <= (1 + (||G||_inf + ||G||_1) / 2)^2``
    * ``mu_min_radius``: ``mu_min >= (1 - max(rho(A), rho(C)))^2``

    The last one only holds for normal ``G``; for non-normal transition
    matrices ``mu_min`` can fall well below ``(1 - rho)^2``.
    """
    s = spectral_density_W(params, grid_size)
    G = assemble_G(params.A, params.B, params.C)
    eu = np.linalg.eigvalsh(params.Sigma_u)
    ev = np.linalg.eigvalsh(params.Sigma_v)
    lam_lo = min(eu[0], ev[0])
    lam_hi = max(eu[-1], ev[-1])
    norms = np.abs(G).sum(axis=1).max() + np.abs(G).sum(axis=0).max()
    rho = max(spectral_radius(params.A), spectral_radius(params.C))
    sides = {
        "density_lower": (s.m_lower, lam_lo / (2 * np.pi * s.mu_max_G)),
        "density_upper": (lam_hi / (2 * np.pi * s.mu_min_G), s.M_upper),
        "mu_max_norms": ((1 + norms / 2) ** 2, s.mu_max_G),
        "mu_min_radius": (s.mu_min_G, (1 - rho) ** 2),
    }
    margins = {k: float(a - b) for k, (a, b) in sides.items()}
    return {
        "margins": margins,
        "sides": {k: [float(a), float(b)] for k, (a, b) in sides.items()},
        "holds": {k: m >= -1e-8 for k, m in margins.items()},
        "summary": s,
    }
