"""Parameter generators and trajectory simulation for the two-block VAR(1).

The joint system is

    x_t = A x_{t-1} + u_t
    z_t = B x_{t-1} + C z_{t-1} + v_t

with ``u_t`` and ``v_t`` independent, covariances ``inv(Omega_u)`` and
``inv(Omega_v)``. All randomness comes from :class:`numpy.random.Generator`
(PCG64); :func:`replication_rng` derives independent streams from a master
seed and a replication index.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from . import _kernels
from .errors import DegenerateInput, InvalidArgument

MAX_REDRAWS = 100
DEFAULT_BURN_IN = 500


def replication_rng(seed, index=0):
    """Independent generator for replication ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# --------------------------------------------------------------------------
# parameter containers


@dataclass
class ModelParams:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Omega_u: np.ndarray
    Omega_v: np.ndarray
    b_structure: str = "low-rank"

    def __post_init__(self):
        for name in ("A", "B", "C", "Omega_u", "Omega_v"):
            setattr(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        p1, p2 = self.A.shape[0], self.C.shape[0]
        if self.A.shape != (p1, p1) or self.C.shape != (p2, p2):
            raise InvalidArgument("A and C must be square")
        if self.B.shape != (p2, p1):
            raise InvalidArgument(f"B must be {p2}x{p1}, got {self.B.shape}")
        if self.Omega_u.shape != (p1, p1) or self.Omega_v.shape != (p2, p2):
            raise InvalidArgument("precision matrices do not match block sizes")
        if self.b_structure not in ("low-rank", "sparse", "zero"):
            raise InvalidArgument(f"unknown b_structure {self.b_structure!r}")

    @property
    def p1(self):
        return self.A.shape[0]

    @property
    def p2(self):
        return self.C.shape[0]

    @property
    def Sigma_u(self):
        return np.linalg.inv(self.Omega_u)

    @property
    def Sigma_v(self):
        return np.linalg.inv(self.Omega_v)

    def is_stable(self, margin=0.0):
        return max(spectral_radius(self.A), spectral_radius(self.C)) < 1.0 - margin

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "Omega_u": self.Omega_u.tolist(),
            "Omega_v": self.Omega_v.tolist(),
            "b_structure": self.b_structure,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["A"], d["B"], d["C"], d["Omega_u"], d["Omega_v"],
                   d.get("b_structure", "low-rank"))


@dataclass(frozen=True)
class NoiseSpec:
    """Innovation distribution.

    ``family`` is one of ``gaussian``, ``student-t`` (uses ``df``) or
    ``elliptical`` (log-normal radial variate with log-scale ``mu`` and
    ``sigma``). Every family is scaled to have the target covariance.
    """

    family: str = "gaussian"
    df: float = 3.0
    mu: float = 0.0
    sigma: float = math.sqrt(2.0)

    def __post_init__(self):
        if self.family not in ("gaussian", "student-t", "elliptical"):
            raise InvalidArgument(f"unknown noise family {self.family!r}")
        if self.family == "student-t" and not self.df > 2:
            raise InvalidArgument("student-t noise needs df > 2 for a finite covariance")
        if self.family == "elliptical" and not self.sigma > 0:
            raise InvalidArgument("elliptical noise needs sigma > 0")


GAUSSIAN = NoiseSpec()

# name -> (p1, p2, rank_B, rho_A, rho_C, T)
PRESETS = {
    "A.1": (50, 20, 5, 0.5, 0.5, 200),
    "A.2": (100, 50, 5, 0.5, 0.5, 200),
    "A.3": (200, 50, 5, 0.5, 0.5, 200),
    "A.4": (50, 100, 5, 0.5, 0.5, 200),
    "B.1": (100, 50, 10, 0.5, 0.5, 200),
    "B.2": (100, 50, 20, 0.5, 0.5, 200),
    "C.1": (50, 20, 5, 0.8, 0.5, 200),
    "C.2": (50, 20, 5, 0.5, 0.8, 200),
    "C.3": (50, 20, 5, 0.8, 0.8, 200),
    "C.3'": (50, 20, 5, 0.8, 0.8, 500),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One simulation scenario.

    ``b_structure`` selects how the cross block is drawn: ``low-rank`` uses
    ``rank_B`` (``lowrank_shrink`` picks soft thresholding over truncation);
    ``sparse`` uses ``b_nonzero_prob`` (default ``1/p1``);
    ``zero`` sets it to zero. Edge probabilities for A and C default to
    ``2/p1`` and ``1/p2``.
    """

    preset: str = "custom"
    p1: int = 50
    p2: int = 20
    rank_B: int = 5
    rho_A: float = 0.5
    rho_C: float = 0.5
    T: int = 200
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    replications: int = 20
    seed: int = 20240101
    b_structure: str = "low-rank"
    b_nonzero_prob: float | None = None
    a_nonzero_prob: float | None = None
    c_nonzero_prob: float | None = None
    omega_density: float = 0.05
    omega_condition: float = 3.0
    burn_in: int = DEFAULT_BURN_IN
    lowrank_shrink: bool = True

    def __post_init__(self):
        if self.preset != "custom" and self.preset not in PRESETS:
            raise InvalidArgument(f"unknown preset {self.preset!r}")
        for name in ("p1", "p2", "T", "replications"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be positive")
        if not (0 < self.rho_A < 1 and 0 < self.rho_C < 1):
            raise InvalidArgument("spectral radii must lie in (0, 1)")
        if self.b_structure not in ("low-rank", "sparse", "zero"):
            raise InvalidArgument(f"unknown b_structure {self.b_structure!r}")
        if self.b_structure == "low-rank" and not 0 <= self.rank_B <= min(self.p1, self.p2):
            raise InvalidArgument("rank_B must lie in [0, min(p1, p2)]")

    @classmethod
    def from_preset(cls, name, **overrides):
        if name not in PRESETS:
            raise InvalidArgument(f"unknown preset {name!r}")
        p1, p2, r, ra, rc, T = PRESETS[name]
        base = dict(preset=name, p1=p1, p2=p2, rank_B=r, rho_A=ra, rho_C=rc, T=T)
        base.update(overrides)
        return cls(**base)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        """Build a spec from parsed JSON, naming the offending field on bad input.

        When ``preset`` names a table preset its dimensions are the defaults
        and any other keys override them.
        """
        if not isinstance(d, dict):
            raise InvalidArgument("experiment spec must be a JSON object")
        d = dict(d)
        _reject_unknown(d, cls, "experiment spec")
        if "noise" in d:
            noise = d["noise"]
            if isinstance(noise, str):
                noise = {"family": noise}
            if not isinstance(noise, dict):
                raise InvalidArgument("field 'noise' must be an object or a family name")
            _reject_unknown(noise, NoiseSpec, "noise")
            d["noise"] = NoiseSpec(**_coerce(noise, NoiseSpec))
        d = _coerce(d, cls)
        preset = d.pop("preset", "custom")
        if preset != "custom":
            return cls.from_preset(preset, **d)
        return cls(preset="custom", **d)

    @property
    def probs(self):
        a = self.a_nonzero_prob if self.a_nonzero_prob is not None else min(1.0, 2.0 / self.p1)
        c = self.c_nonzero_prob if self.c_nonzero_prob is not None else min(1.0, 1.0 / self.p2)
        b = self.b_nonzero_prob if self.b_nonzero_prob is not None else min(1.0, 1.0 / self.p1)
        return a, b, c


def _reject_unknown(d, cls, what):
    known = {f.name for f in fields(cls)}
    extra = sorted(set(d) - known)
    if extra:
        raise InvalidArgument(f"unknown field(s) in {what}: {', '.join(extra)}")


def _coerce(d, cls):
    """Check JSON scalar types against the dataclass annotations."""
    out = {}
    for f in fields(cls):
        if f.name not in d:
            continue
        v = d[f.name]
        kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
        if v is None and "None" in kind:
            out[f.name] = None
        elif kind.startswith("int"):
            if isinstance(v, bool) or not isinstance(v, int):
                raise InvalidArgument(f"field {f.name!r} must be an integer, got {v!r}")
            out[f.name] = v
        elif kind.startswith("float"):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise InvalidArgument(f"field {f.name!r} must be a number, got {v!r}")
            out[f.name] = float(v)
        elif kind == "bool":
            if not isinstance(v, bool):
                raise InvalidArgument(f"field {f.name!r} must be true or false, got {v!r}")
            out[f.name] = v
        elif kind == "str":
            if not isinstance(v, str):
                raise InvalidArgument(f"field {f.name!r} must be a string, got {v!r}")
            out[f.name] = v
        else:
            out[f.name] = v
    return out


# --------------------------------------------------------------------------
# matrix generators


def spectral_radius(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgument("spectral radius needs a square matrix")
    if M.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(M)).max())


def assemble_G(A, B, C):
    """Joint transition matrix ``[[A, 0], [B, C]]``."""
    A, B, C = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (A, B, C))
    p1, p2 = A.shape[0], C.shape[0]
    G = np.zeros((p1 + p2, p1 + p2))
    G[:p1, :p1] = A
    G[p1:, :p1] = B
    G[p1:, p1:] = C
    return G


def _signed_uniform(rng, size, low, high):
    mag = rng.uniform(low, high, size=size)
    return np.where(rng.random(size) < 0.5, -mag, mag)


def generate_sparse_transition(p, nonzero_prob, target_radius, rng, max_redraws=MAX_REDRAWS):
    """Sparse random matrix rescaled to spectral radius ``target_radius``.

    Nonzeros are drawn from ``Unif([-2.5, -1.5] U [1.5, 2.5])``. Draws whose
    spectral radius is (numerically) zero are discarded and redrawn.
    """
    if not 0 < target_radius < 1:
        raise InvalidArgument("target_radius must lie in (0, 1)")
    if not 0 <= nonzero_prob <= 1:
        raise InvalidArgument("nonzero_prob must lie in [0, 1]")
    rng = _as_rng(rng)
    for _ in range(max_redraws):
        mask = rng.random((p, p)) < nonzero_prob
        M = np.where(mask, _signed_uniform(rng, (p, p), 1.5, 2.5), 0.0)
        rad = spectral_radius(M)
        if rad > 1e-8:
            return M * (target_radius / rad)
    raise DegenerateInput(f"no draw with positive spectral radius after {max_redraws} attempts")


def generate_sparse_cross(p2, p1, nonzero_prob, rng, max_redraws=MAX_REDRAWS):
    """Sparse cross-block matrix with ``Unif(+-[1.5, 2.5])`` nonzeros, not rescaled."""
    if not 0 < nonzero_prob <= 1:
        raise InvalidArgument("nonzero_prob must lie in (0, 1]")
    rng = _as_rng(rng)
    for _ in range(max_redraws):
        mask = rng.random((p2, p1)) < nonzero_prob
        if mask.any():
            return np.where(mask, _signed_uniform(rng, (p2, p1), 1.5, 2.5), 0.0)
    raise DegenerateInput("sparse cross block came out empty on every draw")


def generate_lowrank(p2, p1, rank, rng, shrink=False):
    """``Unif(-10, 10)`` matrix reduced to rank ``rank``.

    By default the top ``rank`` singular triples are kept unchanged. With
    ``shrink=True`` every singular value is soft-thresholded at the
    ``(rank+1)``-th one instead, which gives the same rank but a much weaker
    signal.
    """
    if not 0 <= rank <= min(p1, p2):
        raise InvalidArgument(f"rank {rank} outside [0, min({p1}, {p2})]")
    rng = _as_rng(rng)
    raw = rng.uniform(-10.0, 10.0, size=(p2, p1))
    if rank == min(p1, p2):
        return raw
    U, s, Vt = np.linalg.svd(raw, full_matrices=False)
    kept = s[:rank] - s[rank] if shrink else s[:rank]
    return (U[:, :rank] * kept) @ Vt[:rank]


def generate_precision_er(p, edge_density, condition_number, rng, max_redraws=MAX_REDRAWS):
    """Sparse SPD precision matrix on an Erdos-Renyi graph.

    Edge weights are ``Unif(+-[0.5, 1])``; the diagonal is then shifted so the
    eigenvalue ratio equals ``condition_number`` and the result is rescaled so
    its smallest eigenvalue is 1. The implied noise covariance therefore has
    eigenvalues in ``[1/condition_number, 1]``.
    """
    if condition_number < 1:
        raise InvalidArgument("condition number must be >= 1")
    if condition_number == 1:
        return np.eye(p)
    if p < 2:
        raise InvalidArgument("an Erdos-Renyi precision needs at least two nodes")
    if not 0 < edge_density < 1:
        raise InvalidArgument("edge_density must lie in (0, 1)")
    rng = _as_rng(rng)
    iu = np.triu_indices(p, 1)
    for _ in range(max_redraws):
        edges = rng.random(iu[0].size) < edge_density
        if not edges.any():
            continue
        W = np.zeros((p, p))
        W[iu] = np.where(edges, _signed_uniform(rng, iu[0].size, 0.5, 1.0), 0.0)
        W = W + W.T
        ev = np.linalg.eigvalsh(W)
        lo, hi = ev[0], ev[-1]
        shift = (hi - condition_number * lo) / (condition_number - 1.0)
        return (W + shift * np.eye(p)) / (lo + shift)
    raise DegenerateInput(f"graph had no edges in {max_redraws} draws; density too small for p={p}")


def stationary_covariance(A, Sigma):
    """Solve ``Gamma = A Gamma A' + Sigma``."""
    G = solve_discrete_lyapunov(np.asarray(A, float), np.asarray(Sigma, float))
    return 0.5 * (G + G.T)


def joint_stationary_covariance(params):
    from scipy.linalg import block_diag

    G = assemble_G(params.A, params.B, params.C)
    return stationary_covariance(G, block_diag(params.Sigma_u, params.Sigma_v))


def signal_to_noise(B, A, Sigma_u, Sigma_v):
    """``sqrt(tr(B Gamma_X B') / tr(Sigma_v))`` with ``Gamma_X`` the stationary covariance of x."""
    gx = stationary_covariance(A, Sigma_u)
    return math.sqrt(max(np.trace(B @ gx @ B.T), 0.0) / np.trace(Sigma_v))


def generate_sparse_signal(p2, p1, nonzero_prob, snr, A, Sigma_u, Sigma_v, rng,
                           max_redraws=MAX_REDRAWS):
    """Random-sign sparse matrix with a common magnitude chosen to hit ``snr``."""
    rng = _as_rng(rng)
    for _ in range(max_redraws):
        mask = rng.random((p2, p1)) < nonzero_prob
        if mask.any():
            break
    else:
        raise DegenerateInput("sparse signal came out empty on every draw")
    pattern = np.where(mask, np.where(rng.random((p2, p1)) < 0.5, -1.0, 1.0), 0.0)
    base = signal_to_noise(pattern, A, Sigma_u, Sigma_v)
    return pattern * (snr / base)


def generate_counted_signal(p2, p1, n_active, snr, A, Sigma_u, Sigma_v, rng):
    """Exactly ``n_active`` random-sign entries at uniformly drawn positions, scaled to ``snr``."""
    if not 1 <= n_active <= p1 * p2:
        raise InvalidArgument(f"n_active must lie in [1, {p1 * p2}]")
    rng = _as_rng(rng)
    flat = np.zeros(p1 * p2)
    idx = rng.choice(p1 * p2, size=n_active, replace=False)
    flat[idx] = np.where(rng.random(n_active) < 0.5, -1.0, 1.0)
    pattern = flat.reshape(p2, p1)
    return pattern * (snr / signal_to_noise(pattern, A, Sigma_u, Sigma_v))


def generate_params(spec, rng):
    """Draw a full :class:`ModelParams` for an :class:`ExperimentSpec`."""
    rng = _as_rng(rng)
    pa, pb, pc = spec.probs
    A = generate_sparse_transition(spec.p1, pa, spec.rho_A, rng)
    C = generate_sparse_transition(spec.p2, pc, spec.rho_C, rng)
    if spec.b_structure == "low-rank":
        B = generate_lowrank(spec.p2, spec.p1, spec.rank_B, rng, shrink=spec.lowrank_shrink)
    elif spec.b_structure == "sparse":
        B = generate_sparse_cross(spec.p2, spec.p1, pb, rng)
    else:
        B = np.zeros((spec.p2, spec.p1))
    Om_u = generate_precision_er(spec.p1, spec.omega_density, spec.omega_condition, rng)
    Om_v = generate_precision_er(spec.p2, spec.omega_density, spec.omega_condition, rng)
    return ModelParams(A, B, C, Om_u, Om_v, spec.b_structure)


# --------------------------------------------------------------------------
# noise and trajectories


def _cov_factor(Sigma):
    return np.linalg.cholesky(0.5 * (Sigma + Sigma.T))


def draw_noise(n, Sigma, noise, rng):
    """``n`` x ``p`` innovation matrix with covariance ``Sigma`` per row.

    For the elliptical family the whole ``n*p`` trajectory is one draw:
    a single radial variate scales a uniform direction on the sphere.
    """
    rng = _as_rng(rng)
    L = _cov_factor(np.atleast_2d(Sigma))
    p = L.shape[0]
    g = rng.standard_normal((n, p))
    if noise.family == "student-t":
        w = rng.chisquare(noise.df, size=(n, 1))
        g = g * np.sqrt((noise.df - 2.0) / w)
    elif noise.family == "elliptical":
        dim = n * p
        radius = rng.lognormal(noise.mu, noise.sigma)
        second_moment = math.exp(2.0 * noise.mu + 2.0 * noise.sigma ** 2)
        g = g / np.linalg.norm(g) * radius * math.sqrt(dim / second_moment)
    return g @ L.T


def simulate_system(params, T, noise=GAUSSIAN, burn_in=DEFAULT_BURN_IN, rng=None):
    """Simulate ``T`` observations of (x_t, z_t) after ``burn_in`` discarded steps.

    Returns ``(X, Z)`` with shapes ``(T, p1)`` and ``(T, p2)``.
    """
    if T < 2:
        raise InvalidArgument("T must be at least 2")
    if burn_in < 0:
        raise InvalidArgument("burn_in must be nonnegative")
    if not params.is_stable():
        raise InvalidArgument("parameters are not stable (spectral radius >= 1)")
    rng = _as_rng(rng)
    n = T + burn_in
    U = draw_noise(n, params.Sigma_u, noise, rng)
    V = draw_noise(n, params.Sigma_v, noise, rng)
    X, Z = _kernels.var1_recursion(params.A, params.B, params.C, U, V,
                                   np.zeros(params.p1), np.zeros(params.p2))
    return X[burn_in:], Z[burn_in:]
