"""Corrected lasso for linear regression with noisy covariates.

The observed design Z = X + W carries additive measurement noise with known
diagonal covariance ``noise_var``.  Subtracting that diagonal from the Gram
matrix Z'Z/n gives an unbiased estimate of E[xx'], and the corrected lasso

    minimize  0.5 b'G b - b'beta + penalty * ||beta||_1
    subject to ||beta||_1 <= radius

replaces the ordinary lasso.  Because the corrected Gram can be indefinite
when p > n, the problem is solved by projected composite gradient descent:
a gradient step on the quadratic part, the soft-threshold prox for the l1
penalty, then Euclidean projection onto the l1 ball.  The l1-ball side
constraint keeps the iterates bounded on indefinite problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, NumericalError

# Entries at or below this magnitude count as exactly zero after truncation.
DEFAULT_TRUNCATION = 1e-7

_POWER_ITERATIONS = 20
_MIN_STEP = 1e-30
_BACKTRACK_SLACK = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Observed regression data.

    Parameters
    ----------
    y : ndarray, shape (n,)
        Response vector, all entries finite.
    Z : ndarray, shape (n, p)
        Observed covariates.  Entries must be finite wherever `mask` is True
        (everywhere when `mask` is None).  Missing cells are stored as 0.
    mask : ndarray of bool, shape (n, p), optional
        True marks an observed cell.  Present exactly when the noise model is
        missing-at-random.
    """

    y: np.ndarray
    Z: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        Z = np.asarray(self.Z, dtype=np.float64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "Z", Z)
        if y.ndim != 1 or Z.ndim != 2:
            raise InputError("y must be 1-d and Z 2-d")
        n, p = Z.shape
        if y.shape[0] != n:
            raise InputError(f"y has {y.shape[0]} rows but Z has {n}")
        if n < 2:
            raise InputError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise InputError("Z has no columns")
        if not np.all(np.isfinite(y)):
            raise InputError("y contains non-finite entries")
        if self.mask is None:
            if not np.all(np.isfinite(Z)):
                raise InputError("Z contains non-finite entries")
        else:
            mask = np.asarray(self.mask)
            if mask.dtype != np.bool_ or mask.shape != Z.shape:
                raise InputError("mask must be boolean with the same shape as Z")
            object.__setattr__(self, "mask", mask)
            if not np.all(np.isfinite(Z[mask])):
                raise InputError("Z contains non-finite observed entries")

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement-noise model for the covariates.

    kind "known" carries the diagonal of the noise covariance; kind "mar"
    states that covariates are missing at random and the effective noise
    diagonal must be estimated from the missingness itself.
    """

    kind: str
    noise_var: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("known", "mar"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.kind == "known":
            if self.noise_var is None:
                raise InputError("known-noise spec requires a variance vector")
            v = np.asarray(self.noise_var, dtype=np.float64)
            if v.ndim != 1:
                raise InputError("noise_var must be a vector")
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise InputError("noise variances must be finite and nonnegative")
            object.__setattr__(self, "noise_var", v)
        elif self.noise_var is not None:
            raise InputError("missing-at-random spec carries no variance vector")

    @classmethod
    def known(cls, noise_var) -> "NoiseSpec":
        return cls("known", noise_var)

    @classmethod
    def mar(cls) -> "NoiseSpec":
        return cls("mar")


@dataclass(frozen=True)
class SolverConfig:
    """Tuning for the corrected-lasso solver.

    `penalty` and `radius` default to None, meaning "resolve from the data":
    penalty = sqrt(log(p / 0.05) / n) * penalty_scale, and radius = twice the
    l1 norm of the ridge pilot solving (G_psd + I) beta = b, where G_psd
    floors the negative eigenvalues of G at zero.  Use `resolve_config` to
    make them concrete; `fit_corrected_lasso` requires concrete values.
    """

    penalty: float | None = None
    penalty_scale: float = 1.0
    radius: float | None = None
    tol: float = 1e-8
    max_iter: int = 20000
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.penalty is not None and not (self.penalty >= 0):
            raise InputError("penalty must be nonnegative")
        if not (self.penalty_scale > 0):
            raise InputError("penalty_scale must be positive")
        if self.radius is not None and not (self.radius > 0):
            raise InputError("radius must be positive (np.inf allowed)")
        if not (self.tol > 0):
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if not (self.truncation >= 0):
            raise InputError("truncation must be nonnegative")


@dataclass(frozen=True)
class FitResult:
    """Solver output.

    `beta` has every entry either exactly 0 or larger than `truncation` in
    magnitude.  `objective` and `kkt_residual` are evaluated at the final
    solver iterate before truncation; `objective_trace` records the objective
    at every accepted iterate and is non-increasing up to 1e-12 slack.
    """

    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    penalty: float
    radius: float
    objective_trace: np.ndarray


def default_penalty(n: int, p: int) -> float:
    """Theory-scaled l1 penalty sqrt(log(p / 0.05) / n)."""
    if n < 1 or p < 1:
        raise InputError("need n >= 1 and p >= 1 to scale the penalty")
    return math.sqrt(math.log(p / 0.05) / n)


def default_radius(G: np.ndarray, b: np.ndarray) -> float:
    """Data-driven l1-ball radius: 2 * ||ridge pilot||_1.

    The pilot solves (G_psd + I) beta = b with G_psd the positive
    semidefinite part of G (negative eigenvalues floored at zero), so the
    rule stays well defined on indefinite corrected Grams.  Falls back to
    1.0 when b = 0 makes the pilot vanish.
    """
    try:
        w, V = np.linalg.eigh(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    ridge = V @ ((V.T @ b) / (np.maximum(w, 0.0) + 1.0))
    r = 2.0 * float(np.abs(ridge).sum())
    return r if r > 0.0 else 1.0


def resolve_config(cfg: SolverConfig, n: int, p: int,
                   G: np.ndarray, b: np.ndarray) -> SolverConfig:
    """Fill in data-driven penalty and radius; explicit values win."""
    penalty = cfg.penalty
    if penalty is None:
        penalty = default_penalty(n, p) * cfg.penalty_scale
    radius = cfg.radius
    if radius is None:
        radius = default_radius(G, b)
    return replace(cfg, penalty=penalty, radius=radius)


def corrected_gram(Z: np.ndarray, noise_var: np.ndarray) -> np.ndarray:
    """Measurement-error-corrected Gram matrix Z'Z/n - diag(noise_var).

    Output is exactly symmetric (enforced, not assumed).  The result is an
    unbiased estimate of E[xx'] and may be indefinite when p > n.
    """
    Z = np.asarray(Z, dtype=np.float64)
    v = np.asarray(noise_var, dtype=np.float64)
    if Z.ndim != 2:
        raise InputError("Z must be a matrix")
    n, p = Z.shape
    if v.shape != (p,):
        raise InputError(f"noise_var has shape {v.shape}, expected ({p},)")
    if n < 1:
        raise InputError("Z has no rows")
    G = Z.T @ Z
    G = (G + G.T) / (2.0 * n)
    G[np.diag_indices_from(G)] -= v
    return G


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Entrywise sign(v) * max(|v| - t, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_1 <= radius}.

    Sorting-based: the threshold theta is found from the sorted absolute
    values in O(p log p), then every entry shrinks toward zero by theta.
    Already-feasible input is returned unchanged.
    """
    if not (radius >= 0):
        raise InputError("radius must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - radius
    idx = np.arange(1, u.shape[0] + 1)
    rho = idx[u > css / idx][-1]
    theta = css[rho - 1] / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def hard_threshold(beta: np.ndarray, threshold: float) -> np.ndarray:
    """Zero every entry with |beta_k| <= threshold, keep the rest exactly."""
    if not (threshold >= 0):
        raise InputError("threshold must be nonnegative")
    beta = np.asarray(beta, dtype=np.float64)
    return np.where(np.abs(beta) > threshold, beta, 0.0)


def _spectral_bound(G: np.ndarray) -> float:
    # 20 power iterations from a deterministic start; |dominant eigenvalue|.
    p = G.shape[0]
    v = np.full(p, p ** -0.5)
    lam = 1.0
    for _ in range(_POWER_ITERATIONS):
        w = G @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0 or not np.isfinite(nw):
            return 1.0
        lam = nw
        v = w / nw
    return lam


def _kkt_residual(beta: np.ndarray, grad: np.ndarray,
                  penalty: float, radius: float) -> float:
    """Infinity norm of the minimum-norm subgradient of the full problem.

    At an interior point this is the distance of -grad from
    penalty * (subdifferential of the l1 norm).  When the l1-ball constraint
    is active its normal cone contributes an extra theta >= 0 on top of the
    penalty; the residual as a function of theta is convex piecewise linear,
    so a golden-section scan finds the minimum.
    """
    nonzero = beta != 0.0

    def resid(theta: float) -> float:
        lam = penalty + theta
        shrunk = grad - np.clip(grad, -lam, lam)
        full = np.where(nonzero, grad + lam * np.sign(beta), shrunk)
        return float(np.abs(full).max())

    l1 = float(np.abs(beta).sum())
    if not np.isfinite(radius) or l1 < radius * (1.0 - 1e-9):
        return resid(0.0)
    lo, hi = 0.0, float(np.abs(grad).max()) + 1.0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = resid(x1), resid(x2)
    for _ in range(100):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = resid(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = resid(x2)
    return min(resid(0.0), f1, f2)


def fit_corrected_lasso(b: np.ndarray, G: np.ndarray,
                        cfg: SolverConfig) -> FitResult:
    """Solve the l1-ball-constrained corrected lasso.

    Parameters
    ----------
    b : ndarray, shape (p,)
        Linear term, typically Z'y/n.
    G : ndarray, shape (p, p)
        Corrected Gram matrix; symmetric, possibly indefinite.
    cfg : SolverConfig
        Must carry concrete `penalty` and `radius` (see `resolve_config`).

    Returns
    -------
    FitResult
        Solution with entries at or below `cfg.truncation` zeroed.  Converged
        means the minimum-norm subgradient residual dropped to `cfg.tol`;
        hitting `max_iter` first returns converged=False, not an error.

    Notes
    -----
    Iterates start at 0 and stay feasible.  The initial step is 1 over a
    power-iteration estimate of the spectral radius of G, halved by
    backtracking until the usual quadratic upper bound holds, which makes the
    composite objective non-increasing even on indefinite problems.
    """
    b = np.asarray(b, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if b.ndim != 1 or G.shape != (b.shape[0], b.shape[0]):
        raise InputError("b must be a vector and G a matching square matrix")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(G))):
        raise InputError("b and G must be finite")
    if cfg.penalty is None or cfg.radius is None:
        raise InputError("penalty and radius must be resolved before fitting")
    penalty = float(cfg.penalty)
    radius = float(cfg.radius)

    p = b.shape[0]
    beta = np.zeros(p)
    f_beta = 0.0
    grad = -b.copy()
    step = 1.0 / max(_spectral_bound(G), 1e-12)
    trace = [0.0]
    kkt = _kkt_residual(beta, grad, penalty, radius)
    converged = kkt <= cfg.tol
    iterations = 0

    while iterations < cfg.max_iter and not converged:
        iterations += 1
        while True:
            cand = soft_threshold(beta - step * grad, step * penalty)
            cand = project_l1_ball(cand, radius)
            delta = cand - beta
            sq = float(delta @ delta)
            Gc = G @ cand
            f_cand = 0.5 * float(cand @ Gc) - float(b @ cand)
            if sq == 0.0:
                break
            bound = f_beta + float(grad @ delta) + sq / (2.0 * step)
            if f_cand <= bound + _BACKTRACK_SLACK * (1.0 + abs(f_beta)):
                break
            step *= 0.5
            if step < _MIN_STEP:
                raise NumericalError("backtracking step size underflow")
        if not np.isfinite(f_cand):
            raise NumericalError("non-finite objective in solver")
        beta, f_beta = cand, f_cand
        grad = Gc - b
        trace.append(f_beta + penalty * float(np.abs(beta).sum()))
        if sq == 0.0 or iterations % 25 == 0 or \
                math.sqrt(sq) <= 0.1 * cfg.tol * step:
            kkt = _kkt_residual(beta, grad, penalty, radius)
            converged = kkt <= cfg.tol
            if sq == 0.0:
                break

    if not converged:
        kkt = _kkt_residual(beta, grad, penalty, radius)
        converged = kkt <= cfg.tol
    objective = f_beta + penalty * float(np.abs(beta).sum())
    return FitResult(
        beta=hard_threshold(beta, cfg.truncation),
        objective=objective,
        iterations=iterations,
        converged=converged,
        kkt_residual=kkt,
        penalty=penalty,
        radius=radius,
        objective_trace=np.asarray(trace),
    )
