"""Nodewise corrected-lasso regressions.

Step 2 of the inference pipeline regresses each target column of the noisy
design on all the others, with the same measurement-error Gram correction as
Step 1.  The fitted direction mu approximates the j-th column of the inverse
of E[xx'] up to scaling and is what makes the debiased score insensitive to
first-order pilot error.

Only the noise variances of the regressor columns enter the subproblem; the
target column's own noise variance cancels from the moment condition and is
never used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .lasso import (
    FitResult,
    SolverConfig,
    corrected_gram,
    default_penalty,
    fit_corrected_lasso,
    resolve_config,
)


@dataclass(frozen=True)
class NodewiseResult:
    """Direction for one target column.

    `mu` lives in the full p-dimensional coordinate system with mu[j] = 0
    exactly; `fit` is the underlying (p-1)-dimensional solver result.
    """

    j: int
    mu: np.ndarray
    fit: FitResult


def fit_nodewise(Z: np.ndarray, noise_var: np.ndarray, j: int,
                 cfg: SolverConfig = SolverConfig()) -> NodewiseResult:
    """Corrected-lasso regression of column j on the remaining columns.

    The subproblem uses b = Z_{-j}' z_j / n and the corrected Gram of
    Z_{-j}.  The penalty default matches Step 1 (computed from the full
    problem size, not the subproblem's p - 1); the radius default is the
    subproblem's own ridge rule.
    """
    Z = np.asarray(Z, dtype=np.float64)
    noise_var = np.asarray(noise_var, dtype=np.float64)
    if Z.ndim != 2:
        raise InputError("Z must be a matrix")
    n, p = Z.shape
    if p < 1:
        raise InputError("nodewise regression needs at least 1 column")
    if noise_var.shape != (p,):
        raise InputError(f"noise_var has shape {noise_var.shape}, expected ({p},)")
    if not 0 <= j < p:
        raise InputError(f"target column {j} out of range for p={p}")
    if p == 1:
        # nothing to regress on; the projection direction is empty
        empty = FitResult(beta=np.zeros(0), objective=0.0, iterations=0,
                          converged=True, kkt_residual=0.0,
                          penalty=default_penalty(n, p) * cfg.penalty_scale,
                          radius=0.0, objective_trace=np.zeros(1))
        return NodewiseResult(j=j, mu=np.zeros(1), fit=empty)

    keep = np.arange(p) != j
    Zm = Z[:, keep]
    b = Zm.T @ Z[:, j] / n
    G = corrected_gram(Zm, noise_var[keep])
    if cfg.penalty is None:
        cfg = SolverConfig(
            penalty=default_penalty(n, p) * cfg.penalty_scale,
            penalty_scale=cfg.penalty_scale, radius=cfg.radius,
            tol=cfg.tol, max_iter=cfg.max_iter, truncation=cfg.truncation)
    cfg = resolve_config(cfg, n, p, G, b)
    fit = fit_corrected_lasso(b, G, cfg)

    mu = np.zeros(p)
    mu[keep] = fit.beta
    return NodewiseResult(j=j, mu=mu, fit=fit)
