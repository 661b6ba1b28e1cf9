"""Sandwich covariance for the stacked estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import IDX, INDEX_NAMES, THETA_DIM, IVNNTError, ModelSpec, ObservationSet, ThetaVector
from .estimator import cell_patterns, estimating_functions
from .linkmath import get_link, norm_quantile

CONDITION_LIMIT = 1e12
NONINFORMATIVE_UPPER = 1000.0
REL_STEP = 1e-6


class NonFiniteEntry(IVNNTError):
    pass


class Excluded(IVNNTError):
    """Bread matrix too ill-conditioned to invert reliably."""

    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(f"bread condition number {condition_number:.3g} >= {CONDITION_LIMIT:.0e}")


@dataclass
class SandwichResult:
    covariance: np.ndarray      # 13x13, NaN outside the active block
    bread_condition_number: float
    se: np.ndarray
    ci: np.ndarray              # 13x2
    level: float
    active: np.ndarray          # components included in the sandwich
    noninformative: dict[str, bool]

    @property
    def excluded(self) -> bool:
        return not self.bread_condition_number < CONDITION_LIMIT

    def index_ci(self, name: str) -> tuple[float, float]:
        lo, hi = self.ci[IDX[name]]
        return float(lo), float(hi)


def _as_array(theta):
    return theta.to_array() if isinstance(theta, ThetaVector) else np.asarray(theta, dtype=float)


def _step(theta):
    return np.maximum(REL_STEP, REL_STEP * np.abs(theta))


def _bread(z, a, i, w, theta, link, active):
    idx = np.nonzero(active)[0]
    h = _step(theta)
    jac = np.empty((idx.size, idx.size))
    for col, k in enumerate(idx):
        up = theta.copy()
        dn = theta.copy()
        up[k] += h[k]
        dn[k] -= h[k]
        q_up = (w @ estimating_functions(z, a, i, up, link)[:, idx]) / w.sum()
        q_dn = (w @ estimating_functions(z, a, i, dn, link)[:, idx]) / w.sum()
        jac[:, col] = (q_up - q_dn) / (2.0 * h[k])
    if not np.all(np.isfinite(jac)):
        raise NonFiniteEntry("a perturbed estimating function left the link domain")
    return -jac


def _meat(z, a, i, w, theta, link, active):
    idx = np.nonzero(active)[0]
    q = estimating_functions(z, a, i, theta, link)[:, idx]
    return (q.T * w) @ q / w.sum()


def _require_finite(theta):
    if not np.all(np.isfinite(theta)):
        bad = [k for k in range(THETA_DIM) if not np.isfinite(theta[k])]
        raise NonFiniteEntry(f"theta has non-finite components at positions {bad}")


def bread_matrix(data: ObservationSet, theta, spec: ModelSpec) -> np.ndarray:
    """-(1/n) sum of Jacobians of Q, by central differences."""
    t = _as_array(theta)
    _require_finite(t)
    z, a, i, w = cell_patterns(data)
    return _bread(z, a, i, w, t, get_link(spec.link), np.ones(THETA_DIM, bool))


def meat_matrix(data: ObservationSet, theta, spec: ModelSpec) -> np.ndarray:
    t = _as_array(theta)
    _require_finite(t)
    z, a, i, w = cell_patterns(data)
    return _meat(z, a, i, w, t, get_link(spec.link), np.ones(THETA_DIM, bool))


def z_multiplier(level: float) -> float:
    return float(norm_quantile((1.0 + level) / 2.0))


def sandwich(data: ObservationSet, theta, spec: ModelSpec, level: float = 0.95) -> SandwichResult:
    """n^-1 A^-1 B A^-T over the finite components of theta.

    Components that are NaN (unsolved causal parameter and everything built
    on it) or infinite (indices of non-positive benefits) are left out of the
    system; the block structure of Q means the remaining rows do not depend
    on them. An infinite index gets the interval (inf, inf).
    """
    t = _as_array(theta)
    active = np.isfinite(t)
    z, a, i, w = cell_patterns(data)
    link = get_link(spec.link)
    bread = _bread(z, a, i, w, t, link, active)
    meat = _meat(z, a, i, w, t, link, active)
    cond = float(np.linalg.cond(bread))
    if not cond < CONDITION_LIMIT:
        raise Excluded(cond)
    n = w.sum()
    bread_inv = np.linalg.solve(bread, np.eye(bread.shape[0]))
    cov_active = bread_inv @ meat @ bread_inv.T / n
    cov_active = 0.5 * (cov_active + cov_active.T)
    cov = np.full((THETA_DIM, THETA_DIM), np.nan)
    cov[np.ix_(active, active)] = cov_active
    se = np.sqrt(np.where(active, np.diag(cov), np.nan))
    zq = z_multiplier(level)
    ci = np.column_stack([t - zq * se, t + zq * se])
    ci[np.isinf(t)] = np.inf
    noninf = {name: bool(ci[IDX[name], 1] > NONINFORMATIVE_UPPER) for name in INDEX_NAMES}
    return SandwichResult(cov, cond, se, ci, level, active, noninf)
