"""End-to-end estimation: point estimates, sandwich intervals and diagnostics."""
from __future__ import annotations

import numpy as np

from .domain import (
    IDX,
    INDEX_NAMES,
    THETA_DIM,
    Diagnostics,
    EstimateReport,
    ModelSpec,
    ObservationSet,
    SeparationError,
)
from .estimator import g_estimate, instrument_strength
from .variance import Excluded, NonFiniteEntry, sandwich


def estimate(data: ObservationSet, spec: ModelSpec, ci_level: float = 0.95) -> EstimateReport:
    fit = g_estimate(data, spec)
    theta = fit.theta_hat
    diag = Diagnostics(
        psi0_status=fit.psi0.status,
        psi1_status=fit.psi1.status,
        psi0_multiple_roots=fit.psi0.multiple_roots,
        psi1_multiple_roots=fit.psi1.multiple_roots,
    )
    try:
        diag.instrument_wald = instrument_strength(data)
    except SeparationError:
        pass
    cov = np.full((THETA_DIM, THETA_DIM), np.nan)
    nan_ci = (float("nan"), float("nan"))
    ci = {name: nan_ci for name in INDEX_NAMES}
    try:
        sw = sandwich(data, theta, spec, ci_level)
    except Excluded as exc:
        diag.bread_condition_number = exc.condition_number
        diag.excluded = True
    except NonFiniteEntry:
        diag.excluded = True
    else:
        cov = sw.covariance
        diag.bread_condition_number = sw.bread_condition_number
        for name in INDEX_NAMES:
            if not np.isnan(theta[name]):
                ci[name] = sw.index_ci(name)
        diag.noninformative_ci = {
            name: flag for name, flag in sw.noninformative.items() if not np.isnan(theta[name])
        }
    return EstimateReport(theta, cov, ci_level, ci, diag, n=data.n, link=spec.link)
