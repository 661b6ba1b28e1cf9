"""G-estimation of the causal parameters and the efficacy indices.

The data are binary in all three coordinates, so every sum over records is
computed as a count-weighted sum over the (at most) eight observed
(z, a, i) patterns. Summation order is fixed, which keeps results
bit-reproducible.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .domain import (
    IDX,
    THETA_DIM,
    ModelSpec,
    NonFiniteTheta,
    ObservationRecord,
    ObservationSet,
    PsiStatus,
    SeparationError,
    ThetaVector,
)
from .linkmath import Link, g_transform, get_link, logit

PSI_BRACKET = (-20.0, 20.0)
PSI_GRID_POINTS = 4001


# -- compressed data ----------------------------------------------------------

_PATTERNS = np.array([(z, a, i) for z in (0, 1) for a in (0, 1) for i in (0, 1)], dtype=float)


def cell_patterns(data: ObservationSet):
    """Observed (z, a, i) patterns and their counts, in a fixed order."""
    counts = data.cell_counts().ravel().astype(float)
    keep = counts > 0
    pats = _PATTERNS[keep]
    return pats[:, 0], pats[:, 1], pats[:, 2], counts[keep]


def _linear(z, a, beta):
    return beta[0] + beta[1] * a + beta[2] * z + beta[3] * a * z


# -- association model --------------------------------------------------------

@dataclass(frozen=True)
class AssociationFit:
    beta: np.ndarray
    pi_z: float
    cell_means: np.ndarray  # [z, a] -> mean of I
    score_residual: float


def fit_association(data: ObservationSet, spec: ModelSpec) -> AssociationFit:
    """Saturated outcome model in (Z, A) plus the instrument mean.

    The saturated fit reproduces each (z, a) cell mean, so the coefficients
    are the link-scale cell contrasts.
    """
    link = get_link(spec.link)
    counts = data.cell_counts().astype(float)
    n_za = counts.sum(axis=2)
    if np.any(n_za == 0):
        raise SeparationError("an instrument-by-exposure cell is empty")
    means = counts[:, :, 1] / n_za
    flat = [(z, a) for z in (0, 1) for a in (0, 1) if means[z, a] in (0.0, 1.0)]
    if flat:
        raise SeparationError(
            "outcome is constant within cell(s) " + ", ".join(f"(z={z}, a={a})" for z, a in flat)
        )
    eta = link.forward(means)
    beta = np.array([
        eta[0, 0],
        eta[0, 1] - eta[0, 0],
        eta[1, 0] - eta[0, 0],
        eta[1, 1] - eta[1, 0] - eta[0, 1] + eta[0, 0],
    ])
    pi_z = float(counts[1].sum() / counts.sum())
    z, a, i, w = cell_patterns(data)
    r = i - link.inverse(_linear(z, a, beta))
    score = np.array([w @ r, w @ (r * a), w @ (r * z), w @ (r * a * z)]) / w.sum()
    return AssociationFit(beta, pi_z, means, float(np.max(np.abs(score))))


# -- benefits and counterfactual predictions ----------------------------------

def counterfactual_mean_h(a, z, a_obs, beta, psi, spec: ModelSpec):
    """Predicted mean of I_{1-a} for records with observed exposure ``a_obs``.

    Records whose observed exposure differs from the one being removed keep
    their fitted association mean.
    """
    link = get_link(spec.link)
    a = np.asarray(a, dtype=float)
    a_obs = np.asarray(a_obs, dtype=float)
    eta = _linear(np.asarray(z, dtype=float), a_obs, beta)
    shift = -a * psi[1] * a_obs + (1 - a) * psi[0] * (1 - a_obs)
    out = link.inverse(eta + shift)
    return float(out) if np.ndim(out) == 0 else out


def benefit_unexposed(z, beta, psi0, link: Link):
    base = beta[0] + beta[2] * z
    return link.inverse(base + psi0) - link.inverse(base)


def benefit_exposed(z, beta, psi1, link: Link):
    base = beta[0] + beta[1] + (beta[2] + beta[3]) * z
    return link.inverse(base) - link.inverse(base - psi1)


def benefit_general(z, a, beta, psi, link: Link):
    eta = _linear(z, a, beta)
    return link.inverse(eta + psi[0] * (1 - a)) - link.inverse(eta - psi[1] * a)


def plugin_benefits(data: ObservationSet, beta, psi, spec: ModelSpec):
    """Sample-average benefits (among the unexposed, the exposed, overall)."""
    link = get_link(spec.link)
    z, a, _, w = cell_patterns(data)
    w0 = w * (1 - a)
    w1 = w * a
    with np.errstate(invalid="ignore"):
        pb0 = float(w0 @ benefit_unexposed(z, beta, psi[0], link) / w0.sum())
        pb1 = float(w1 @ benefit_exposed(z, beta, psi[1], link) / w1.sum())
        pb = float(w @ benefit_general(z, a, beta, psi, link) / w.sum())
    return pb0, pb1, pb


# -- causal parameters --------------------------------------------------------

@dataclass(frozen=True)
class PsiSolution:
    value: float
    status: PsiStatus
    roots: tuple[float, ...] = ()
    bracket: tuple[float, float] = PSI_BRACKET
    residual: float = float("nan")

    @property
    def multiple_roots(self) -> bool:
        return len(self.roots) > 1


def dh_mean(a: int, psi, z, a_obs, weights, beta, pi_z, link: Link):
    """Mean of (Z - pi_Z) h(a; ...) for one or many values of psi."""
    psi_arr = np.atleast_1d(np.asarray(psi, dtype=float))[:, None]
    eta = _linear(z, a_obs, beta)[None, :]
    if a == 0:
        h = link.inverse(eta + psi_arr * (1 - a_obs))
    else:
        h = link.inverse(eta - psi_arr * a_obs)
    vals = (h * ((z - pi_z) * weights)).sum(axis=1) / weights.sum()
    return float(vals[0]) if np.ndim(psi) == 0 else vals


def solve_psi(a: int, data: ObservationSet, beta, pi_z: float, spec: ModelSpec,
              bracket=PSI_BRACKET, grid_points: int = PSI_GRID_POINTS) -> PsiSolution:
    """Root of the instrument-weighted counterfactual equation for group ``a``.

    Scans ``bracket`` for sign changes and refines each with Brent's method.
    With several roots, the one smallest in magnitude is returned and all of
    them are listed in ``roots``. No sign change yields status NoSolution.
    """
    if a not in (0, 1):
        raise ValueError("a must be 0 or 1")
    link = get_link(spec.link)
    z, a_obs, _, w = cell_patterns(data)
    grid = np.linspace(bracket[0], bracket[1], grid_points)
    f = dh_mean(a, grid, z, a_obs, w, beta, pi_z, link)

    def fn(p):
        return dh_mean(a, float(p), z, a_obs, w, beta, pi_z, link)

    roots = [float(g) for g in grid[f == 0.0]]
    for k in np.nonzero(f[:-1] * f[1:] < 0)[0]:
        roots.append(float(optimize.brentq(fn, grid[k], grid[k + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)))
    if not roots:
        return PsiSolution(float("nan"), PsiStatus.NO_SOLUTION, (), tuple(bracket))
    roots.sort()
    best = min(roots, key=abs)
    return PsiSolution(best, PsiStatus.SOLVED, tuple(roots), tuple(bracket), abs(fn(best)))


# -- stacked estimating function ---------------------------------------------

def estimating_functions(z, a, i, theta, link: Link) -> np.ndarray:
    """Per-record stacked estimating function, shape (k, 13).

    NaN parameters propagate into the rows that depend on them; no check is
    made here for infinite indices (see :func:`evaluate_Q`).
    """
    t = np.asarray(theta, dtype=float)
    b = t[0:4]
    pi_z = t[4]
    psi0, psi1 = t[5], t[6]
    z = np.asarray(z, dtype=float)
    a = np.asarray(a, dtype=float)
    i = np.asarray(i, dtype=float)
    eta = _linear(z, a, b)
    r = i - link.inverse(eta)
    zc = z - pi_z
    with np.errstate(invalid="ignore"):
        h0 = link.inverse(eta + psi0 * (1 - a))
        h1 = link.inverse(eta - psi1 * a)
        gvals = np.asarray(g_transform(t[7:10]), dtype=float)
        out = np.empty((z.shape[0], THETA_DIM))
        out[:, 0] = r
        out[:, 1] = r * a
        out[:, 2] = r * z
        out[:, 3] = r * a * z
        out[:, 4] = zc
        out[:, 5] = zc * h0
        out[:, 6] = zc * h1
        out[:, 7] = (benefit_unexposed(z, b, psi0, link) - t[7]) * (1 - a)
        out[:, 8] = (benefit_exposed(z, b, psi1, link) - t[8]) * a
        out[:, 9] = (h0 - h1) - t[9]
        out[:, 10:13] = gvals - t[10:13]
    return out


def evaluate_Q(record: ObservationRecord, theta: ThetaVector, spec: ModelSpec) -> np.ndarray:
    arr = theta.to_array()
    if np.any(np.isinf(arr[10:13])):
        raise NonFiniteTheta("index component is infinite; the g-block is undefined there")
    link = get_link(spec.link)
    return estimating_functions([record.z], [record.a], [record.i], arr, link)[0]


def mean_estimating_function(data: ObservationSet, theta, spec: ModelSpec) -> np.ndarray:
    arr = theta.to_array() if isinstance(theta, ThetaVector) else np.asarray(theta, dtype=float)
    z, a, i, w = cell_patterns(data)
    q = estimating_functions(z, a, i, arr, get_link(spec.link))
    return (w @ q) / w.sum()


# -- full point estimation ----------------------------------------------------

@dataclass(frozen=True)
class GEstimationResult:
    theta_hat: ThetaVector
    q_residual_norm: float
    psi_brackets: tuple[tuple[float, float], tuple[float, float]]
    psi0: PsiSolution
    psi1: PsiSolution
    association: AssociationFit


def g_estimate(data: ObservationSet, spec: ModelSpec) -> GEstimationResult:
    """Association fit, then each causal parameter, then benefits and indices.

    A causal parameter without a root leaves the quantities depending on it
    as NaN; the rest of the fit is still returned.
    """
    assoc = fit_association(data, spec)
    sol0 = solve_psi(0, data, assoc.beta, assoc.pi_z, spec)
    sol1 = solve_psi(1, data, assoc.beta, assoc.pi_z, spec)
    psi = (sol0.value, sol1.value)
    pb0, pb1, pb = plugin_benefits(data, assoc.beta, psi, spec)
    nne, ein, nnt = (float(x) for x in g_transform(np.array([pb0, pb1, pb])))
    theta = ThetaVector(tuple(float(x) for x in assoc.beta), assoc.pi_z, psi, pb0, pb1, pb, nne, ein, nnt)
    q = mean_estimating_function(data, theta, spec)
    q = q[np.isfinite(q)]
    return GEstimationResult(
        theta,
        float(np.linalg.norm(q)) if q.size else 0.0,
        (sol0.bracket, sol1.bracket),
        sol0,
        sol1,
        assoc,
    )


# -- baselines -----------------------------------------------------------------

class NaiveMode(str, enum.Enum):
    CRUDE = "crude"
    ADJUST_FOR_INSTRUMENT = "adjust_for_instrument"


@dataclass(frozen=True)
class NaiveEstimate:
    pb0: float
    pb1: float
    pb: float
    nne: float = field(init=False)
    ein: float = field(init=False)
    nnt: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "nne", float(g_transform(self.pb0)))
        object.__setattr__(self, "ein", float(g_transform(self.pb1)))
        object.__setattr__(self, "nnt", float(g_transform(self.pb)))


def naive_estimates(data: ObservationSet, mode="adjust_for_instrument") -> NaiveEstimate:
    """Estimators that ignore unmeasured confounding.

    ``crude`` contrasts the exposed and unexposed outcome means. With
    ``adjust_for_instrument`` the instrument is treated as a sufficient
    confounder: within-stratum contrasts are standardised to the instrument
    distribution of the target group.
    """
    mode = NaiveMode(mode)
    c = data.cell_counts().astype(float)
    n_za = c.sum(axis=2)
    if mode is NaiveMode.CRUDE:
        n_a = n_za.sum(axis=0)
        if np.any(n_a == 0):
            raise ValueError("an exposure group is empty")
        diff = float(c[:, 1, 1].sum() / n_a[1] - c[:, 0, 1].sum() / n_a[0])
        return NaiveEstimate(diff, diff, diff)
    if np.any(n_za == 0):
        raise ValueError("an instrument-by-exposure cell is empty")
    means = c[:, :, 1] / n_za
    d = means[:, 1] - means[:, 0]
    pb0 = float(d @ n_za[:, 0] / n_za[:, 0].sum())
    pb1 = float(d @ n_za[:, 1] / n_za[:, 1].sum())
    pb = float(d @ n_za.sum(axis=1) / n_za.sum())
    return NaiveEstimate(pb0, pb1, pb)


# -- instrument strength -----------------------------------------------------

def instrument_strength(data: ObservationSet) -> float:
    """Wald statistic of the instrument coefficient in the logistic exposure model."""
    c = data.cell_counts().sum(axis=2).astype(float)  # [z, a]
    n_z = c.sum(axis=1)
    p = c[:, 1] / n_z
    if np.any((p == 0) | (p == 1)):
        raise SeparationError("exposure is constant within an instrument level")
    gamma1 = float(logit(p[1]) - logit(p[0]))
    se = float(np.sqrt(np.sum(1.0 / (n_z * p * (1 - p)))))
    return gamma1 / se
