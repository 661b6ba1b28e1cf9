"""Link functions for the double-logit and double-probit models.

Everything here accepts scalars or numpy arrays and returns the same shape.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy import special

__all__ = [
    "DomainError",
    "LinkKind",
    "expit",
    "logit",
    "norm_cdf",
    "norm_pdf",
    "norm_quantile",
    "g_transform",
    "link_eval",
    "Link",
    "get_link",
]


class DomainError(ValueError):
    """Argument outside the domain of a link function."""


class LinkKind(str, enum.Enum):
    LOGIT = "logit"
    PROBIT = "probit"

    @classmethod
    def parse(cls, value: "str | LinkKind") -> "LinkKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown link {value!r}; expected 'logit' or 'probit'") from None


def _out(x, template):
    if np.ndim(template) == 0:
        return float(x)
    return x


def _check_open_unit(p, name):
    p = np.asarray(p, dtype=float)
    bad = ~((p > 0.0) & (p < 1.0))
    if np.any(bad):
        raise DomainError(f"{name} requires p in (0, 1); got {p[bad].ravel()[:5].tolist()}")
    return p


def expit(x):
    """Logistic function 1 / (1 + exp(-x)).

    Written piecewise so neither branch can overflow.
    """
    # (1 - exp(-x))^-1, a form that circulates, is wrong: it does not invert logit.
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _out(out, x)


def logit(p):
    p_arr = _check_open_unit(p, "logit")
    return _out(np.log(p_arr) - np.log1p(-p_arr), p)


def norm_cdf(x):
    return _out(special.ndtr(np.asarray(x, dtype=float)), x)


def norm_pdf(x):
    arr = np.asarray(x, dtype=float)
    return _out(np.exp(-0.5 * arr * arr) / np.sqrt(2.0 * np.pi), x)


def norm_quantile(p):
    p_arr = _check_open_unit(p, "norm_quantile")
    return _out(special.ndtri(p_arr), p)


def g_transform(pb):
    """Map an exposure benefit to its efficacy index: 1/pb if pb > 0, else +inf.

    NaN stays NaN so unavailable benefits do not masquerade as infinite indices.
    """
    arr = np.asarray(pb, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(arr > 0, 1.0 / np.where(arr > 0, arr, 1.0), np.inf)
    out = np.where(np.isnan(arr), np.nan, out)
    return _out(out, pb)


def _expit_derivative(x):
    p = np.asarray(expit(x), dtype=float)
    return _out(p * (1.0 - p), x)


class Link:
    """Forward link, its inverse and the derivative of the inverse."""

    def __init__(self, kind: LinkKind, forward, inverse, inverse_derivative):
        self.kind = kind
        self.forward = forward
        self.inverse = inverse
        self.inverse_derivative = inverse_derivative

    def __repr__(self):
        return f"Link({self.kind.value})"


_LINKS = {
    LinkKind.LOGIT: Link(LinkKind.LOGIT, logit, expit, _expit_derivative),
    LinkKind.PROBIT: Link(LinkKind.PROBIT, norm_quantile, norm_cdf, norm_pdf),
}


def get_link(kind: "LinkKind | str") -> Link:
    return _LINKS[LinkKind.parse(kind)]


def link_eval(kind: "LinkKind | str", direction: str, x):
    link = get_link(kind)
    try:
        fn = {
            "forward": link.forward,
            "inverse": link.inverse,
            "inverse_derivative": link.inverse_derivative,
        }[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}") from None
    return fn(x)
