"""The four ways of choosing the shrinkage factor g, and the induced
posterior over g.

Everything conditions on the sufficient statistics through three scalars:
the misfit quad_form = (beta_hat - gamma)' X'X (beta_hat - gamma), the
residual total resid_plus_b = S + b, and their dimensionless combination

    u = (g + 1)(S + b) / ((g + 1)(S + b) + quad_form),

which maps g in [0, inf) monotonically onto [u_floor, 1) with
u_floor = (S + b) / (S + b + quad_form).  Working in u keeps every density
bounded on a finite interval, so the data-dependent regimes (hyper-g,
Zellner-Siow) are integrated on deterministic u-grids in log space.

Regimes:
  * FixedG: deterministic g_n (a number, or the unit-information rule g = n).
  * EmpiricalBayesG: g maximizes the marginal likelihood; the argmax has a
    closed form and the posterior over g is a point mass there.
  * HyperG(c): prior (g + 1)^(-c/2); the u-posterior is a Beta law
    truncated to (u_floor, 1).
  * ZellnerSiowG: inverse-gamma prior g ~ IG(1/2, n/2); the u-posterior has
    an extra essential decay at u_floor and is handled on a hybrid grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .numerics import beta_quantile, log_beta_cdf, log_sum_exp

__all__ = [
    "FixedG",
    "EmpiricalBayesG",
    "HyperG",
    "ZellnerSiowG",
    "u_from_g",
    "g_from_u",
    "eb_ghat",
    "log_marginal_likelihood_g",
    "hyperg_log_density_u",
    "zs_log_density_u",
    "GPosterior",
    "build_g_posterior",
    "posterior_expectation_g",
]


# ---------------------------------------------------------------------------
# regime declarations


@dataclass(frozen=True)
class FixedG:
    """Deterministic g sequence: rule 'n' (unit information) or a constant."""

    rule: Union[str, float] = "n"

    def __post_init__(self):
        if self.rule != "n":
            if not isinstance(self.rule, (int, float)) or isinstance(self.rule, bool):
                raise ValueError(f"fixed g rule must be 'n' or a number, got {self.rule!r}")
            if float(self.rule) < 0:
                raise ValueError(f"fixed g must be >= 0, got {self.rule}")
            object.__setattr__(self, "rule", float(self.rule))

    def g_at(self, n: int) -> float:
        return float(n) if self.rule == "n" else float(self.rule)


@dataclass(frozen=True)
class EmpiricalBayesG:
    """g set to the marginal-likelihood maximizer."""


@dataclass(frozen=True)
class HyperG:
    """Prior density proportional to (g + 1)^(-c/2) on g > 0."""

    c: float = 3.0

    def __post_init__(self):
        if not (self.c > 2.0):
            raise ValueError(f"hyper-g prior is proper only for c > 2, got c={self.c}")


@dataclass(frozen=True)
class ZellnerSiowG:
    """Prior g ~ InverseGamma(1/2, n/2), i.e. density proportional to
    g^(-3/2) exp(-n / (2 g))."""


# ---------------------------------------------------------------------------
# the u <-> g reparameterization


def u_from_g(g, u_floor: float):
    """Map g >= 0 to u in [u_floor, 1)."""
    g = np.asarray(g, dtype=float)
    w = u_floor
    out = (g + 1.0) * w / ((g + 1.0) * w + (1.0 - w))
    return out if out.ndim else float(out)


def g_from_u(u, u_floor: float):
    """Inverse of u_from_g; u must lie in [u_floor, 1)."""
    u = np.asarray(u, dtype=float)
    w = u_floor
    out = (u - w) / (w * (1.0 - u))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# marginal likelihood in g and the empirical-Bayes maximizer


def log_marginal_likelihood_g(g, n: int, p: int, a: float, resid_plus_b: float, quad_form: float):
    """log marginal likelihood of g (up to a g-free constant):

        (n - p + a - 2)/2 * log(g + 1) - (n + a - 2)/2 * log((g + 1)(S + b) + T)
    """
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("g must be >= 0")
    out = 0.5 * (n - p + a - 2.0) * np.log1p(g) - 0.5 * (n + a - 2.0) * np.log(
        (g + 1.0) * resid_plus_b + quad_form
    )
    return out if out.ndim else float(out)


def eb_ghat(n: int, p: int, a: float, resid_plus_b: float, quad_form: float) -> float:
    """Closed-form marginal-likelihood maximizer over g >= 0:

        max(0, (n - p + a - 2) / (S + b) * (T / p) - 1).
    """
    if n - p + a - 2.0 <= 0:
        raise ValueError(f"empirical Bayes needs n - p + a - 2 > 0, got n={n}, p={p}, a={a}")
    if resid_plus_b <= 0:
        raise ValueError("resid_plus_b must be > 0")
    return max(0.0, (n - p + a - 2.0) / resid_plus_b * (quad_form / p) - 1.0)


# ---------------------------------------------------------------------------
# unnormalized posterior log densities in the u domain


def hyperg_log_density_u(u, n: int, p: int, a: float, c: float, u_floor: float):
    """Unnormalized log posterior density of u under the hyper-g prior: a
    Beta((n - p + a - c)/2, (p + c - 2)/2) kernel restricted to
    (u_floor, 1); -inf outside."""
    u = np.asarray(u, dtype=float)
    e1 = 0.5 * (n - p + a - c) - 1.0
    e2 = 0.5 * (p + c) - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = e1 * np.log(u) + e2 * np.log1p(-u)
    out = np.where((u > u_floor) & (u < 1.0), out, -np.inf)
    return out if out.ndim else float(out)


def zs_log_density_u(
    u, n: int, p: int, a: float, u_floor: float
) -> np.ndarray:
    """Unnormalized log posterior density of u under the Zellner-Siow prior:

        (n - p + a - 2)/2 * log u + (p - 4)/2 * log(1 - u)
        - 3/2 * log g(u) - n / (2 g(u)),

    with g(u) = (u - u_floor) / (u_floor (1 - u)); -inf outside
    (u_floor, 1)."""
    u = np.asarray(u, dtype=float)
    w = u_floor
    inside = (u > w) & (u < 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = u - w
        log_g = np.log(s) - np.log(w) - np.log1p(-u)
        out = (
            0.5 * (n - p + a - 2.0) * np.log(u)
            + 0.5 * (p - 4.0) * np.log1p(-u)
            - 1.5 * log_g
            - 0.5 * n * w * (1.0 - u) / s
        )
    out = np.where(inside, out, -np.inf)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# posterior over g, represented on a u-grid


@dataclass(frozen=True)
class GPosterior:
    """Posterior distribution of g given the data, parameterized in u.

    kind 'point' (fixed or empirical-Bayes g) stores g_star; the continuous
    kinds ('hyper_g', 'zellner_siow') store u_nodes with normalized node
    weights (for expectations) and a normalized piecewise-linear cdf (for
    quantiles and inverse-cdf sampling).  log_norm is the log of the raw
    trapezoid mass before normalization, useful for diagnosing underflow.
    """

    kind: str
    n: int
    p: int
    a: float
    b: float
    u_floor: float
    resid_plus_b: float
    quad_form: float
    g_star: Optional[float] = None
    u_nodes: Optional[np.ndarray] = None
    node_weights: Optional[np.ndarray] = None
    cdf: Optional[np.ndarray] = None
    log_norm: Optional[float] = None

    @property
    def is_point(self) -> bool:
        return self.kind == "point"

    def quadrature(self):
        """(g_nodes, weights) for posterior averages over g."""
        if self.is_point:
            return np.array([self.g_star]), np.array([1.0])
        g = g_from_u(self.u_nodes, self.u_floor)
        return g, self.node_weights

    def mean_u(self) -> float:
        if self.is_point:
            return u_from_g(self.g_star, self.u_floor)
        return float(self.node_weights @ self.u_nodes)

    def quantile_u(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantile levels must lie in [0, 1]")
        if self.is_point:
            out = np.full(q.shape, u_from_g(self.g_star, self.u_floor))
        else:
            out = np.interp(q, self.cdf, self.u_nodes)
        return out if out.ndim else float(out)

    def sample_u(self, rng, size: int) -> np.ndarray:
        if self.is_point:
            return np.full(size, u_from_g(self.g_star, self.u_floor))
        return np.interp(rng.uniform(size=size), self.cdf, self.u_nodes)

    def sample_g(self, rng, size: int) -> np.ndarray:
        u = self.sample_u(rng, size)
        return np.asarray(g_from_u(u, self.u_floor))


def _grid_posterior(kind, u_nodes, log_density, stats_n, stats_p, a, b, u_floor, resid_plus_b, quad_form):
    """Assemble a GPosterior from nodes and unnormalized log densities."""
    f = np.asarray(log_density, dtype=float)
    if np.any(np.isnan(f)):
        raise ValueError("posterior density evaluated to NaN on the u-grid")
    du = np.diff(u_nodes)
    # log trapezoid masses per segment
    seg = np.logaddexp(f[:-1], f[1:]) + np.log(du / 2.0)
    log_norm = log_sum_exp(seg)
    if not np.isfinite(log_norm):
        raise ValueError(
            "posterior mass underflowed on the u-grid; the distribution is "
            f"numerically degenerate at u_floor={u_floor!r}"
        )
    # node weights: density times half-cell width, normalized
    cell = np.empty_like(u_nodes)
    cell[0] = du[0] / 2.0
    cell[-1] = du[-1] / 2.0
    cell[1:-1] = (du[:-1] + du[1:]) / 2.0
    with np.errstate(divide="ignore"):
        logw = f + np.log(cell)
    logw -= log_sum_exp(logw)
    weights = np.exp(logw)
    weights /= weights.sum()
    cdf = np.concatenate([[0.0], np.cumsum(np.exp(seg - log_norm))])
    cdf /= cdf[-1]
    return GPosterior(
        kind=kind,
        n=stats_n,
        p=stats_p,
        a=a,
        b=b,
        u_floor=u_floor,
        resid_plus_b=resid_plus_b,
        quad_form=quad_form,
        u_nodes=u_nodes,
        node_weights=weights,
        cdf=cdf,
        log_norm=float(log_norm),
    )


def _conditional_mass_grid(grid_size: int) -> np.ndarray:
    """Conditional-probability levels in (0, 1): uniform in the bulk with
    geometric refinement toward both endpoints.  The refinement keeps the
    trapezoid/endpoint rules second-order accurate where the quantile map
    steepens (1/density grows without bound at the support edges)."""
    edge = max(8, grid_size // 4)
    depth = 0.05
    lo = np.geomspace(1e-7, depth, edge)
    mid = np.linspace(depth, 1.0 - depth, grid_size - 2 * edge + 2)
    hi = 1.0 - np.geomspace(1e-7, depth, edge)[::-1]
    return np.unique(np.concatenate([lo, mid, hi]))


def _quantile_spaced_nodes(u_floor, shape1, shape2, grid_size):
    """Nodes at Beta(shape1, shape2) quantiles of conditional probability
    levels above u_floor (edge-refined, see _conditional_mass_grid)."""
    log_fw = log_beta_cdf(u_floor, shape1, shape2)
    fw = math.exp(log_fw)
    if 1.0 - fw <= 0.0:
        raise ValueError(
            "posterior mass above the truncation point underflowed; the "
            f"distribution is numerically degenerate at u_floor={u_floor!r}"
        )
    q = fw + (1.0 - fw) * _conditional_mass_grid(grid_size)
    u = beta_quantile(q, shape1, shape2)
    lo = u_floor + (1.0 - u_floor) * 1e-13
    return np.clip(u, lo, 1.0 - 1e-12)


def _beta_mass_posterior(kind, u_nodes, shape1, shape2, stats_n, stats_p, a, b, u_floor, resid_plus_b, quad_form):
    """Assemble a GPosterior whose density is an exact truncated
    Beta(shape1, shape2): segment masses come from the incomplete-beta CDF
    (evaluated from whichever tail is numerically stable), so weights and
    cdf carry no quadrature error beyond node placement."""
    lower = np.array([math.exp(log_beta_cdf(x, shape1, shape2)) for x in u_nodes])
    upper = np.array([math.exp(log_beta_cdf(1.0 - x, shape2, shape1)) for x in u_nodes])
    mass = np.where(lower[1:] < 0.5, lower[1:] - lower[:-1], upper[:-1] - upper[1:])
    mass = np.clip(mass, 0.0, None)
    total = float(mass.sum())
    if total <= 0.0:
        raise ValueError(
            "posterior mass above the truncation point underflowed; the "
            f"distribution is numerically degenerate at u_floor={u_floor!r}"
        )
    weights = np.empty_like(u_nodes)
    weights[0] = mass[0] / 2.0
    weights[-1] = mass[-1] / 2.0
    weights[1:-1] = (mass[:-1] + mass[1:]) / 2.0
    weights /= weights.sum()
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    cdf /= cdf[-1]
    return GPosterior(
        kind=kind,
        n=stats_n,
        p=stats_p,
        a=a,
        b=b,
        u_floor=u_floor,
        resid_plus_b=resid_plus_b,
        quad_form=quad_form,
        u_nodes=u_nodes,
        node_weights=weights,
        cdf=cdf,
        log_norm=math.log(total),
    )


def build_g_posterior(regime, stats, quad_form: float, prior, grid_size: int = 512) -> GPosterior:
    """Posterior over g for one dataset.

    ``stats`` needs fields n, p, resid_ss; ``prior`` needs a, b.  For the
    continuous regimes the density is tabulated on grid_size u-nodes placed
    at quantiles of a matched Beta envelope (plus, for Zellner-Siow, a
    geometric ladder resolving the essential singularity at u_floor).
    """
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    n, p, a, b = stats.n, stats.p, prior.a, prior.b
    if quad_form < 0:
        raise ValueError("quad_form must be >= 0")
    resid_plus_b = stats.resid_ss + b
    if resid_plus_b <= 0:
        raise ValueError("S + b must be > 0")
    u_floor = resid_plus_b / (resid_plus_b + quad_form)

    def point(g_star: float) -> GPosterior:
        return GPosterior(
            kind="point",
            n=n,
            p=p,
            a=a,
            b=b,
            u_floor=u_floor,
            resid_plus_b=resid_plus_b,
            quad_form=quad_form,
            g_star=float(g_star),
        )

    if isinstance(regime, FixedG):
        return point(regime.g_at(n))
    if isinstance(regime, EmpiricalBayesG):
        return point(eb_ghat(n, p, a, resid_plus_b, quad_form))
    if isinstance(regime, HyperG):
        c = regime.c
        shape1 = 0.5 * (n - p + a - c)
        shape2 = 0.5 * (p + c - 2.0)
        if shape1 <= 0 or shape2 <= 0:
            raise ValueError(
                "hyper-g posterior is improper: need (n - p + a - c)/2 > 0 and "
                f"(p + c - 2)/2 > 0, got n={n}, p={p}, a={a}, c={c}"
            )
        u = _quantile_spaced_nodes(u_floor, shape1, shape2, grid_size)
        u = np.unique(u)
        if u.size < 2:
            raise ValueError(
                "posterior mass above the truncation point underflowed; the "
                f"distribution is numerically degenerate at u_floor={u_floor!r}"
            )
        f = hyperg_log_density_u(u, n, p, a, c, u_floor)
        if np.any(np.isnan(f)):
            raise ValueError("hyper-g log-density produced NaN on the node grid")
        # the truncated density IS a Beta(shape1, shape2) kernel, so segment
        # masses from the incomplete-beta CDF are exact
        return _beta_mass_posterior(
            "hyper_g", u, shape1, shape2, n, p, a, b, u_floor, resid_plus_b, quad_form
        )
    if isinstance(regime, ZellnerSiowG):
        shape1 = 0.5 * (n - p + a)
        shape2 = 0.5 * (p - 2.0)
        if shape1 > 0 and shape2 > 0:
            base = _quantile_spaced_nodes(u_floor, shape1, shape2, grid_size)
        else:
            # tiny p: no usable Beta envelope, fall back to uniform nodes
            base = u_floor + (1.0 - u_floor - 1e-12) * np.linspace(1e-7, 1.0, grid_size)
        # geometric ladder from just above u_floor up to the first envelope
        # node, resolving exp(-n u_floor (1 - u) / (2 (u - u_floor)))
        first = float(np.min(base))
        s0 = u_floor * 1e-12
        s1 = first - u_floor
        if s1 > s0 > 0:
            k = max(grid_size // 8, 32)
            ladder = u_floor + np.geomspace(s0, s1, k)[:-1]
        else:
            ladder = np.empty(0)
        u = np.unique(np.concatenate([ladder, base]))
        f = zs_log_density_u(u, n, p, a, u_floor)
        if np.all(np.isinf(f)):
            raise ValueError(
                "posterior mass above the truncation point underflowed; the "
                f"distribution is numerically degenerate at u_floor={u_floor!r}"
            )
        return _grid_posterior("zellner_siow", u, f, n, p, a, b, u_floor, resid_plus_b, quad_form)
    raise ValueError(f"unknown regime {regime!r}")


def posterior_expectation_g(post: GPosterior, f: Callable) -> float:
    """E[f(g) | data] under the g-posterior; f must accept an ndarray."""
    nodes, weights = post.quadrature()
    vals = np.asarray(f(nodes), dtype=float)
    if vals.shape != nodes.shape:
        raise ValueError("integrand must map the g-node array to a same-shape array")
    return float(weights @ vals)
