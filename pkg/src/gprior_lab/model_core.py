"""Model configuration and sufficient statistics.

The sampling model is y = X beta + e with e ~ N(0, sigma^2 I_n), reduced to
its sufficient statistics: the least-squares estimate beta_hat ~
N(beta, sigma^2 (X'X)^{-1}) and the residual sum of squares
S ~ sigma^2 * chisq(n - p), independent.  The conjugate prior is
beta | sigma^2 ~ N(gamma, g sigma^2 (X'X)^{-1}) together with
sigma^2 ~ InverseGamma(a/2, b/2).

Designs are synthesized directly through the spectrum of X'X: an
orthonormal eigenbasis Q and eigenvalues e_i = n * d_i, so experiments
scale to thousands of regressors without forming X.  Scenarios (dimension
rule, coefficient rules, prior, design, g regime) are dataclasses loadable
from a small fail-closed JSON schema, documented in the README.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .numerics import RngStream
from .g_regimes import FixedG, EmpiricalBayesG, HyperG, ZellnerSiowG

SCHEMA_VERSION = 1

__all__ = [
    "ScenarioError",
    "PriorConstants",
    "DesignSpec",
    "GramSpectrum",
    "build_design",
    "ZerosRule",
    "ConstantRule",
    "FirstMRule",
    "ScaledNormRule",
    "DecayingRule",
    "LinearDimension",
    "SqrtDimension",
    "FixedDimension",
    "Scenario",
    "SufficientStats",
    "Truth",
    "Diagnostics",
    "simulate_stats",
    "diagnostics",
    "mle_sup_error",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "save_scenario",
]


class ScenarioError(ValueError):
    """Invalid scenario configuration or JSON document."""


# ---------------------------------------------------------------------------
# prior and design


@dataclass(frozen=True)
class PriorConstants:
    """Variance prior constants: sigma^2 ~ InverseGamma(a/2, b/2)."""

    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.a < -2.0:
            raise ScenarioError(f"prior constant a must be >= -2, got {self.a}")
        if self.b < 0.0:
            raise ScenarioError(f"prior constant b must be >= 0, got {self.b}")


@dataclass(frozen=True)
class DesignSpec:
    """How X'X is synthesized: 'orthogonal' gives X'X = n I; 'diagonal'
    gives eigenvalues n * d_i with d_i from ``spectrum`` (tiled to length p)
    and a seeded random orthonormal eigenbasis.

    lambda_min/lambda_max bound the eigenvalues of n (X'X)^{-1}, i.e.
    d_i must lie in [1/lambda_max, 1/lambda_min].
    """

    kind: str = "orthogonal"
    spectrum: Optional[tuple] = None
    lambda_min: float = 1.0
    lambda_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("orthogonal", "diagonal"):
            raise ScenarioError(f"unknown design kind {self.kind!r}")
        if not (0 < self.lambda_min <= self.lambda_max):
            raise ScenarioError("need 0 < lambda_min <= lambda_max")
        if self.kind == "diagonal":
            if not self.spectrum:
                raise ScenarioError("diagonal design requires a spectrum")
            object.__setattr__(self, "spectrum", tuple(float(d) for d in self.spectrum))
            lo, hi = 1.0 / self.lambda_max, 1.0 / self.lambda_min
            for d in self.spectrum:
                if not (lo - 1e-12 <= d <= hi + 1e-12):
                    raise ScenarioError(
                        f"spectrum entry {d} outside [1/lambda_max, 1/lambda_min] = [{lo}, {hi}]"
                    )
        elif self.spectrum is not None:
            raise ScenarioError("orthogonal design takes no spectrum")

    @classmethod
    def orthogonal(cls) -> "DesignSpec":
        return cls(kind="orthogonal")

    @classmethod
    def diagonal(cls, spectrum, lambda_min: float, lambda_max: float) -> "DesignSpec":
        return cls(kind="diagonal", spectrum=tuple(spectrum), lambda_min=lambda_min, lambda_max=lambda_max)


@dataclass(frozen=True)
class GramSpectrum:
    """Eigendecomposition of X'X: eigenvalues, and eigenbasis q (None means
    the identity, the axis-aligned case)."""

    q: Optional[np.ndarray]
    eigenvalues: np.ndarray

    @property
    def p(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def axis_aligned(self) -> bool:
        return self.q is None


def build_design(spec: DesignSpec, n: int, p: int, rng: RngStream) -> GramSpectrum:
    """Synthesize the gram spectrum of an n x p design. Deterministic given
    the rng stream; the random part is only the eigenbasis of 'diagonal'
    designs."""
    if p >= n:
        raise ScenarioError(f"need p < n, got p={p}, n={n}")
    if p < 1:
        raise ScenarioError(f"need p >= 1, got p={p}")
    if spec.kind == "orthogonal":
        return GramSpectrum(q=None, eigenvalues=np.full(p, float(n)))
    base = np.array(spec.spectrum, dtype=float)
    reps = int(np.ceil(p / base.size))
    d = np.tile(base, reps)[:p]
    q = _haar_orthonormal(p, rng)
    return GramSpectrum(q=q, eigenvalues=n * d)


def _haar_orthonormal(p: int, rng: RngStream) -> np.ndarray:
    z = rng.standard_normal((p, p))
    q, r = np.linalg.qr(z)
    # fix signs so the factorization (hence the basis) is unique
    q = q * np.sign(np.diag(r))
    return q


# ---------------------------------------------------------------------------
# coefficient rules (closed vocabulary, shared by beta0 and gamma)


@dataclass(frozen=True)
class ZerosRule:
    kind: str = field(default="zeros", init=False)

    def values(self, n: int, p: int) -> np.ndarray:
        return np.zeros(p)

    def to_json(self):
        return {"kind": "zeros"}


@dataclass(frozen=True)
class ConstantRule:
    v: float
    kind: str = field(default="constant", init=False)

    def values(self, n: int, p: int) -> np.ndarray:
        return np.full(p, float(self.v))

    def to_json(self):
        return {"kind": "constant", "v": self.v}


@dataclass(frozen=True)
class FirstMRule:
    """First m coordinates set to v, the rest zero."""

    v: float
    m: int
    kind: str = field(default="first_m", init=False)

    def __post_init__(self):
        if self.m < 0:
            raise ScenarioError("first_m count must be >= 0")

    def values(self, n: int, p: int) -> np.ndarray:
        if self.m > p:
            raise ScenarioError(f"first_m rule needs p >= {self.m}, got p={p}")
        out = np.zeros(p)
        out[: self.m] = float(self.v)
        return out

    def to_json(self):
        return {"kind": "first_m", "v": self.v, "m": self.m}


@dataclass(frozen=True)
class ScaledNormRule:
    """Equal coordinates scaled so the squared 2-norm hits a target, either
    a constant or 'sqrt_n' (target grows like sqrt(n))."""

    target_sq_norm: Union[float, str]
    kind: str = field(default="scaled_norm", init=False)

    def __post_init__(self):
        if isinstance(self.target_sq_norm, str):
            if self.target_sq_norm != "sqrt_n":
                raise ScenarioError(
                    f"scaled_norm target must be a number or 'sqrt_n', got {self.target_sq_norm!r}"
                )
        elif self.target_sq_norm < 0:
            raise ScenarioError("scaled_norm target must be >= 0")

    def _target(self, n: int) -> float:
        if self.target_sq_norm == "sqrt_n":
            return math.sqrt(n)
        return float(self.target_sq_norm)

    def values(self, n: int, p: int) -> np.ndarray:
        return np.full(p, math.sqrt(self._target(n) / p))

    def to_json(self):
        return {"kind": "scaled_norm", "target_sq_norm": self.target_sq_norm}


@dataclass(frozen=True)
class DecayingRule:
    """Coordinate i gets c * (i + 1)^(-rate)."""

    c: float
    rate: float
    kind: str = field(default="decaying", init=False)

    def values(self, n: int, p: int) -> np.ndarray:
        return float(self.c) * np.arange(1, p + 1, dtype=float) ** (-float(self.rate))

    def to_json(self):
        return {"kind": "decaying", "c": self.c, "rate": self.rate}


_COEFF_RULES = {
    "zeros": ZerosRule,
    "constant": ConstantRule,
    "first_m": FirstMRule,
    "scaled_norm": ScaledNormRule,
    "decaying": DecayingRule,
}


def _coeff_rule_from_json(doc, where: str):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ScenarioError(f"{where}: expected an object with a 'kind' key")
    kind = doc["kind"]
    if kind not in _COEFF_RULES:
        raise ScenarioError(f"{where}: unknown rule kind {kind!r}")
    args = {k: v for k, v in doc.items() if k != "kind"}
    try:
        return _COEFF_RULES[kind](**args)
    except TypeError as exc:
        raise ScenarioError(f"{where}: bad arguments for {kind!r}: {exc}") from None


# ---------------------------------------------------------------------------
# dimension rules


@dataclass(frozen=True)
class LinearDimension:
    """p_n = max(1, floor(alpha * n)), capped at n - 1."""

    kind: str = field(default="linear", init=False)

    def p_at(self, n: int, alpha: float) -> int:
        return min(n - 1, max(1, int(math.floor(alpha * n))))

    def to_json(self):
        return "linear"


@dataclass(frozen=True)
class SqrtDimension:
    """p_n = ceil(sqrt(n)), capped at n - 1 (an alpha = 0 rule)."""

    kind: str = field(default="sqrt", init=False)

    def p_at(self, n: int, alpha: float) -> int:
        return min(n - 1, max(1, int(math.ceil(math.sqrt(n)))))

    def to_json(self):
        return "sqrt"


@dataclass(frozen=True)
class FixedDimension:
    """Constant p_n = m (a fixed-dimension embedding; alpha = 0)."""

    m: int
    kind: str = field(default="fixed", init=False)

    def __post_init__(self):
        if self.m < 1:
            raise ScenarioError("fixed dimension must be >= 1")

    def p_at(self, n: int, alpha: float) -> int:
        if self.m >= n:
            raise ScenarioError(f"fixed dimension m={self.m} needs n > m, got n={n}")
        return self.m

    def to_json(self):
        return {"kind": "fixed", "m": self.m}


def _dim_rule_from_json(doc, where: str):
    if doc in ("linear", {"kind": "linear"}):
        return LinearDimension()
    if doc in ("sqrt", {"kind": "sqrt"}):
        return SqrtDimension()
    if isinstance(doc, dict) and doc.get("kind") == "fixed":
        extra = set(doc) - {"kind", "m"}
        if extra:
            raise ScenarioError(f"{where}: unknown keys {sorted(extra)}")
        if "m" not in doc:
            raise ScenarioError(f"{where}: fixed dimension rule needs 'm'")
        return FixedDimension(m=int(doc["m"]))
    raise ScenarioError(f"{where}: unknown dimension rule {doc!r}")


# ---------------------------------------------------------------------------
# regime JSON (the regime classes themselves live in g_regimes)


def _regime_from_json(doc, where: str):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ScenarioError(f"{where}: expected an object with a 'kind' key")
    kind = doc["kind"]
    extra = set(doc) - {"kind", "rule", "c"}
    if extra:
        raise ScenarioError(f"{where}: unknown keys {sorted(extra)}")
    if kind == "fixed":
        if "rule" not in doc:
            raise ScenarioError(f"{where}: fixed regime needs a 'rule' ('n' or a number)")
        rule = doc["rule"]
        if rule == "n":
            return FixedG(rule="n")
        if isinstance(rule, (int, float)) and not isinstance(rule, bool):
            return FixedG(rule=float(rule))
        raise ScenarioError(f"{where}: fixed g rule must be 'n' or a number, got {rule!r}")
    if kind == "eb":
        if "rule" in doc or "c" in doc:
            raise ScenarioError(f"{where}: eb regime takes no parameters")
        return EmpiricalBayesG()
    if kind == "hyper_g":
        if "rule" in doc:
            raise ScenarioError(f"{where}: hyper_g regime takes no 'rule'")
        return HyperG(c=float(doc.get("c", 3.0)))
    if kind == "zs":
        if "rule" in doc or "c" in doc:
            raise ScenarioError(f"{where}: zs regime takes no parameters")
        return ZellnerSiowG()
    raise ScenarioError(f"{where}: unknown regime kind {kind!r}")


def _regime_to_json(regime):
    if isinstance(regime, FixedG):
        return {"kind": "fixed", "rule": regime.rule}
    if isinstance(regime, EmpiricalBayesG):
        return {"kind": "eb"}
    if isinstance(regime, HyperG):
        return {"kind": "hyper_g", "c": regime.c}
    if isinstance(regime, ZellnerSiowG):
        return {"kind": "zs"}
    raise ScenarioError(f"cannot serialize regime {regime!r}")


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    """A full experiment configuration; every quantity that varies with n is
    a rule so one scenario spans the whole n-grid."""

    name: str
    alpha: float
    design: DesignSpec
    beta0_rule: object
    gamma_rule: object
    sigma0_sq: float
    prior: PriorConstants
    regime: object
    p_rule: object = field(default_factory=LinearDimension)

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise ScenarioError(
                f"alpha={self.alpha} is invalid: the dimension fraction must satisfy "
                "0 <= alpha < 1 so that p_n < n for large n (A2)"
            )
        if self.sigma0_sq <= 0.0:
            raise ScenarioError(f"sigma0_sq must be > 0, got {self.sigma0_sq}")
        if not self.name:
            raise ScenarioError("scenario name must be nonempty")

    def p_at(self, n: int) -> int:
        if n < 2:
            raise ScenarioError(f"need n >= 2, got n={n}")
        p = self.p_rule.p_at(n, self.alpha)
        if not (1 <= p < n):
            raise ScenarioError(f"dimension rule produced p={p} outside [1, n) at n={n}")
        return p

    def beta0_at(self, n: int) -> np.ndarray:
        return self.beta0_rule.values(n, self.p_at(n))

    def gamma_at(self, n: int) -> np.ndarray:
        return self.gamma_rule.values(n, self.p_at(n))

    def truth_at(self, n: int) -> "Truth":
        return Truth(beta0=self.beta0_at(n), sigma0_sq=self.sigma0_sq)

    def validate_grid(self, n_grid) -> None:
        """Grid-wide checks: p nondecreasing, p < n, and regime propriety
        constraints at every evaluated n."""
        if len(n_grid) == 0:
            raise ScenarioError("empty n grid")
        if sorted(n_grid) != list(n_grid):
            raise ScenarioError("n grid must be increasing")
        prev_p = 0
        a = self.prior.a
        for n in n_grid:
            p = self.p_at(n)
            if p < prev_p:
                raise ScenarioError(f"dimension rule is not nondecreasing at n={n}")
            prev_p = p
            if n + a - 2 <= 0:
                raise ScenarioError(f"variance posterior needs n + a - 2 > 0; fails at n={n}")
            self.beta0_at(n)
            self.gamma_at(n)
            regime = self.regime
            if isinstance(regime, EmpiricalBayesG) and n - p + a - 2 <= 0:
                raise ScenarioError(f"eb regime needs n - p + a - 2 > 0; fails at n={n}")
            if isinstance(regime, HyperG):
                if p + regime.c - 2 <= 0 or n - p + a - regime.c <= 0:
                    raise ScenarioError(
                        f"hyper_g posterior propriety needs (p + c - 2)/2 > 0 and "
                        f"(n - p + a - c)/2 > 0; fails at n={n}, p={p}, c={regime.c}"
                    )
            if isinstance(regime, FixedG) and regime.g_at(n) < 0:
                raise ScenarioError(f"fixed g rule produced g < 0 at n={n}")


# ---------------------------------------------------------------------------
# sufficient statistics and truth


@dataclass(frozen=True)
class SufficientStats:
    """(beta_hat, S) plus the gram spectrum they were computed under.
    Arrays are treated as immutable."""

    n: int
    p: int
    beta_hat: np.ndarray
    resid_ss: float
    gram: GramSpectrum

    def __post_init__(self):
        if not (1 <= self.p < self.n):
            raise ScenarioError(f"need 1 <= p < n, got p={self.p}, n={self.n}")
        if self.beta_hat.shape != (self.p,):
            raise ScenarioError("beta_hat must have shape (p,)")
        if self.gram.eigenvalues.shape != (self.p,):
            raise ScenarioError("gram eigenvalues must have shape (p,)")
        if self.resid_ss < 0:
            raise ScenarioError("residual sum of squares must be >= 0")


@dataclass(frozen=True)
class Truth:
    beta0: np.ndarray
    sigma0_sq: float


def simulate_stats(scenario: Scenario, n: int, rng: RngStream, mode: str = "direct") -> SufficientStats:
    """Draw sufficient statistics under the truth (beta0, sigma0_sq).

    'direct' samples beta_hat ~ N(beta0, sigma0^2 (X'X)^{-1}) and
    S ~ sigma0^2 chisq(n - p) straight from their laws; 'full' builds an
    explicit n x p design, simulates y, and reduces it (a cross-check mode
    for moderate n).  The design for a given (master seed, scenario, n) is
    fixed across replications.
    """
    p = scenario.p_at(n)
    design_rng = RngStream(rng.master_seed, (scenario.name, "design", n))
    gram = build_design(scenario.design, n, p, design_rng)
    beta0 = scenario.beta0_at(n)
    sigma0 = math.sqrt(scenario.sigma0_sq)
    if mode == "direct":
        z = rng.standard_normal(p)
        scaled = z / np.sqrt(gram.eigenvalues)
        beta_hat = beta0 + sigma0 * (scaled if gram.q is None else gram.q @ scaled)
        resid = scenario.sigma0_sq * rng.chi_square(n - p)
        return SufficientStats(n=n, p=p, beta_hat=beta_hat, resid_ss=float(resid), gram=gram)
    if mode == "full":
        basis_rng = design_rng.child("basis")
        u, r = np.linalg.qr(basis_rng.standard_normal((n, p)))
        u = u * np.sign(np.diag(r))
        root = np.sqrt(gram.eigenvalues)
        x = u * root if gram.q is None else (u * root) @ gram.q.T
        y = x @ beta0 + sigma0 * rng.standard_normal(n)
        uty = u.T @ y
        coef = uty / root
        beta_hat = coef if gram.q is None else gram.q @ coef
        resid = float(y @ y - uty @ uty)
        return SufficientStats(n=n, p=p, beta_hat=beta_hat, resid_ss=max(resid, 0.0), gram=gram)
    raise ScenarioError(f"unknown simulation mode {mode!r}")


def mle_sup_error(stats: SufficientStats, beta0: np.ndarray) -> float:
    """Sup-norm error of the least-squares estimate."""
    return float(np.max(np.abs(stats.beta_hat - beta0)))


# ---------------------------------------------------------------------------
# diagnostics


def _gram_quadform(gram: GramSpectrum, v: np.ndarray) -> float:
    """v' X'X v through the spectrum."""
    w = v if gram.q is None else gram.q.T @ v
    return float(np.sum(gram.eigenvalues * w * w))


@dataclass(frozen=True)
class Diagnostics:
    """Scalar functionals of (stats, gamma) driving every posterior formula.

    quad_form is the misfit (beta_hat - gamma)' X'X (beta_hat - gamma);
    u_floor is (S + b) / (S + b + quad_form), the left endpoint of the
    u-domain onto which g >= 0 maps.  Truth-dependent fields (offsets and
    expected values under the truth) are None unless a Truth was supplied.
    """

    n: int
    p: int
    quad_form: float
    resid_plus_b: float
    u_floor: float
    offset_sup: Optional[float] = None
    offset_sq: Optional[float] = None
    offset_eigenvalue: Optional[float] = None
    expected_quadform: Optional[float] = None
    _resid_df_scale: Optional[float] = None  # (n - p) sigma0^2 + b, for expected_scale_total

    def scale_total(self, g: float) -> float:
        """S + b + quad_form / (g + 1): twice the variance-posterior scale."""
        if g < 0:
            raise ValueError("g must be >= 0")
        return self.resid_plus_b + self.quad_form / (g + 1.0)

    def expected_scale_total(self, g: float) -> float:
        """Expectation of scale_total under the truth."""
        self._need_truth()
        return self._resid_df_scale + self.expected_quadform / (g + 1.0)

    def g_threshold(self, eps: float) -> float:
        """max(0, ||gamma - beta0||_inf / eps - 1): the g level below which
        prior shrinkage alone moves some coordinate by more than eps."""
        self._need_truth()
        if eps <= 0:
            raise ValueError("eps must be > 0")
        return max(0.0, self.offset_sup / eps - 1.0)

    def u_cutoff_raw(self, eps: float) -> float:
        """Image of g_threshold(eps) in the u domain."""
        self._need_truth()
        if eps <= 0:
            raise ValueError("eps must be > 0")
        r = self.offset_sup / eps
        denom = r * self.resid_plus_b + self.quad_form
        if denom <= 0.0:
            return 0.0
        return r * self.resid_plus_b / denom

    def u_cutoff(self, eps: float) -> float:
        """max(u_floor, u_cutoff_raw(eps)), the usable integration cutoff."""
        return max(self.u_floor, self.u_cutoff_raw(eps))

    def _need_truth(self):
        if self.offset_sup is None:
            raise ValueError("this diagnostic requires the truth (beta0, sigma0_sq)")


def diagnostics(
    stats: SufficientStats,
    gamma: np.ndarray,
    prior: PriorConstants,
    truth: Optional[Truth] = None,
) -> Diagnostics:
    """Compute the scalar diagnostics of one simulated dataset."""
    if gamma.shape != (stats.p,):
        raise ScenarioError("gamma must have shape (p,)")
    quad_form = _gram_quadform(stats.gram, stats.beta_hat - gamma)
    resid_plus_b = stats.resid_ss + prior.b
    u_floor = resid_plus_b / (resid_plus_b + quad_form) if resid_plus_b + quad_form > 0 else 0.0
    if truth is None:
        return Diagnostics(
            n=stats.n,
            p=stats.p,
            quad_form=quad_form,
            resid_plus_b=resid_plus_b,
            u_floor=u_floor,
        )
    diff = gamma - truth.beta0
    offset_sq = float(diff @ diff)
    offset_sup = float(np.max(np.abs(diff))) if diff.size else 0.0
    offset_quad = _gram_quadform(stats.gram, diff)
    if offset_sq > 0 and offset_quad > 0:
        offset_eig = stats.n * offset_sq / offset_quad
    else:
        # offset direction undefined; any admissible eigenvalue works since
        # it only ever multiplies a zero offset
        offset_eig = float(np.mean(stats.n / stats.gram.eigenvalues))
    expected_quadform = stats.p * truth.sigma0_sq + offset_quad
    return Diagnostics(
        n=stats.n,
        p=stats.p,
        quad_form=quad_form,
        resid_plus_b=resid_plus_b,
        u_floor=u_floor,
        offset_sup=offset_sup,
        offset_sq=offset_sq,
        offset_eigenvalue=offset_eig,
        expected_quadform=expected_quadform,
        _resid_df_scale=(stats.n - stats.p) * truth.sigma0_sq + prior.b,
    )


# ---------------------------------------------------------------------------
# JSON schema (versioned, fail-closed)

_SCENARIO_KEYS = {
    "schema_version",
    "name",
    "alpha",
    "design",
    "beta0_rule",
    "gamma_rule",
    "sigma0_sq",
    "prior",
    "regime",
    "p_rule",
}


def scenario_from_dict(doc: dict, default_name: str = "scenario") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    extra = set(doc) - _SCENARIO_KEYS
    if extra:
        raise ScenarioError(f"unknown scenario keys {sorted(extra)}")
    missing = {"schema_version", "alpha", "design", "beta0_rule", "gamma_rule", "sigma0_sq", "prior", "regime"} - set(doc)
    if missing:
        raise ScenarioError(f"missing scenario keys {sorted(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(
            f"unsupported schema_version {doc['schema_version']!r}; this build reads version {SCHEMA_VERSION}"
        )
    design_doc = doc["design"]
    if not isinstance(design_doc, dict) or "kind" not in design_doc:
        raise ScenarioError("design: expected an object with a 'kind' key")
    extra = set(design_doc) - {"kind", "spectrum", "lambda_min", "lambda_max"}
    if extra:
        raise ScenarioError(f"design: unknown keys {sorted(extra)}")
    if design_doc["kind"] == "orthogonal":
        design = DesignSpec.orthogonal()
    else:
        design = DesignSpec(
            kind=design_doc.get("kind", ""),
            spectrum=tuple(design_doc.get("spectrum", ())) or None,
            lambda_min=float(design_doc.get("lambda_min", 1.0)),
            lambda_max=float(design_doc.get("lambda_max", 1.0)),
        )
    prior_doc = doc["prior"]
    if not isinstance(prior_doc, dict) or set(prior_doc) - {"a", "b"}:
        raise ScenarioError("prior: expected an object with keys 'a' and 'b' only")
    prior = PriorConstants(a=float(prior_doc.get("a", 0.0)), b=float(prior_doc.get("b", 0.0)))
    alpha = doc["alpha"]
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
        raise ScenarioError(f"alpha must be a number, got {alpha!r}")
    return Scenario(
        name=str(doc.get("name", default_name)),
        alpha=float(alpha),
        design=design,
        beta0_rule=_coeff_rule_from_json(doc["beta0_rule"], "beta0_rule"),
        gamma_rule=_coeff_rule_from_json(doc["gamma_rule"], "gamma_rule"),
        sigma0_sq=float(doc["sigma0_sq"]),
        prior=prior,
        regime=_regime_from_json(doc["regime"], "regime"),
        p_rule=_dim_rule_from_json(doc.get("p_rule", "linear"), "p_rule"),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    design: dict = {"kind": scenario.design.kind}
    if scenario.design.kind == "diagonal":
        design.update(
            spectrum=list(scenario.design.spectrum),
            lambda_min=scenario.design.lambda_min,
            lambda_max=scenario.design.lambda_max,
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "alpha": scenario.alpha,
        "design": design,
        "beta0_rule": scenario.beta0_rule.to_json(),
        "gamma_rule": scenario.gamma_rule.to_json(),
        "sigma0_sq": scenario.sigma0_sq,
        "prior": {"a": scenario.prior.a, "b": scenario.prior.b},
        "regime": _regime_to_json(scenario.regime),
        "p_rule": scenario.p_rule.to_json(),
    }


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return scenario_from_dict(doc, default_name=path.stem)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n")
