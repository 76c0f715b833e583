"""Rate-function calculus for super/weak Poincaré inequalities.

Conventions
-----------
A *rate function* is a positive non-increasing function of ``r > 0``.  Two
kinds appear:

* super rates ``beta``: for every r, ``mean(f²) ≤ r·energy(f) +
  beta(r)·mean(|f|)²`` — always ``≥ 1`` when sharp (constant test function);
* weak rates ``alpha``: for mean-zero f, ``mean(f²) ≤ alpha(r)·energy(f) +
  r·sup|f|²`` — only the range ``r ∈ (0, 1)`` is informative.

The parametric families here cover everything the power-law potential
models produce:

=============  ==============================  ==========================
family         value at r                      typical source
=============  ==============================  ==========================
ExpPower       exp[c·(1 + r^(-p))]             super rate, steep potential
Poly           c·(1 ∧ r)^(-p)                  super rate, compact domain
LogPower       c1 + c2·[log(1 + 1/r)]^q        weak rate, shallow potential
ConstantRate   c                               weak rate, Poincaré regime
Tabulated      log-log interpolation           measured curves
=============  ==============================  ==========================

Everything downstream (semigroup decay thresholds, kernel bounds,
classification) consumes only ``value``/``log_value`` plus the ``leading``
tag — a pair ``(class, exponent)`` recording the dominant small-r
behaviour, which the composition rules propagate.

The module also owns the *comparison constants* of a collar function
(:func:`comparison_constants`) and the four composition rules that
assemble the sticky process's rate functions from interior and boundary
ones — with boundary diffusion (max form) and without (prefactor form).
All inversions are bisections with absolute tolerance 1e-10 and a 200
iteration cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    MissingConstants,
    NegativeRate,
    NonFinite,
    NonIntegrable,
    NotUltra,
    PhiNotDecaying,
    Unclassified,
    XiNotDecaying,
)
from .model import (
    CollarFunction,
    Interval,
    ModelSpec,
    Strip,
    _check_normal_slope,
    _fd_derivatives,
    _refined_interior_integral,
    default_collar,
    partition_constants,
)

__all__ = [
    "RateFunction",
    "ExpPower",
    "Poly",
    "LogPower",
    "ConstantRate",
    "Tabulated",
    "ComposedRate",
    "rate_from_json",
    "scale_rate",
    "ComparisonConstants",
    "comparison_constants",
    "sp_bound_with_boundary",
    "wp_bound_with_boundary",
    "sp_bound_without_boundary",
    "wp_bound_without_boundary",
    "PowerPotentialRates",
    "power_potential_rates",
    "tail_threshold_rate",
    "sp_tail_bound",
    "sp_rate_from_tail_profile",
    "UltraBound",
    "ultracontractive_bound",
    "decay_profile_from_wp",
    "wp_rate_from_decay_profile",
    "RegimeReport",
    "classify_regime",
    "uniform_integrability_exponent",
]

_BISECT_ATOL = 1e-10
_BISECT_MAXITER = 200


def _as_positive(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"rate functions are defined for finite r > 0, got {r!r}")
    return arr


def _maybe_scalar(out, r):
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class RateFunction:
    """Base class: positive, non-increasing function of r > 0."""

    family = "abstract"
    leading: tuple | None = None  # (class, exponent) of the small-r blowup

    def value(self, r):
        raise NotImplementedError

    def __call__(self, r):
        return self.value(r)

    def log_value(self, r):
        """log(value); overridden where the value itself overflows."""
        with np.errstate(divide="ignore", over="ignore"):
            out = np.log(self.value(r))
        return out

    def is_nonincreasing(self, lo: float = 1e-6, hi: float = 1e3, n: int = 1000) -> bool:
        grid = np.logspace(math.log10(lo), math.log10(hi), n)
        lv = np.asarray(self.log_value(grid))
        return bool(np.all(np.diff(lv) <= 1e-9))

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExpPower(RateFunction):
    """r ↦ exp[c·(1 + r^(-p))], c > 0, p > 0."""

    c: float
    p: float
    family = "exp_power"

    def __post_init__(self):
        if not (self.c > 0 and self.p > 0 and math.isfinite(self.c) and math.isfinite(self.p)):
            raise NegativeRate(f"ExpPower needs c > 0, p > 0, got c={self.c}, p={self.p}")

    @property
    def leading(self):
        return ("exp-power", self.p)

    def log_value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(self.c * (1.0 + r ** (-self.p)), r)

    def value(self, r):
        with np.errstate(over="ignore"):
            return _maybe_scalar(np.exp(self.log_value(_as_positive(r))), r)

    def to_json(self):
        return {"family": "exp_power", "c": self.c, "p": self.p}


@dataclass(frozen=True)
class Poly(RateFunction):
    """r ↦ c·(1 ∧ r)^(-p), c > 0, p ≥ 0."""

    c: float
    p: float
    family = "poly"

    def __post_init__(self):
        if not (self.c > 0 and self.p >= 0 and math.isfinite(self.c) and math.isfinite(self.p)):
            raise NegativeRate(f"Poly needs c > 0, p >= 0, got c={self.c}, p={self.p}")

    @property
    def leading(self):
        return ("poly", self.p) if self.p > 0 else ("constant", 0.0)

    def value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(self.c * np.minimum(1.0, r) ** (-self.p), r)

    def log_value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(math.log(self.c) - self.p * np.log(np.minimum(1.0, r)), r)

    def to_json(self):
        return {"family": "poly", "c": self.c, "p": self.p}


@dataclass(frozen=True)
class LogPower(RateFunction):
    """r ↦ c1 + c2·[log(1 + 1/r)]^q, c1 ≥ 0, c2 > 0, q > 0."""

    c1: float
    c2: float
    q: float
    family = "log_power"

    def __post_init__(self):
        if not (self.c1 >= 0 and self.c2 > 0 and self.q > 0):
            raise NegativeRate(
                f"LogPower needs c1 >= 0, c2 > 0, q > 0, got ({self.c1}, {self.c2}, {self.q})"
            )

    @property
    def leading(self):
        return ("log-power", self.q)

    def value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(self.c1 + self.c2 * np.log1p(1.0 / r) ** self.q, r)

    def to_json(self):
        return {"family": "log_power", "c1": self.c1, "c2": self.c2, "q": self.q}


@dataclass(frozen=True)
class ConstantRate(RateFunction):
    c: float
    family = "constant"

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise NegativeRate(f"ConstantRate needs c > 0, got {self.c}")

    @property
    def leading(self):
        return ("constant", 0.0)

    def value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(np.full_like(r, self.c, dtype=float), r)

    def log_value(self, r):
        r = _as_positive(r)
        return _maybe_scalar(np.full_like(r, math.log(self.c), dtype=float), r)

    def to_json(self):
        return {"family": "constant", "c": self.c}


class Tabulated(RateFunction):
    """Piecewise-linear interpolation of log(value) against log(r).

    Constant extension beyond both table ends.  The table must be positive
    and non-increasing (:class:`NegativeRate` otherwise).
    """

    family = "tabulated"
    leading = None

    def __init__(self, r_grid, values=None, log_values=None):
        r_grid = np.asarray(r_grid, dtype=float)
        if r_grid.ndim != 1 or r_grid.size < 2 or np.any(np.diff(r_grid) <= 0) or np.any(r_grid <= 0):
            raise NegativeRate("Tabulated needs a strictly increasing positive r grid")
        if log_values is None:
            values = np.asarray(values, dtype=float)
            if np.any(values <= 0) or not np.all(np.isfinite(values)):
                raise NegativeRate("Tabulated needs positive finite values")
            log_values = np.log(values)
        else:
            log_values = np.asarray(log_values, dtype=float)
        if log_values.shape != r_grid.shape:
            raise NegativeRate("Tabulated grid/value length mismatch")
        if np.any(np.diff(log_values) > 1e-9):
            raise NegativeRate("Tabulated values must be non-increasing in r")
        self.r_grid = r_grid
        self.logs = log_values

    def log_value(self, r):
        r = _as_positive(r)
        out = np.interp(np.log(r), np.log(self.r_grid), self.logs)
        return _maybe_scalar(out, r)

    def value(self, r):
        return _maybe_scalar(np.exp(self.log_value(_as_positive(r))), r)

    def to_json(self):
        return {"family": "tabulated", "r": self.r_grid.tolist(), "log_values": self.logs.tolist()}


class ComposedRate(RateFunction):
    """Rate assembled from other rates; carries the dominant small-r tag."""

    family = "composed"

    def __init__(self, log_fn: Callable, leading: tuple | None, description: str = ""):
        self._log_fn = log_fn
        self.leading = leading
        self.description = description

    def log_value(self, r):
        return _maybe_scalar(self._log_fn(_as_positive(r)), r)

    def value(self, r):
        with np.errstate(over="ignore"):
            return _maybe_scalar(np.exp(self.log_value(r)), r)

    def to_json(self):
        grid = np.logspace(-6, 3, 181)
        return {
            "family": "tabulated",
            "r": grid.tolist(),
            "log_values": np.asarray(self.log_value(grid)).tolist(),
            "note": self.description,
        }


def rate_from_json(d: dict) -> RateFunction:
    fam = d.get("family")
    if fam == "exp_power":
        return ExpPower(d["c"], d["p"])
    if fam == "poly":
        return Poly(d["c"], d["p"])
    if fam == "log_power":
        return LogPower(d["c1"], d["c2"], d["q"])
    if fam == "constant":
        return ConstantRate(d["c"])
    if fam == "tabulated":
        if "log_values" in d:
            return Tabulated(d["r"], log_values=d["log_values"])
        return Tabulated(d["r"], values=d["values"])
    raise NegativeRate(f"unknown rate family {fam!r}")


def scale_rate(rate: RateFunction, k: float) -> RateFunction:
    """Multiply a rate function by a constant k > 0, preserving its class."""
    if not (k > 0 and math.isfinite(k)):
        raise NegativeRate(f"scale factor must be positive, got {k}")
    if isinstance(rate, Poly):
        return Poly(k * rate.c, rate.p)
    if isinstance(rate, ConstantRate):
        return ConstantRate(k * rate.c)
    if isinstance(rate, LogPower):
        return LogPower(k * rate.c1, k * rate.c2, rate.q)
    if isinstance(rate, Tabulated):
        return Tabulated(rate.r_grid, log_values=rate.logs + math.log(k))
    logk = math.log(k)
    return ComposedRate(
        lambda r, _base=rate: logk + np.asarray(_base.log_value(r)),
        rate.leading,
        f"{k:g} * ({getattr(rate, 'description', rate.family)})",
    )


# dominance order of small-r behaviour classes
_CLASS_RANK = {"exp-power": 3, "poly": 2, "log-power": 1, "constant": 0}


def _dominant(a: tuple | None, b: tuple | None) -> tuple | None:
    if a is None or b is None:
        return None
    ra, rb = _CLASS_RANK[a[0]], _CLASS_RANK[b[0]]
    if ra != rb:
        return a if ra > rb else b
    return a if a[1] >= b[1] else b


# ---------------------------------------------------------------------------
# comparison constants of a collar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonConstants:
    """Constants comparing boundary to interior measure through a collar.

    * ``interior_fraction`` — stationary mass of the interior part;
    * ``mass_ratio``        — Z_int · sup_boundary exp((W−V)^+) / Z_bnd;
    * ``drift_defect_l2``   — L2(interior) norm of the negative part of
      (collar Laplacian + drift · collar gradient);
    * ``gradient_l2``       — L2(interior) norm of the collar gradient;
    * ``drift_defect_sup`` / ``gradient_sup`` — the same in sup norm.

    L2 norms are taken in the normalised interior measure.  The derived
    aggregates ``wp_energy_factor``/``wp_offset`` feed the
    no-boundary-diffusion weak composition.
    """

    interior_fraction: float
    mass_ratio: float
    drift_defect_l2: float
    gradient_l2: float
    drift_defect_sup: float
    gradient_sup: float
    collar_depth: float | None = None

    def __post_init__(self):
        if not 0.0 < self.interior_fraction < 1.0:
            raise MissingConstants(f"interior fraction must lie in (0,1), got {self.interior_fraction}")
        for name in ("mass_ratio", "drift_defect_l2", "gradient_l2"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise NonFinite(f"constant {name} is invalid: {v}")

    @property
    def wp_energy_factor(self) -> float:
        """Energy-side aggregate of the no-boundary-diffusion weak bound (≥ interior_fraction)."""
        th, c0 = self.interior_fraction, self.mass_ratio
        mixed = c0**2 * self.gradient_sup**2 + c0 * self.drift_defect_sup
        return th + (1 - th) * mixed * ((1 - th) * c0**2 * self.drift_defect_l2**2 + 1.0)

    @property
    def wp_offset(self) -> float:
        """Additive aggregate of the same bound (≥ 1 − interior_fraction)."""
        th, c0 = self.interior_fraction, self.mass_ratio
        return (1 - th) + ((1 - th) ** 2 / th) * c0**2 * self.gradient_l2**2

    def as_dict(self) -> dict:
        return {
            "interior_fraction": self.interior_fraction,
            "mass_ratio": self.mass_ratio,
            "drift_defect_l2": self.drift_defect_l2,
            "gradient_l2": self.gradient_l2,
            "drift_defect_sup": self.drift_defect_sup,
            "gradient_sup": self.gradient_sup,
            "wp_energy_factor": self.wp_energy_factor,
            "wp_offset": self.wp_offset,
            "collar_depth": self.collar_depth,
        }


def comparison_constants(
    model: ModelSpec,
    h: CollarFunction | Callable | None = None,
    quadrature_points: int = 1024,
) -> ComparisonConstants:
    """Measure the comparison constants of a collar candidate.

    ``h`` may be a :class:`stickylab.model.CollarFunction` (analytic
    derivatives), a plain callable (second-order finite differences), or
    None for the model's default collar.  The candidate must have unit
    inward normal slope on every sticky boundary piece
    (:class:`NormalDerivativeMismatch`); the L2 norms must settle under
    grid doubling (:class:`NonFinite` otherwise).
    """
    dom = model.domain
    if h is None:
        h = default_collar(model)
    _check_normal_slope(model, h)

    summary = partition_constants(model, quadrature_points)

    # sup over the sticky boundary of (W - V)^+
    W, V = model.boundary_potential, model.interior_potential
    if isinstance(dom, Strip):
        y = np.arange(256) * (dom.circumference / 256)
        gaps = []
        for wall in dom.sticky_walls():
            xs = np.full_like(y, wall)
            gaps.append(np.max(np.maximum(W.value(xs, y) - V.value(xs, y), 0.0)))
        gap = float(np.max(gaps))
    else:
        pts = np.asarray(dom.sticky_points())
        gap = float(np.max(np.maximum(W.value(pts) - V.value(pts), 0.0)))
    mass_ratio = summary.z_interior * math.exp(gap) / summary.z_boundary

    analytic = isinstance(h, CollarFunction)
    lo, hi = (dom.a, dom.b) if isinstance(dom, Interval) else (0.0, dom.thickness)

    def derivatives(x, y=None):
        if analytic:
            return h.deriv1(x, y), h.deriv2(x, y)
        return _fd_derivatives(h, x, lo, hi, y)

    def defect_neg(x, y=None):
        d1, d2 = derivatives(x, y)
        drift = model.interior_potential.slope(x, y)
        with np.errstate(invalid="ignore"):
            gen = d2 + drift * d1
        return np.maximum(-gen, 0.0)

    def defect_sq(x, y=None):
        return defect_neg(x, y) ** 2

    def grad_sq(x, y=None):
        d1, _ = derivatives(x, y)
        return d1**2

    n = max(32, int(quadrature_points) // 2 * 2)
    try:
        drift_l2_sq = _refined_interior_integral(model, defect_sq, n, "drift defect integral")
        grad_l2_sq = _refined_interior_integral(model, grad_sq, n, "collar gradient integral")
    except NonIntegrable as exc:
        raise NonFinite(str(exc)) from exc
    drift_l2_sq /= summary.z_interior
    grad_l2_sq /= summary.z_interior

    # sup norms on a dense transverse grid
    xs = np.linspace(lo, hi, 4097)
    if isinstance(dom, Strip):
        ys = np.zeros_like(xs)  # collar and power potentials are y-independent
        sup_defect = float(np.max(defect_neg(xs, ys)))
        sup_grad = float(np.max(np.abs(derivatives(xs, ys)[0])))
    else:
        sup_defect = float(np.max(defect_neg(xs)))
        sup_grad = float(np.max(np.abs(derivatives(xs)[0])))

    return ComparisonConstants(
        interior_fraction=summary.interior_fraction,
        mass_ratio=float(mass_ratio),
        drift_defect_l2=float(math.sqrt(max(drift_l2_sq, 0.0))),
        gradient_l2=float(math.sqrt(max(grad_l2_sq, 0.0))),
        drift_defect_sup=sup_defect,
        gradient_sup=sup_grad,
        collar_depth=h.depth if analytic else None,
    )


# ---------------------------------------------------------------------------
# composition rules
# ---------------------------------------------------------------------------


def wp_argument_with_boundary(constants: ComparisonConstants, r):
    """Slowed argument fed to both component weak rates in the max form."""
    th = constants.interior_fraction
    c = constants.mass_ratio * constants.drift_defect_l2
    return np.asarray(r, dtype=float) / (4.0 + 4.0 * th * c * c)


def sp_argument_without_boundary(constants: ComparisonConstants, r):
    """Squared-order argument fed to the interior super rate on the collar route."""
    th = constants.interior_fraction
    c0 = constants.mass_ratio
    a_quad = 4.0 * (c0 * constants.gradient_sup) ** 2
    b_lin = 2.0 * th * c0 * constants.drift_defect_sup
    r = np.asarray(r, dtype=float)
    return th * th * r * r / (a_quad + b_lin * r)


def wp_argument_without_boundary(constants: ComparisonConstants, r):
    """Argument fed to the interior weak rate on the collar route."""
    return np.asarray(r, dtype=float) / (4.0 * constants.wp_energy_factor)


def sp_bound_with_boundary(
    interior_rate: RateFunction,
    boundary_rate: RateFunction,
    interior_fraction: float,
    boundary_diffusion: float,
) -> RateFunction:
    """Super rate of the sticky process from component super rates (max form).

    ``r ↦ max{interior(r)/θ, boundary(δ·r)/(1−θ)}`` with θ the interior
    fraction and δ > 0 the boundary diffusion.  For a zero-dimensional
    boundary the form does not depend on δ, so pass δ = 1 there.
    """
    th = float(interior_fraction)
    dl = float(boundary_diffusion)
    if not 0.0 < th < 1.0:
        raise MissingConstants(f"interior fraction must lie in (0,1), got {th}")
    if not dl > 0:
        raise MissingConstants(f"boundary diffusion must be positive in the max form, got {dl}")

    def log_fn(r):
        a = np.asarray(interior_rate.log_value(r)) - math.log(th)
        b = np.asarray(boundary_rate.log_value(dl * r)) - math.log1p(-th)
        return np.maximum(a, b)

    return ComposedRate(
        log_fn,
        _dominant(interior_rate.leading, boundary_rate.leading),
        f"max(interior/{th:g}, boundary({dl:g}r)/{1 - th:g})",
    )


def wp_bound_with_boundary(
    interior_rate: RateFunction,
    boundary_rate: RateFunction,
    constants: ComparisonConstants,
    boundary_diffusion: float,
    additive: str = "gradient",
) -> RateFunction:
    """Weak rate of the sticky process from component weak rates (max form).

    The energy split slows the argument to ``s(r) = r/(4 + 4θ·C²)`` with
    ``C = mass_ratio·drift_defect_l2``, and adds a constant
    ``((1−θ)/θ)·mass_ratio²·gradient_l2²``.  ``additive="drift"``
    reproduces the variant with ``drift_defect_l2²`` in the additive term
    instead.
    """
    if constants is None:
        raise MissingConstants("weak composition with boundary needs comparison constants")
    if additive not in ("gradient", "drift"):
        raise ValueError(f"additive must be 'gradient' or 'drift', got {additive!r}")
    dl = float(boundary_diffusion)
    if not dl > 0:
        raise MissingConstants(f"boundary diffusion must be positive in the max form, got {dl}")
    th = constants.interior_fraction
    c0, c1 = constants.mass_ratio, constants.drift_defect_l2
    c_add = constants.gradient_l2 if additive == "gradient" else constants.drift_defect_l2
    slow = 4.0 + 4.0 * th * (c0 * c1) ** 2
    factor = 1.0 + (c0 * c1) ** 2
    offset = ((1.0 - th) / th) * (c0 * c_add) ** 2

    def log_fn(r):
        s = wp_argument_with_boundary(constants, r)
        a = np.log(factor * np.asarray(interior_rate.value(s)) + offset)
        b = np.asarray(boundary_rate.log_value(s)) - math.log(dl)
        return np.maximum(a, b)

    return ComposedRate(
        log_fn,
        _dominant(interior_rate.leading, boundary_rate.leading),
        f"max({factor:g}·interior(r/{slow:g}) + {offset:g}, boundary(r/{slow:g})/{dl:g})",
    )


def sp_bound_without_boundary(
    interior_rate: RateFunction,
    constants: ComparisonConstants,
) -> RateFunction:
    """Super rate of the sticky process without boundary diffusion.

    ``r ↦ (2C0²·Ḡ²/(θr) + C0·D̄) · interior(θ²r²/(4C0²Ḡ² + 2θC0·D̄·r))``
    where Ḡ/D̄ are the sup norms of the collar gradient / drift defect.
    The squared argument is what degrades the small-r order relative to
    the max form.
    """
    if constants is None:
        raise MissingConstants("super composition without boundary needs comparison constants")
    th = constants.interior_fraction
    c0 = constants.mass_ratio
    g_sup, d_sup = constants.gradient_sup, constants.drift_defect_sup
    if not (math.isfinite(g_sup) and math.isfinite(d_sup)):
        raise NonFinite("sup-norm constants must be finite for the no-boundary composition")
    a_quad = 4.0 * (c0 * g_sup) ** 2
    b_lin = 2.0 * th * c0 * d_sup

    def log_fn(r):
        r = np.asarray(r, dtype=float)
        pref = 2.0 * (c0 * g_sup) ** 2 / (th * r) + c0 * d_sup
        arg = sp_argument_without_boundary(constants, r)
        return np.log(pref) + np.asarray(interior_rate.log_value(arg))

    lead = interior_rate.leading
    if lead is not None:
        cls, p = lead
        if cls == "exp-power":
            lead = ("exp-power", 2 * p)
        elif cls == "poly":
            lead = ("poly", 1.0 + 2 * p)
        else:
            lead = ("poly", 1.0)  # the 1/r prefactor dominates log/constant rates
    return ComposedRate(
        log_fn,
        lead,
        f"({2 * (c0 * g_sup) ** 2 / th:g}/r + {c0 * d_sup:g}) · interior({th**2:g}r²/({a_quad:g} + {b_lin:g}r))",
    )


def wp_bound_without_boundary(
    interior_rate: RateFunction,
    constants: ComparisonConstants,
) -> RateFunction:
    """Weak rate of the sticky process without boundary diffusion.

    ``r ↦ (A/θ)·interior(r/(4A)) + B/θ`` with the aggregates
    A = ``wp_energy_factor`` and B = ``wp_offset``.
    """
    if constants is None:
        raise MissingConstants("weak composition without boundary needs comparison constants")
    th = constants.interior_fraction
    a_fac = constants.wp_energy_factor
    b_off = constants.wp_offset
    if not (math.isfinite(a_fac) and math.isfinite(b_off)):
        raise NonFinite("aggregates of the weak composition must be finite")

    def log_fn(r):
        arg = wp_argument_without_boundary(constants, r)
        return np.log((a_fac / th) * np.asarray(interior_rate.value(arg)) + b_off / th)

    return ComposedRate(
        log_fn,
        interior_rate.leading,
        f"{a_fac / th:g}·interior(r/{4 * a_fac:g}) + {b_off / th:g}",
    )


# ---------------------------------------------------------------------------
# power-law potential rate families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerPotentialRates:
    """Component rate families for the potential −|x|^tau (order only;
    the multiplicative constant is a calibration knob, default 1)."""

    tau: float
    sp_rate: RateFunction | None
    wp_rate: RateFunction | None


def power_potential_rates(tau: float, constant: float = 1.0) -> PowerPotentialRates:
    """Known rate orders for the −|x|^tau potential on a half-line factor.

    tau > 1: super rate exp[c(1 + r^(-tau/(2(tau-1))))]; tau = 1: constant
    weak rate (Poincaré regime); tau < 1: weak rate with log power
    4(1−tau)/tau.  The same orders hold for the matching boundary measure.
    """
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau}")
    c = float(constant)
    if tau > 1:
        return PowerPotentialRates(tau, ExpPower(c, tau / (2.0 * (tau - 1.0))), None)
    if tau == 1:
        return PowerPotentialRates(tau, None, ConstantRate(c))
    return PowerPotentialRates(tau, None, LogPower(0.0, c, 4.0 * (1.0 - tau) / tau))


# ---------------------------------------------------------------------------
# semigroup-side transforms
# ---------------------------------------------------------------------------


def _log_expm1(z: float) -> float:
    if z <= 0:
        return -math.inf
    if z > 35.0:
        return z + math.log1p(-math.exp(-z))
    return math.log(math.expm1(z))


def tail_threshold_rate(rate: RateFunction, t: float, s: float) -> float:
    """Smallest r ≥ 0 with rate(1/r)·(e^{2rt} − 1) ≥ s² (bisection).

    This is the decay threshold extracted from a super rate: larger tail
    levels s need larger thresholds, which feed the tail bound
    :func:`sp_tail_bound`.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    if s <= 0:
        return 0.0
    target = 2.0 * math.log(s)

    def satisfied(r: float) -> bool:
        return float(rate.log_value(1.0 / r)) + _log_expm1(2.0 * r * t) >= target

    hi = 1.0
    grow = 0
    while not satisfied(hi):
        hi *= 2.0
        grow += 1
        if grow > 200:  # pragma: no cover - expm1 growth always wins
            raise NonFinite("tail threshold bracket did not close")
    lo = 0.0
    for _ in range(_BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if satisfied(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= _BISECT_ATOL:
            break
    return hi


def sp_tail_bound(rate: RateFunction, t: float, s: float, eps: float = 0.5) -> float:
    """Tail-functional bound exp[−2t·threshold(ε·s)]/(1−ε)² from a super rate."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    gamma = tail_threshold_rate(rate, t, eps * s)
    return math.exp(-2.0 * t * gamma) / (1.0 - eps) ** 2


def sp_rate_from_tail_profile(s_grid, phi_values, t: float) -> RateFunction:
    """Super rate recovered from a tail profile φ at time t (converse map).

    φ must be tabulated on an increasing s grid, non-increasing
    (:class:`PhiNotDecaying`).  The recovered rate is
    ``β(r) = r·[φ⁻¹(e^{−2t/r}/2)]²·e^{2t/r}/(4t)`` with
    ``φ⁻¹(u) = inf{s: φ(s) ≤ u}``; evaluating it at r so small that the
    table never drops to the needed level raises :class:`PhiNotDecaying`.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    phi = np.asarray(phi_values, dtype=float)
    if s_grid.ndim != 1 or s_grid.size < 2 or np.any(np.diff(s_grid) <= 0):
        raise PhiNotDecaying("tail profile needs a strictly increasing s grid")
    if np.any(np.diff(phi) > 1e-12):
        raise PhiNotDecaying("tail profile must be non-increasing")
    if t <= 0:
        raise ValueError(f"need t > 0, got {t}")
    desc = phi[::-1]  # ascending for searchsorted

    def inverse(u: np.ndarray) -> np.ndarray:
        # inf{s: φ(s) ≤ u}; φ descending, so search from the right end
        idx = len(phi) - np.searchsorted(desc, u, side="right")
        if np.any(idx >= len(phi)):
            raise PhiNotDecaying(
                f"tail profile never reaches level {float(np.min(u)):.3g}; extend the table"
            )
        return s_grid[np.minimum(idx, len(phi) - 1)]

    def log_fn(r):
        r = np.asarray(r, dtype=float)
        u = 0.5 * np.exp(-2.0 * t / r)
        inv = inverse(u)
        with np.errstate(divide="ignore"):
            return np.log(r) + 2.0 * np.log(inv) + 2.0 * t / r - math.log(4.0 * t)

    return ComposedRate(log_fn, None, f"recovered from tail profile at t={t:g}")


# ---------------------------------------------------------------------------
# ultracontractive bound
# ---------------------------------------------------------------------------


@dataclass
class UltraBound:
    """Tail integral of an inverse super rate and the kernel bound it implies.

    ``psi(w)`` integrates ``rate⁻¹`` above level w; the kernel bound at
    time t minimises ``max{inf_rate/ε, psi⁻¹((1−ε)t)}`` over ε.  The
    inverse is carried in log form (``log_psi_inverse``) because the bound
    can exceed float range at small times without being meaningless; the
    plain accessors then report ``inf``.  Construction fails with
    :class:`NotUltra` when the tail integral diverges.
    """

    rate: RateFunction
    inf_value: float
    _psi: Callable = field(repr=False)
    _log_psi_inv: Callable = field(repr=False)

    def psi(self, w: float) -> float:
        return self._psi(w)

    def log_psi_inverse(self, y: float) -> float:
        return self._log_psi_inv(y)

    def psi_inverse(self, y: float) -> float:
        lz = self._log_psi_inv(y)
        return math.exp(lz) if lz <= 709.0 else math.inf

    def log_kernel_bound(self, t: float) -> float:
        """log of min over ε ∈ (0,1) of max{inf_rate/ε, psi⁻¹((1−ε)t)}.

        Coarse scan in log-odds of ε first (the objective is infinite near
        both ends), then golden section inside the bracketing pair.
        """
        if t <= 0:
            raise ValueError(f"need t > 0, got {t}")
        log_inf = math.log(self.inf_value) if self.inf_value > 0 else -math.inf

        def objective(eps: float) -> float:
            return max(log_inf - math.log(eps), self._log_psi_inv((1.0 - eps) * t))

        grid = 1.0 / (1.0 + 10.0 ** np.linspace(9.0, -9.0, 181))
        vals = np.array([objective(float(e)) for e in grid])
        k = int(np.argmin(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, len(grid) - 1)]
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = objective(c), objective(d)
        for _ in range(120):
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = objective(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = objective(d)
            if b - a < 1e-14:
                break
        return min(float(vals[k]), fc, fd)

    def kernel_bound(self, t: float) -> float:
        lb = self.log_kernel_bound(t)
        return math.exp(lb) if lb <= 709.0 else math.inf


def ultracontractive_bound(rate: RateFunction) -> UltraBound:
    """Build the kernel bound implied by a super rate with convergent tail.

    Closed forms are used for the parametric families; everything else is
    integrated numerically over doubling segments with a divergence guard.
    Raises :class:`NotUltra` when the tail integral diverges — constant
    rates, and steep-exponential rates with exponent ≥ 1.
    """
    if isinstance(rate, ConstantRate):
        raise NotUltra("a constant super rate has no decaying inverse to integrate")
    lead = rate.leading
    if lead is not None and lead[0] == "exp-power" and lead[1] >= 1.0:
        raise NotUltra(
            f"tail integral diverges for steep-exponential rates with exponent {lead[1]:g} >= 1"
        )
    if lead is not None and lead[0] == "constant":
        raise NotUltra("rate is asymptotically constant; no inverse to integrate")

    if isinstance(rate, ExpPower):
        c, p = rate.c, rate.p
        q = 1.0 / p - 1.0  # > 0 since p < 1 here

        def psi(w: float) -> float:
            lw = math.log(w)
            if lw <= c:
                return math.inf
            return c ** (1.0 / p) * (lw - c) ** (-q) / q

        def log_psi_inv(y: float) -> float:
            if y <= 0:
                return math.inf
            inner = (-1.0 / q) * math.log(q * y / c ** (1.0 / p))
            return c + math.exp(inner) if inner <= 700.0 else math.inf

        return UltraBound(rate, math.exp(c), psi, log_psi_inv)

    if isinstance(rate, Poly):
        if rate.p <= 0:
            raise NotUltra("a constant super rate has no decaying inverse to integrate")
        c, p = rate.c, rate.p

        def psi(w: float) -> float:
            if w <= c:
                return math.inf
            return p * (w / c) ** (-1.0 / p)

        def log_psi_inv(y: float) -> float:
            if y <= 0:
                return math.inf
            return math.log(c) + p * (math.log(p) - math.log(y))

        return UltraBound(rate, c, psi, log_psi_inv)

    # Generic numeric path (LogPower, Tabulated, Composed).  Sample the
    # rate once on a dense log-r grid and integrate the inverse using the
    # sampled graph itself as the node set: z-nodes are the sampled log
    # rate values, the inverse at each is exactly the sampled r.  That
    # grid self-grades — geometric refinement toward the singularity at
    # the rate's infimum and geometric coarsening into the far tail —
    # which a grid anchored anywhere else does not.
    logr_tab = np.linspace(-700.0, 700.0, 28001)
    with np.errstate(over="ignore"):
        lv_tab = np.asarray(rate.log_value(np.exp(logr_tab)), dtype=float)
    lv_tab = np.where(np.isnan(lv_tab), 1e300, lv_tab)
    lv_tab = np.clip(lv_tab, -745.0, 1e300)  # keep huge log values finite, floor underflow
    lv_tab = np.minimum.accumulate(lv_tab)  # defensive: enforce non-increasing
    inf_log = float(lv_tab[-1])
    sup_log = float(lv_tab[0])
    inf_value = math.exp(inf_log) if inf_log > -700.0 else 0.0
    if sup_log - inf_log < 1e-9:
        raise NotUltra("rate is constant to working precision; no inverse to integrate")

    # unique keeps the first occurrence in log-r order, i.e. the SMALLEST r
    # at each rate level — the correct inverse on flat stretches
    z_all, uniq = np.unique(lv_tab, return_index=True)
    logrho_all = np.minimum(logr_tab[uniq], 700.0)
    rho_all = np.exp(logrho_all)
    dz = np.diff(z_all)
    pieces = 0.5 * dz * (rho_all[:-1] + rho_all[1:])

    # Divergence guard.  With u the offset of z above the infimum and
    # s = log u, the tail integral is ∫ u·rho(u) ds, so it converges only
    # if log(u·rho) trends downward in s.  Regress that trend over the
    # tail nodes; a slope above -0.01 (decay slower than ~1% per e-fold,
    # within a percent of the divergent order) is rejected as divergent.
    u_all = z_all - inf_log
    tail_floor = max(1.0, 0.1 * abs(inf_log))
    tail = u_all >= tail_floor
    if np.count_nonzero(tail) >= 50:
        s = np.log(u_all[tail])
        log_g = s + logrho_all[tail]
        slope = float(np.polyfit(s, log_g, 1)[0])
        if slope >= -0.01:
            raise NotUltra(
                "tail integral of the inverse rate is not decaying; bound diverges"
            )

    psi_nodes = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    psi_nodes = np.minimum(psi_nodes, 1e290)
    pos = psi_nodes > 0
    z_pos = z_all[pos]
    log_psi_pos = np.log(psi_nodes[pos])

    def psi(w: float) -> float:
        if w <= 0:
            return math.inf
        z = math.log(w)
        if z <= z_all[0]:
            return math.inf
        if z >= z_pos[-1]:
            return 0.0
        return math.exp(float(np.interp(z, z_pos, log_psi_pos)))

    def log_psi_inv(y: float) -> float:
        if y <= 0:
            return math.inf
        ly = math.log(y)
        if ly >= log_psi_pos[0]:
            return float(z_pos[0])
        if ly <= log_psi_pos[-1]:
            # below the table: extrapolate along the last decade's slope
            slope = (z_pos[-1] - z_pos[-2]) / (log_psi_pos[-1] - log_psi_pos[-2])
            return float(z_pos[-1] + slope * (ly - log_psi_pos[-1]))
        return float(np.interp(ly, log_psi_pos[::-1], z_pos[::-1]))

    return UltraBound(rate, inf_value, psi, log_psi_inv)


# ---------------------------------------------------------------------------
# weak-rate decay profile and its converse
# ---------------------------------------------------------------------------


def decay_profile_from_wp(rate: RateFunction, t: float) -> float:
    """Decay level ξ(t) = inf{2r: (1/2)·rate(r)·log(1/r) ≤ t}; always ≤ 2.

    The condition holds vacuously for r ≥ 1, so the bisection searches the
    smallest admissible r in (0, 1].
    """
    if t < 0:
        raise ValueError(f"need t >= 0, got {t}")

    def admissible(log_r: float) -> bool:
        r = math.exp(log_r)
        lv = float(rate.log_value(r))
        if lv > 700.0:  # rate too large to matter at tiny r
            return (-log_r) <= 0.0
        return 0.5 * math.exp(lv) * (-log_r) <= t

    hi = 0.0  # r = 1 is always admissible
    if admissible(-700.0):
        return 2.0 * math.exp(-700.0)
    lo = -700.0
    for _ in range(_BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13:
            break
    return 2.0 * math.exp(hi)


def wp_rate_from_decay_profile(t_grid, xi_values) -> RateFunction:
    """Weak rate recovered from a tabulated decay profile (converse map).

    ``α(r) = 2r·inf_s (1/s)·ξ⁻¹(s·e^{1−s/r})`` with
    ``ξ⁻¹(u) = inf{t: ξ(t) ≤ u}`` looked up in the table; the inner
    infimum is a grid search with refinement.  Meaningful on r ∈ (0, 1].
    Raises :class:`XiNotDecaying` for a non-decreasing table.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    xi = np.asarray(xi_values, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise XiNotDecaying("decay profile needs a strictly increasing t grid")
    if np.any(np.diff(xi) > 1e-12) or np.any(xi <= 0):
        raise XiNotDecaying("decay profile must be positive and non-increasing")
    asc = xi[::-1]

    def xi_inverse(u: np.ndarray) -> np.ndarray:
        # inf{t: ξ(t) ≤ u}; +inf when the table never gets that low
        idx = len(xi) - np.searchsorted(asc, u, side="right")
        out = np.where(idx >= len(xi), np.inf, t_grid[np.minimum(idx, len(xi) - 1)])
        return out

    def alpha_at(r: float) -> float:
        best = math.inf
        center = r
        width = 4.0  # decades around the center
        for _ in range(4):
            s = center * np.logspace(-width / 2, width / 2, 81)
            u = s * np.exp(1.0 - s / r)
            vals = xi_inverse(u) / s
            k = int(np.argmin(vals))
            if math.isfinite(vals[k]):
                best = min(best, float(vals[k]))
                center = float(s[k])
            width /= 4.0
        if not math.isfinite(best):
            raise XiNotDecaying("decay table too short to invert at this r; extend it")
        return 2.0 * r * best

    def log_fn(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.array([math.log(alpha_at(float(rr))) for rr in r])
        return out if out.size > 1 else out.reshape(())

    return ComposedRate(log_fn, None, "recovered from decay profile")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

_LABEL_ORDER = (
    "ultrabounded",
    "superbounded",
    "hyperbounded",
    "L2-uniformly-integrable",
    "exponential-ergodic",
    "subexponential",
    "algebraic",
    "logarithmic",
)


@dataclass(frozen=True)
class RegimeReport:
    """Classifier output: semigroup regime labels plus supporting exponents."""

    labels: tuple[str, ...]
    exponents: dict
    notes: str = ""

    def has(self, label: str) -> bool:
        return label in self.labels


def _sorted_labels(labels: set[str]) -> tuple[str, ...]:
    return tuple(sorted(labels, key=_LABEL_ORDER.index))


def classify_regime(sp_rate: RateFunction | None = None, wp_rate: RateFunction | None = None) -> RegimeReport:
    """Read the semigroup regime off parametric rate functions.

    Super rates: steep-exponential exponent p > 1 → uniformly integrable
    with exponent 1/p; p = 1 → hyperbounded; p < 1 → ultrabounded with
    kernel time power p/(1−p); polynomial rates → ultrabounded with
    algebraic kernel.  Weak rates: constant → exponential ergodicity;
    log-power q → subexponential exponent 1/(1+q); polynomial p →
    algebraic decay power 1/p; exponential → logarithmic decay.
    Raises :class:`Unclassified` for tabulated/unknown-leading inputs.
    """
    if sp_rate is None and wp_rate is None:
        raise Unclassified("need at least one rate function to classify")
    labels: set[str] = set()
    exponents: dict = {}
    notes = []

    if sp_rate is not None:
        lead = sp_rate.leading
        if lead is None:
            raise Unclassified("super rate has no parametric leading behaviour (tabulated?)")
        cls, p = lead
        if cls in ("constant", "poly"):
            labels |= {"ultrabounded", "superbounded", "hyperbounded"}
            exponents["kernel_time_power"] = float(p)
            notes.append("algebraic kernel growth")
        elif cls == "exp-power":
            if p > 1.0:
                labels.add("L2-uniformly-integrable")
                exponents["ui_exponent"] = 1.0 / p
            elif p == 1.0:
                labels |= {"hyperbounded", "L2-uniformly-integrable"}
                exponents["ui_exponent"] = 1.0
            else:
                labels |= {"ultrabounded", "superbounded", "hyperbounded"}
                exponents["kernel_time_power"] = p / (1.0 - p)
                notes.append("exponential kernel growth exp[c(1 + t^(-power))]")
        else:  # log-power super rate: stronger than Poincaré but not in the table
            notes.append("log-power super rate: no regime label assigned")

    if wp_rate is not None:
        lead = wp_rate.leading
        if lead is None:
            raise Unclassified("weak rate has no parametric leading behaviour (tabulated?)")
        cls, p = lead
        if cls == "constant":
            labels.add("exponential-ergodic")
        elif cls == "log-power":
            labels.add("subexponential")
            exponents["subexponential_exponent"] = 1.0 / (1.0 + p)
        elif cls == "poly":
            labels.add("algebraic")
            exponents["algebraic_decay_power"] = 1.0 / p
        elif cls == "exp-power":
            labels.add("logarithmic")
            exponents["logarithmic_power"] = 1.0 / p

    return RegimeReport(_sorted_labels(labels), exponents, "; ".join(notes))


def uniform_integrability_exponent(rate: RateFunction) -> float | None:
    """Orlicz exponent of the uniform-integrability class, from a steep-exponential
    super rate with exponent ≥ 1; None for anything else."""
    lead = rate.leading
    if lead is None or lead[0] != "exp-power" or lead[1] < 1.0:
        return None
    return 1.0 / lead[1]
