"""Continuum models for sticky-reflected diffusions.

Conventions
-----------
A model couples an *interior* reference measure on a flat one- or
two-dimensional domain with a *boundary* measure carried by the sticky part
of its boundary.  Writing ``V`` for the interior log-density and ``W`` for
the boundary log-density, the unnormalised measures are ::

    interior:   exp(V(x)) dx      (Lebesgue on the domain)
    boundary:   exp(W(p)) dS(p)   (counting measure on sticky points,
                                   arclength on sticky circles)

with partition values ``Z_int = ∫ exp(V)`` and ``Z_bnd = ∫ exp(W)``.  The
stationary law of the process is the mixture that puts

    interior_fraction = gamma * Z_bnd / (gamma * Z_bnd + Z_int)

of its mass on the (normalised) interior measure and the complement on the
(normalised) boundary measure; ``gamma`` is the boundary weight and
``delta >= 0`` scales diffusion along the sticky boundary.  The energy of a
test function is the matching mixture of the interior Dirichlet integral and
``delta`` times the boundary one.

Domains are kept deliberately small: a bounded interval, a truncated
half-line (sticky at the origin, reflecting at the truncation), and a
periodic strip (sticky walls are circles).  Power-law potentials on the
strip act on the transverse coordinate only; the periodic direction is flat.

The *collar* of a model is a smooth bump supported within distance
``collar_depth`` of the sticky boundary, rising with unit inward normal
slope.  Its role is purely quantitative: the comparison constants measured
on it (mass ratio, drift defect, gradient size) are what the composition
bounds in :mod:`stickylab.ratefn` consume.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    CollarTooDeep,
    ConfigError,
    InvalidModel,
    NonFinite,
    NonIntegrable,
    NormalDerivativeMismatch,
)

__all__ = [
    "Interval",
    "HalfLine",
    "Strip",
    "Potential",
    "ModelSpec",
    "MeasureSummary",
    "CollarFunction",
    "partition_constants",
    "interior_fraction",
    "default_collar",
    "model_to_config",
    "model_from_config",
    "model_hash",
]

_REFINE_RTOL = 1e-3  # relative settling required of quadrature under doubling


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Bounded interval ``(a, b)`` with sticky endpoints.

    ``sticky`` selects which endpoints carry boundary mass; the other
    endpoints reflect.  The boundary is zero-dimensional.
    """

    a: float = 0.0
    b: float = 1.0
    sticky: tuple[str, ...] = ("left", "right")

    kind = "interval"
    dim = 1
    boundary_dim = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidModel(f"interval needs a < b, got ({self.a}, {self.b})")
        bad = set(self.sticky) - {"left", "right"}
        if bad or not self.sticky:
            raise InvalidModel(f"sticky endpoints must be a nonempty subset of left/right, got {self.sticky!r}")

    @property
    def thickness(self) -> float:
        return self.b - self.a

    def sticky_points(self) -> tuple[float, ...]:
        pts = []
        if "left" in self.sticky:
            pts.append(self.a)
        if "right" in self.sticky:
            pts.append(self.b)
        return tuple(pts)

    def sticky_distance(self, x):
        x = np.asarray(x, dtype=float)
        d = np.full_like(x, np.inf)
        if "left" in self.sticky:
            d = np.minimum(d, x - self.a)
        if "right" in self.sticky:
            d = np.minimum(d, self.b - x)
        return d

    def sticky_direction(self, x):
        """Sign of d(distance)/dx, i.e. +1 when the nearest sticky end is on the left."""
        x = np.asarray(x, dtype=float)
        if self.sticky == ("left",):
            return np.ones_like(x)
        if self.sticky == ("right",):
            return -np.ones_like(x)
        mid = 0.5 * (self.a + self.b)
        return np.where(x <= mid, 1.0, -1.0)


@dataclass(frozen=True)
class HalfLine:
    """Half-line ``[0, length]``: sticky at the origin, reflecting at the cut.

    Stands in for the unbounded half-line; ``length`` is the truncation and
    should be large enough that the interior density has negligible mass
    beyond it.  The boundary is the single origin point.
    """

    length: float = 10.0

    kind = "truncated_half_line"
    dim = 1
    boundary_dim = 0
    sticky: tuple[str, ...] = ("origin",)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.length) and self.length > 0):
            raise InvalidModel(f"truncation length must be positive, got {self.length}")

    @property
    def thickness(self) -> float:
        return self.length

    def sticky_points(self) -> tuple[float, ...]:
        return (0.0,)

    def sticky_distance(self, x):
        return np.asarray(x, dtype=float)

    def sticky_direction(self, x):
        return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Strip:
    """Periodic strip ``[0, width] x circle(circumference)``.

    The two walls ``x = 0`` and ``x = width`` are circles; ``sticky``
    selects which of them carry boundary mass (the other reflects).  The
    boundary is one-dimensional, so boundary diffusion is meaningful here.
    """

    width: float = 1.0
    circumference: float = 1.0
    sticky: tuple[str, ...] = ("left", "right")

    kind = "strip"
    dim = 2
    boundary_dim = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.width) and self.width > 0):
            raise InvalidModel(f"strip width must be positive, got {self.width}")
        if not (math.isfinite(self.circumference) and self.circumference > 0):
            raise InvalidModel(f"strip circumference must be positive, got {self.circumference}")
        bad = set(self.sticky) - {"left", "right"}
        if bad or not self.sticky:
            raise InvalidModel(f"sticky walls must be a nonempty subset of left/right, got {self.sticky!r}")

    @property
    def thickness(self) -> float:
        return self.width

    def sticky_walls(self) -> tuple[float, ...]:
        walls = []
        if "left" in self.sticky:
            walls.append(0.0)
        if "right" in self.sticky:
            walls.append(self.width)
        return tuple(walls)

    def sticky_distance(self, x):
        x = np.asarray(x, dtype=float)
        d = np.full_like(x, np.inf)
        if "left" in self.sticky:
            d = np.minimum(d, x)
        if "right" in self.sticky:
            d = np.minimum(d, self.width - x)
        return d

    def sticky_direction(self, x):
        x = np.asarray(x, dtype=float)
        if self.sticky == ("left",):
            return np.ones_like(x)
        if self.sticky == ("right",):
            return -np.ones_like(x)
        return np.where(x <= 0.5 * self.width, 1.0, -1.0)


Domain = Interval | HalfLine | Strip


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Log-density, evaluated on domain coordinates.

    Forms:

    * ``"zero"`` — flat;
    * ``"power"`` — ``-|x|**tau`` in the transverse coordinate (on the strip
      this is the distance across, the periodic coordinate is ignored);
    * ``"tabulated"`` — arbitrary callable ``f(x)`` (1-d domains) or
      ``f(x, y)`` (strip).  The callable is sampled by centred differences
      when a slope is needed, so it must tolerate arguments slightly outside
      the domain.
    """

    form: str = "zero"
    tau: float | None = None
    func: Callable | None = None

    def __post_init__(self) -> None:
        if self.form not in ("zero", "power", "tabulated"):
            raise InvalidModel(f"unknown potential form {self.form!r}")
        if self.form == "power":
            if self.tau is None or not (math.isfinite(self.tau) and self.tau > 0):
                raise InvalidModel(f"power potential needs tau > 0, got {self.tau}")
        if self.form == "tabulated" and self.func is None:
            raise InvalidModel("tabulated potential needs a callable")

    def value(self, x, y=None):
        x = np.asarray(x, dtype=float)
        if self.form == "zero":
            return np.zeros_like(x)
        if self.form == "power":
            return -np.abs(x) ** self.tau
        if y is None:
            return np.asarray(self.func(x), dtype=float)
        return np.asarray(self.func(x, y), dtype=float)

    def slope(self, x, y=None):
        """Transverse derivative dV/dx (value at 0 is the limit from the right)."""
        x = np.asarray(x, dtype=float)
        if self.form == "zero":
            return np.zeros_like(x)
        if self.form == "power":
            with np.errstate(divide="ignore"):
                s = -self.tau * np.abs(x) ** (self.tau - 1.0)
            return np.where(x < 0, -s, s)
        e = 1e-6 * (1.0 + np.max(np.abs(x), initial=0.0))
        if y is None:
            return (np.asarray(self.func(x + e)) - np.asarray(self.func(x - e))) / (2 * e)
        return (np.asarray(self.func(x + e, y)) - np.asarray(self.func(x - e, y))) / (2 * e)


ZERO_POTENTIAL = Potential("zero")


def power_potential(tau: float) -> Potential:
    return Potential("power", tau=float(tau))


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A sticky-diffusion model: domain, log-densities, and mixing weights.

    ``boundary_weight`` (> 0) sets how much stationary mass the sticky
    boundary attracts; ``boundary_diffusion`` (>= 0) scales motion *along*
    the boundary and only matters when the boundary is one-dimensional.
    ``collar_depth`` overrides the default support depth of the collar bump.
    """

    domain: Domain
    interior_potential: Potential = ZERO_POTENTIAL
    boundary_potential: Potential = ZERO_POTENTIAL
    boundary_weight: float = 1.0
    boundary_diffusion: float = 0.0
    collar_depth: float | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.boundary_weight) and self.boundary_weight > 0):
            raise InvalidModel(f"boundary weight must be positive, got {self.boundary_weight}")
        if not (math.isfinite(self.boundary_diffusion) and self.boundary_diffusion >= 0):
            raise InvalidModel(f"boundary diffusion must be >= 0, got {self.boundary_diffusion}")
        if self.collar_depth is not None:
            if not (math.isfinite(self.collar_depth) and self.collar_depth > 0):
                raise InvalidModel(f"collar depth must be positive, got {self.collar_depth}")
            if self.collar_depth >= 0.5 * self.domain.thickness:
                raise CollarTooDeep(
                    f"collar depth {self.collar_depth} reaches past half the domain "
                    f"thickness {self.domain.thickness}"
                )
        if self.boundary_diffusion > 0 and self.domain.boundary_dim == 0:
            warnings.warn(
                "boundary diffusion has no effect on a zero-dimensional boundary",
                stacklevel=2,
            )


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _simpson(fvals: np.ndarray, a: float, b: float) -> float:
    n = fvals.shape[0] - 1
    h = (b - a) / n
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(w * fvals))


def _interior_integral(model: ModelSpec, g: Callable, n: int) -> float:
    """Simpson (x) x periodic-trapezoid (y) integral of g * exp(V) over the domain."""
    dom = model.domain
    V = model.interior_potential
    if isinstance(dom, Strip):
        x = np.linspace(0.0, dom.width, n + 1)
        ny = max(8, n // 2)
        y = np.arange(ny) * (dom.circumference / ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        vals = g(X, Y) * np.exp(V.value(X, Y))
        per_x = np.sum(vals, axis=1) * (dom.circumference / ny)
        return _simpson(per_x, 0.0, dom.width)
    a, b = (dom.a, dom.b) if isinstance(dom, Interval) else (0.0, dom.length)
    x = np.linspace(a, b, n + 1)
    vals = np.asarray(g(x, None), dtype=float) * np.exp(V.value(x))
    if not np.all(np.isfinite(vals)):
        # a singular drift can hit the boundary node; drop it and let the
        # refinement check decide whether the integral actually settles
        bad = ~np.isfinite(vals)
        if np.sum(bad) <= 2 and (bad[0] or bad[-1]):
            warnings.warn("dropping a non-finite integrand value at the domain edge", stacklevel=3)
            vals = np.where(bad, 0.0, vals)
        else:
            raise NonFinite("integrand is non-finite away from the boundary")
    return _simpson(vals, a, b)


def _refined_interior_integral(model: ModelSpec, g: Callable, n: int, what: str) -> float:
    def even(k: int) -> int:
        return k + (k % 2)

    coarse = _interior_integral(model, g, even(max(16, n // 4)))
    mid = _interior_integral(model, g, even(max(32, n // 2)))
    fine = _interior_integral(model, g, even(max(64, n)))
    scale = max(abs(fine), 1e-300)
    if not math.isfinite(fine) or abs(fine - mid) / scale > _REFINE_RTOL:
        raise NonIntegrable(
            f"{what} did not settle under refinement "
            f"(values {coarse:.6g}, {mid:.6g}, {fine:.6g})"
        )
    return fine


def _boundary_integral(model: ModelSpec, g: Callable, n: int) -> float:
    """Integral of g * exp(W) over the sticky boundary (sum over points / circles)."""
    dom = model.domain
    W = model.boundary_potential
    if isinstance(dom, Strip):
        ny = max(8, n)
        y = np.arange(ny) * (dom.circumference / ny)
        total = 0.0
        for wall in dom.sticky_walls():
            xs = np.full_like(y, wall)
            total += float(np.sum(g(xs, y) * np.exp(W.value(xs, y))) * (dom.circumference / ny))
        return total
    total = 0.0
    for p in dom.sticky_points():
        total += float(g(np.asarray(p), None) * np.exp(W.value(np.asarray(p))))
    return total


# ---------------------------------------------------------------------------
# partition constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureSummary:
    """Partition values and the interior/boundary mass split of a model."""

    model: ModelSpec
    z_interior: float
    z_boundary: float
    interior_fraction: float
    quadrature_points: int

    def interior_density(self, x, y=None):
        """Normalised interior density exp(V)/Z_int."""
        return np.exp(self.model.interior_potential.value(x, y)) / self.z_interior

    def boundary_density(self, x, y=None):
        """Normalised boundary density exp(W)/Z_bnd (atom weights on points)."""
        return np.exp(self.model.boundary_potential.value(x, y)) / self.z_boundary


def partition_constants(model: ModelSpec, quadrature_points: int = 1024) -> MeasureSummary:
    """Compute partition values and the stationary interior fraction.

    Raises :class:`NonIntegrable` when the interior quadrature does not
    settle under two grid doublings (relative change above 1e-3).
    """
    n = max(32, int(quadrature_points) // 2 * 2)
    one = lambda x, y=None: np.ones_like(np.asarray(x, dtype=float))
    z_int = _refined_interior_integral(model, one, n, "interior partition integral")
    z_bnd = _boundary_integral(model, one, n)
    if not (math.isfinite(z_int) and z_int > 0 and math.isfinite(z_bnd) and z_bnd > 0):
        raise NonFinite(f"partition values must be positive and finite, got {z_int}, {z_bnd}")
    g = model.boundary_weight
    frac = g * z_bnd / (g * z_bnd + z_int)
    return MeasureSummary(model, z_int, z_bnd, frac, n)


def interior_fraction(model: ModelSpec, quadrature_points: int = 1024) -> float:
    """Stationary mass fraction of the interior part (in (0, 1))."""
    return partition_constants(model, quadrature_points).interior_fraction


# ---------------------------------------------------------------------------
# collar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CollarFunction:
    """Smooth boundary collar ``h(x) = p(dist(x, sticky boundary))``.

    The radial profile is ``p(s) = s * (1 - (s/depth)^2)^3`` for
    ``s <= depth`` and zero beyond: unit inward slope at the boundary,
    C^2 across the support edge, sup-norm of the slope exactly one.
    """

    depth: float
    domain: Domain
    note: str = ""

    def _u(self, s):
        return np.clip(np.asarray(s, dtype=float) / self.depth, 0.0, 1.0)

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        u = self._u(s)
        return np.where(u < 1.0, s * (1.0 - u**2) ** 3, 0.0)

    def profile_d1(self, s):
        u = self._u(s)
        return np.where(u < 1.0, (1.0 - u**2) ** 2 * (1.0 - 7.0 * u**2), 0.0)

    def profile_d2(self, s):
        u = self._u(s)
        return np.where(u < 1.0, (-2.0 * u / self.depth) * (1.0 - u**2) * (9.0 - 21.0 * u**2), 0.0)

    def value(self, x, y=None):
        return self.profile(self.domain.sticky_distance(x))

    __call__ = value

    def deriv1(self, x, y=None):
        """d h / d x (transverse); the periodic strip coordinate never enters."""
        rho = self.domain.sticky_distance(x)
        return self.profile_d1(rho) * self.domain.sticky_direction(x)

    def deriv2(self, x, y=None):
        rho = self.domain.sticky_distance(x)
        return self.profile_d2(rho)


def default_collar(model_or_domain: ModelSpec | Domain, depth: float | None = None) -> CollarFunction:
    """The collar bump of a model or bare domain; depth defaults to min(thickness/4, 1)."""
    if isinstance(model_or_domain, ModelSpec):
        dom = model_or_domain.domain
        if depth is None:
            depth = model_or_domain.collar_depth
    else:
        dom = model_or_domain
    if depth is None:
        depth = min(dom.thickness / 4.0, 1.0)
    if not (math.isfinite(depth) and depth > 0):
        raise InvalidModel(f"collar depth must be positive, got {depth}")
    if depth >= 0.5 * dom.thickness:
        raise CollarTooDeep(
            f"collar depth {depth} reaches past half the domain thickness {dom.thickness}"
        )
    note = ""
    if isinstance(dom, HalfLine):
        # on the truncated half-line the raw distance profile (no cutoff) is
        # also admissible, since its gradient is bounded on the truncation
        note = "uncut profile p(s) = s is also admissible on the truncated half-line"
    return CollarFunction(depth=float(depth), domain=dom, note=note)


# ---------------------------------------------------------------------------
# derivative helpers shared with the constants machinery in ratefn
# ---------------------------------------------------------------------------


def _fd_derivatives(h: Callable, x: np.ndarray, lo: float, hi: float, y=None):
    """Second-order finite differences for a plain-callable collar.

    Central stencils inside, one-sided second-order stencils within two
    steps of the domain edge, so the callable is never sampled outside
    [lo, hi].
    """
    e = 1e-4 * (hi - lo)

    def H(z):
        return np.asarray(h(z) if y is None else h(z, y), dtype=float)

    d1 = np.empty_like(x)
    d2 = np.empty_like(x)
    left = x < lo + 2 * e
    right = x > hi - 2 * e
    mid = ~(left | right)
    if np.any(mid):
        xm = x[mid]
        d1[mid] = (H(xm + e) - H(xm - e)) / (2 * e)
        d2[mid] = (H(xm + e) - 2 * H(xm) + H(xm - e)) / e**2
    if np.any(left):
        xl = x[left]
        d1[left] = (-3 * H(xl) + 4 * H(xl + e) - H(xl + 2 * e)) / (2 * e)
        d2[left] = (2 * H(xl) - 5 * H(xl + e) + 4 * H(xl + 2 * e) - H(xl + 3 * e)) / e**2
    if np.any(right):
        xr = x[right]
        d1[right] = (3 * H(xr) - 4 * H(xr - e) + H(xr - 2 * e)) / (2 * e)
        d2[right] = (2 * H(xr) - 5 * H(xr - e) + 4 * H(xr - 2 * e) - H(xr - 3 * e)) / e**2
    return d1, d2


def _check_normal_slope(model: ModelSpec, h: Callable) -> None:
    dom = model.domain
    eps = 1e-5 * dom.thickness

    def inward_slope(p: float, direction: float, y=None) -> float:
        def H(z):
            return float(np.asarray(h(np.asarray(z)) if y is None else h(np.asarray(z), np.asarray(y))))

        # second-order one-sided difference along the inward normal
        return (4 * H(p + direction * eps) - H(p + 2 * direction * eps) - 3 * H(p)) / (2 * eps)

    checks = []
    if isinstance(dom, Strip):
        ys = np.array([0.0, dom.circumference / 3.0, 2.0 * dom.circumference / 3.0])
        for wall in dom.sticky_walls():
            direction = 1.0 if wall == 0.0 else -1.0
            for yv in ys:
                checks.append(inward_slope(wall, direction, yv))
    elif isinstance(dom, Interval):
        for p in dom.sticky_points():
            checks.append(inward_slope(p, 1.0 if p == dom.a else -1.0))
    else:
        checks.append(inward_slope(0.0, 1.0))
    for s in checks:
        if not math.isfinite(s) or abs(s - 1.0) > 1e-3:
            raise NormalDerivativeMismatch(
                f"collar candidate has inward normal slope {s:.6g} at a sticky boundary (need 1)"
            )


# ---------------------------------------------------------------------------
# config round-trip
# ---------------------------------------------------------------------------


def _potential_to_dict(p: Potential) -> dict:
    if p.form == "zero":
        return {"form": "zero"}
    if p.form == "power":
        return {"form": "power", "tau": p.tau}
    raise ConfigError("tabulated potentials cannot be serialised to config")


def _potential_from_dict(d: dict) -> Potential:
    form = d.get("form")
    if form == "zero":
        return ZERO_POTENTIAL
    if form == "power":
        return Potential("power", tau=float(d["tau"]))
    raise ConfigError(f"unknown potential form in config: {form!r}")


def model_to_config(model: ModelSpec) -> dict:
    """Serialise a model to the JSON config schema (round-trips exactly)."""
    dom = model.domain
    if isinstance(dom, Interval):
        domain = {"kind": "interval", "a": dom.a, "b": dom.b, "sticky": list(dom.sticky)}
        trunc = None
    elif isinstance(dom, HalfLine):
        domain = {"kind": "truncated_half_line"}
        trunc = dom.length
    elif isinstance(dom, Strip):
        domain = {
            "kind": "strip",
            "width": dom.width,
            "circumference": dom.circumference,
            "sticky": list(dom.sticky),
        }
        trunc = None
    else:  # pragma: no cover
        raise ConfigError(f"unknown domain {dom!r}")
    return {
        "domain": domain,
        "V": _potential_to_dict(model.interior_potential),
        "W": _potential_to_dict(model.boundary_potential),
        "gamma": model.boundary_weight,
        "delta": model.boundary_diffusion,
        "truncation_L": trunc,
        "collar_s0": model.collar_depth,
        "name": model.name,
    }


def model_from_config(config: dict) -> ModelSpec:
    """Rebuild a model from its JSON config dict."""
    try:
        dd = config["domain"]
        kind = dd["kind"]
        if kind == "interval":
            dom: Domain = Interval(
                a=float(dd.get("a", 0.0)),
                b=float(dd.get("b", 1.0)),
                sticky=tuple(dd.get("sticky", ["left", "right"])),
            )
        elif kind == "truncated_half_line":
            dom = HalfLine(length=float(config.get("truncation_L") or 10.0))
        elif kind == "strip":
            dom = Strip(
                width=float(dd.get("width", 1.0)),
                circumference=float(dd.get("circumference", 1.0)),
                sticky=tuple(dd.get("sticky", ["left", "right"])),
            )
        else:
            raise ConfigError(f"unknown domain kind {kind!r}")
        collar = config.get("collar_s0")
        return ModelSpec(
            domain=dom,
            interior_potential=_potential_from_dict(config.get("V", {"form": "zero"})),
            boundary_potential=_potential_from_dict(config.get("W", {"form": "zero"})),
            boundary_weight=float(config.get("gamma", 1.0)),
            boundary_diffusion=float(config.get("delta", 0.0)),
            collar_depth=None if collar is None else float(collar),
            name=config.get("name"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad model config: {exc}") from exc


def model_hash(model: ModelSpec) -> str:
    """Short stable hash of the model's config (identifies instances in metadata)."""
    payload = json.dumps(model_to_config(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
