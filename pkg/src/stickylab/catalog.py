"""The shipped example models, shared by demos, tests, and the CLI.

Each entry is a small, fully specified model: the flat sticky unit interval
(in two boundary-weight variants), the truncated half-line with power-law
potentials of increasing confinement, and the flat periodic strip whose
boundary carries its own diffusion.
"""

from __future__ import annotations

from .model import (
    HalfLine,
    Interval,
    ModelSpec,
    Strip,
    ZERO_POTENTIAL,
    power_potential,
)

__all__ = ["interval_unit", "halfline_tau", "strip_unit", "shipped_models"]


def interval_unit(boundary_weight: float = 0.5) -> ModelSpec:
    """Flat sticky unit interval; weight 1/2 splits mass evenly, so the
    stationary law is half Lebesgue inside and a quarter atom per endpoint."""
    return ModelSpec(
        domain=Interval(0.0, 1.0),
        interior_potential=ZERO_POTENTIAL,
        boundary_potential=ZERO_POTENTIAL,
        boundary_weight=boundary_weight,
        boundary_diffusion=0.0,
        name="interval-unit" if boundary_weight == 0.5 else f"interval-unit-g{boundary_weight:g}",
    )


def halfline_tau(tau: float, length: float = 10.0) -> ModelSpec:
    """Truncated half-line with potential −x^tau and a sticky origin atom.

    tau steers the whole theory: above 1 the measure concentrates fast enough
    for super-type behaviour, at 1 it is borderline (spectral gap only), and
    below 1 only weak-type decay survives.
    """
    return ModelSpec(
        domain=HalfLine(length=length),
        interior_potential=power_potential(tau),
        boundary_potential=ZERO_POTENTIAL,
        boundary_weight=1.0,
        boundary_diffusion=0.0,
        name=f"halfline-tau-{tau:g}",
    )


def strip_unit() -> ModelSpec:
    """Flat 1x1 periodic strip, one sticky wall, boundary diffusion 1.

    Only the left wall is sticky: the weak-form composition needs the
    sticky boundary itself to satisfy a weak Poincare inequality, and two
    disjoint circles have none (splitting them costs no boundary energy).
    A single circle keeps every route well posed; the right wall reflects.
    """
    return ModelSpec(
        domain=Strip(width=1.0, circumference=1.0, sticky=("left",)),
        interior_potential=ZERO_POTENTIAL,
        boundary_potential=ZERO_POTENTIAL,
        boundary_weight=0.5,
        boundary_diffusion=1.0,
        name="strip-unit",
    )


def shipped_models() -> dict:
    """Name -> model for everything the package ships as a worked example."""
    models = [
        interval_unit(),
        interval_unit(2.0),
        halfline_tau(0.5),
        halfline_tau(1.0),
        halfline_tau(2.0),
        halfline_tau(3.0),
        strip_unit(),
    ]
    return {m.name: m for m in models}
