"""Exact finite-state evolution analysis via the spectral decomposition.

The discrete energy matrix ``E`` and mass vector ``m`` define the generator
``L = -diag(1/m) E`` of a continuous-time chain reversible w.r.t. ``m``.  Its
symmetrization ``S = diag(1/sqrt(m)) E diag(1/sqrt(m))`` is dense-diagonalized
once; everything else — evolution, decay norms, heat-kernel suprema, tail
functionals — is then exact linear algebra on the eigenpairs.  Instances are
deliberately capped at a few thousand nodes: exactness of the decay norms is
the point here, not scale.

The sup-to-L2 operator norm is bracketed, not computed exactly: its maximizers
are sign vectors, so the lower bound samples them (plus the kernel-row signs,
which are exact per-row maximizers) and the upper bound takes the cheaper of
the spectral-gap and row-sum estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .discretize import DiscreteInstance
from .errors import NonFinite
from .ratefn import RateFunction
from .verify import _ENSEMBLES, _is_violation, Violation, ViolationReport

__all__ = [
    "SpectralData",
    "decay_2to2",
    "kernel_sup",
    "norm_infty_to_2_bounds",
    "check_tt1_forward",
    "tail_functional",
    "ui_statistic",
]


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition of the symmetrized generator of an instance.

    ``eigenvalues`` are the sign-flipped generator eigenvalues in ascending
    order, so ``eigenvalues[0] == 0`` with flat eigenfunction and
    ``eigenvalues[1]`` is the spectral gap.  ``modes`` holds the orthonormal
    eigenvectors of the symmetrized matrix as columns; dividing a column by
    ``sqrt(m)`` gives the eigenfunction, orthonormal in the m-weighted inner
    product.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    instance: DiscreteInstance = field(repr=False)

    @classmethod
    def from_instance(cls, inst: DiscreteInstance) -> "SpectralData":
        m = inst.m
        root = np.sqrt(m)  # masses may sit at the floor: no products of pairs
        S = inst.energy_matrix.toarray()
        S /= root[:, None]
        S /= root[None, :]
        S = 0.5 * (S + S.T)
        w, U = eigh(S)
        if not np.all(np.isfinite(w)):
            raise NonFinite("eigenvalue decomposition produced non-finite values")
        # E @ 1 = 0 exactly by construction, so pin the flat mode exactly too:
        # this keeps conservativeness at rounding level instead of eigh's
        # subspace tolerance.
        w = np.maximum(w, 0.0)
        w[0] = 0.0
        U[:, 0] = root
        return cls(eigenvalues=w, modes=U, instance=inst)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def spectral_gap(self) -> float:
        return float(self.eigenvalues[1]) if self.n > 1 else math.inf

    def evolve(self, f, t: float) -> np.ndarray:
        """Apply the evolution operator at time ``t >= 0`` to a vector."""
        if t < 0:
            raise ValueError(f"need t >= 0, got {t}")
        root = np.sqrt(self.instance.m)
        f = np.asarray(f, dtype=float)
        coeff = self.modes.T @ (root * f)
        coeff *= np.exp(-t * self.eigenvalues)
        return (self.modes @ coeff) / root

    def evolve_many(self, F: np.ndarray, t: float) -> np.ndarray:
        """Apply the evolution at time ``t`` to each column of ``F``."""
        if t < 0:
            raise ValueError(f"need t >= 0, got {t}")
        root = np.sqrt(self.instance.m)
        coeff = self.modes.T @ (root[:, None] * F)
        coeff *= np.exp(-t * self.eigenvalues)[:, None]
        return (self.modes @ coeff) / root[:, None]

    def kernel(self, t: float) -> np.ndarray:
        """Transition density ``p_t(x, y) / m_y`` as a dense symmetric matrix."""
        if t < 0:
            raise ValueError(f"need t >= 0, got {t}")
        root = np.sqrt(self.instance.m)
        scaled = self.modes * np.exp(-0.5 * t * self.eigenvalues)[None, :]
        K = scaled @ scaled.T
        K /= root[:, None]
        K /= root[None, :]
        return K


def decay_2to2(spec: SpectralData, t) -> float:
    """Operator norm of (evolution minus equilibrium) on L2(m): e^{-gap*t}."""
    return np.exp(-spec.spectral_gap * np.asarray(t, dtype=float)) + 0.0


def kernel_sup(spec: SpectralData, t: float) -> float:
    """sup_{x,y} p_t(x,y)/m_y, from the diagonal of the spectral kernel.

    The kernel is a Gram matrix of the vectors e^{-t*eigs/2}*modes[x]/sqrt(m_x),
    so by Cauchy-Schwarz its supremum sits on the diagonal — no need to form
    the full matrix.
    """
    if t < 0:
        raise ValueError(f"need t >= 0, got {t}")
    weights = np.exp(-t * spec.eigenvalues)
    diag = (spec.modes * spec.modes) @ weights / spec.instance.m
    return float(diag.max())


def norm_infty_to_2_bounds(
    spec: SpectralData, t: float, trials: int = 64, seed: int = 0
) -> dict:
    """Bracket the sup-to-L2 norm of (evolution minus equilibrium) at time t.

    lower: best sampled sign vector (random ones plus the sign patterns of the
    centered kernel rows, each of which maximizes its own row of the image).
    upper: min of the spectral-gap bound and the row-sum bound
    sqrt(sum_x m_x (sum_y |(P_t - mu)_{xy}|)^2).  Always lower <= upper.
    """
    m = spec.instance.m
    centered = spec.kernel(t) - 1.0  # (P_t - mu) f = centered @ (m * f)
    row_abs = np.abs(centered) @ m
    upper = min(
        math.exp(-spec.spectral_gap * t),
        math.sqrt(float(m @ (row_abs * row_abs))),
    )

    rng = np.random.default_rng([seed, 0])
    signs = np.where(rng.random((max(trials, 1), spec.n)) < 0.5, -1.0, 1.0)
    # exact per-row maximizers: sign patterns of the kernel rows with the
    # largest centered mass; a handful suffices, the full set is O(n^2) anyway
    order = np.argsort(row_abs)[::-1][:8]
    cand = np.vstack([signs, np.sign(centered[order]), np.ones((1, spec.n))])
    image = cand @ (centered * m[None, :]).T  # row i = (P_t - mu) cand_i
    norms = np.sqrt((image * image) @ m)
    lower = float(norms.max())
    return {"lower": min(lower, upper), "upper": upper}


def check_tt1_forward(
    spec: SpectralData,
    rate: RateFunction,
    r_values,
    t_values,
    trials: int = 100,
    seed: int = 0,
) -> ViolationReport:
    """Check the evolution form of the super inequality on random ensembles.

    For every sampled f and every (r, t) on the grid, tests
    mean(|P_t f|^2) <= e^{-2rt} mean(f^2) + rate(1/r) (1 - e^{-2rt}) mean(|f|)^2.
    The rate should have been validated by ``check_super_poincare`` on the
    same instance first; this checks the time-dependent consequence.
    """
    inst = spec.instance
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    report = ViolationReport(kind="tt1-forward", checked=0)
    beta = {ri: float(rate.value(1.0 / r)) for ri, r in enumerate(r_values)}
    for ti, t in enumerate(t_values):
        draws, names = [], []
        for trial in range(trials):
            name, draw = _ENSEMBLES[trial % len(_ENSEMBLES)]
            rng = np.random.default_rng([seed, ti, trial])
            draws.append(draw(inst, rng))
            names.append(name)
        F = np.column_stack(draws)
        G = spec.evolve_many(F, t)
        sq_mean = inst.m @ (F * F)
        abs_mean = (inst.m @ np.abs(F)) ** 2
        lhs_all = inst.m @ (G * G)
        for ri, r in enumerate(r_values):
            damp = math.exp(-2.0 * r * t)
            rhs_all = damp * sq_mean + beta[ri] * (1.0 - damp) * abs_mean
            for trial in range(trials):
                report.checked += 1
                if _is_violation(float(lhs_all[trial]), float(rhs_all[trial])):
                    report.violations.append(
                        Violation(
                            r=float(r),
                            trial=trial,
                            ensemble=f"{names[trial]}@t={t:g}",
                            lhs=float(lhs_all[trial]),
                            rhs=float(rhs_all[trial]),
                        )
                    )
    return report


def _normalized(spec: SpectralData, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    nrm = math.sqrt(float(spec.instance.mean(f * f)))
    if nrm <= 0 or not math.isfinite(nrm):
        raise NonFinite("cannot normalize f to unit second moment")
    return f / nrm


def tail_functional(spec: SpectralData, t: float, f, s: float) -> float:
    """mean((P_t f)^2 over the region |P_t f| > s), with f normalized first."""
    g = spec.evolve(_normalized(spec, f), t)
    return float(spec.instance.mean(np.where(np.abs(g) > s, g * g, 0.0)))


def ui_statistic(spec: SpectralData, t: float, c_t: float, delta: float, f) -> float:
    """mean((P_t f)^2 exp[c_t (log(1 + (P_t f)^2))^delta]), f normalized."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"need delta in (0, 1], got {delta}")
    g = spec.evolve(_normalized(spec, f), t)
    gsq = g * g
    return float(spec.instance.mean(gsq * np.exp(c_t * np.log1p(gsq) ** delta)))
