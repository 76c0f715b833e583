"""Numerical verification of functional inequalities on discrete instances.

Two kinds of tool live here:

* *oracles* that compute the best (largest) constant an instance actually
  exhibits — ``sp_oracle`` maximises the strong-form quotient over
  non-negative normalised functions by projected gradient ascent, and
  ``wp_oracle`` maximises the weak-form quotient over mean-zero functions
  through a family of rank-one-perturbed eigenproblems (one per candidate
  peak node);
* *ensemble checks* that throw batteries of random test functions at a
  claimed rate function and report every violation.

The violation rule is deliberately strict and asymmetric: a trial fails
only when ``lhs > rhs * (1 + 1e-10) + 1e-14``, so honest floating-point
noise never trips it but a genuinely undersized bound does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse import csc_matrix, diags
from scipy.sparse.linalg import splu

from .discretize import DiscreteInstance
from .errors import Disconnected, InsufficientSpan, NonFinite
from .ratefn import RateFunction, scale_rate

__all__ = [
    "OracleResult",
    "Violation",
    "ViolationReport",
    "ScalingFit",
    "sp_oracle",
    "wp_oracle",
    "sp_rate_cap",
    "poincare_constant",
    "check_super_poincare",
    "check_weak_poincare",
    "calibrate_scale",
    "fit_scaling_exponent",
]

_REL_SLACK = 1e-10
_ABS_SLACK = 1e-14


@dataclass
class OracleResult:
    """Outcome of one oracle run at a single rate argument."""

    r: float
    value: float
    maximizer: np.ndarray
    restart_values: np.ndarray
    iterations: int

    @property
    def spread(self) -> float:
        """Relative scatter of the restart outcomes (0 when they agree)."""
        vals = self.restart_values
        if vals.size < 2:
            return 0.0
        top = float(np.max(vals))
        if top <= 0:
            return 0.0
        return float((top - np.min(vals)) / top)


@dataclass(frozen=True)
class Violation:
    r: float
    trial: int
    ensemble: str
    lhs: float
    rhs: float


@dataclass
class ViolationReport:
    kind: str
    checked: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        state = "ok" if self.ok else f"{len(self.violations)} violation(s)"
        return f"{self.kind}: {self.checked} trials, {state}"


# ---------------------------------------------------------------------------
# strong-form oracle: projected gradient ascent over the probability-like cone
# ---------------------------------------------------------------------------


def _sp_objective(f, m, E, r):
    return float(f @ (m * f) - r * f @ (E @ f))


def _sp_project(f, m):
    f = np.maximum(f, 0.0)
    s = float(m @ f)
    if s <= 0.0 or not math.isfinite(s):
        return None
    return f / s


def _sp_ascend(f, m, E, r, solve, max_iter, tol, stall_window=12,
               abandon_below=None, probe_iters=60):
    """Preconditioned projected gradient ascent with backtracking.

    The ascent direction is (M + rE)^{-1} grad — a fixed SPD preconditioner
    that absorbs the grid stiffness of E, so convergence does not degrade
    under refinement.  Steps start from the exact maximizer along the ray
    (the objective is quadratic) and halve until the projected point
    improves; stops on a run of relative gains below ``tol``.

    ``abandon_below`` cuts short ascents still under that value after
    ``probe_iters`` iterations.  On steep-tail instances a start in the
    bulk slides cell by cell toward the lightest node, gaining a constant
    factor per cell for thousands of iterations; its endpoint is the
    terminal spike the caller has already evaluated in closed form, so an
    ascent far below the incumbent past the probe horizon adds nothing.
    """
    f = _sp_project(f, m)
    if f is None:
        return None, -math.inf, 0
    obj = _sp_objective(f, m, E, r)
    stall = 0
    slow = 0
    it = 0

    def try_direction(f, obj, d, c1):
        c2 = float(d @ (m * d)) - r * float(d @ (E @ d))
        step = -c1 / (2.0 * c2) if c2 < 0 else 1.0
        floor = 1e-15 * float(np.max(f)) / max(float(np.max(np.abs(d))), 1e-300)
        for _ in range(60):
            cand = _sp_project(f + step * d, m)
            if cand is not None:
                cobj = _sp_objective(cand, m, E, r)
                if cobj > obj:
                    return cand, cobj
            step *= 0.5
            if step < floor:  # below float resolution of f: a dead direction
                break
        return None, obj

    for it in range(1, max_iter + 1):
        grad = 2.0 * (m * f) - 2.0 * r * (E @ f)
        improved = False
        # preconditioned direction first; if the clamp jams it (the solve can
        # point into the active constraints), zero the offending components,
        # and as a last resort use the raw gradient, which a projected
        # backtracking step can never jam on
        d_pre = solve(grad)
        blocked = (f <= 0.0) & (d_pre < 0.0)
        trial_dirs = [d_pre]
        if blocked.any():
            trial_dirs.append(np.where(blocked, 0.0, d_pre))
        trial_dirs.append(grad)
        for d in trial_dirs:
            c1 = float(d @ grad)
            if not math.isfinite(c1) or c1 <= 0.0:
                continue
            cand, cobj = try_direction(f, obj, d, c1)
            if cand is not None:
                gain = cobj - obj
                f, obj = cand, cobj
                improved = True
                break
        if not improved:
            break
        if abandon_below is not None and it >= probe_iters and obj < abandon_below:
            break
        if gain <= tol * max(1.0, abs(obj)):
            stall += 1
            if stall >= stall_window:
                break
        else:
            stall = 0
        # a converging ascent falls through the (tol, 1e-8] gain band in a
        # few geometric steps; only worthless inching lingers there
        if gain <= 1e-8 * max(1.0, abs(obj)):
            slow += 1
            if slow >= 40:
                break
        else:
            slow = 0
    return f, obj, it


def _coordinate_axis(inst: DiscreteInstance) -> np.ndarray:
    return inst.nodes if inst.nodes.ndim == 1 else inst.nodes[:, 0]


def _cosine_bump(coords, center, width):
    d = np.abs(coords - center)
    return np.where(d < width, 1.0 + np.cos(np.pi * d / width), 0.0)


def _spike_objectives(inst: DiscreteInstance, r: float) -> np.ndarray:
    """Closed-form objective of every single-node spike, all nodes at once."""
    m = inst.m
    diag = inst.energy_matrix.diagonal()
    return (1.0 - r * diag / m) / m


def _sp_starts(inst: DiscreteInstance, r: float, rng) -> list[np.ndarray]:
    """Start profiles for one restart: random interior bumps at the natural
    concentration width plus deterministic spike/anchored/flat candidates.
    The best closed-form spikes go first so the terminal tail value is on
    record before any slow slide toward it begins."""
    n = inst.n
    m = inst.m
    coords = _coordinate_axis(inst)
    lo, hi = float(coords.min()), float(coords.max())
    thickness = max(hi - lo, 1e-300)
    h = thickness / max(n - 1, 1)
    width = float(np.clip(np.pi * math.sqrt(max(r, 0.0)), 4 * h, thickness / 2))

    starts = [np.ones(n)]
    spike_nodes = {int(np.argmin(m))}
    spike_nodes.update(int(i) for i in np.argsort(_spike_objectives(inst, r))[-3:])
    for i in sorted(spike_nodes):
        spike = np.zeros(n)
        spike[i] = 1.0
        starts.append(spike)
    starts.append(np.exp(2.0 * rng.standard_normal(n)))

    interior = np.flatnonzero(~inst.boundary_mask)
    if interior.size:
        w_int = m[interior] / m[interior].sum()
        picks = rng.choice(interior, size=min(6, interior.size), p=w_int)
        for i in picks:
            for w in (width / 2, width, 2 * width):
                starts.append(_cosine_bump(coords, coords[i], w))
        # deterministic quantile centers so the interior family is always present
        cum = np.cumsum(m[interior])
        cum /= cum[-1]
        for q in (0.125, 0.375, 0.625, 0.875):
            i = interior[int(np.searchsorted(cum, q))]
            starts.append(_cosine_bump(coords, coords[i], width))
    for b in np.flatnonzero(inst.boundary_mask):
        s0 = np.zeros(n)
        s0[b] = 1.0
        starts.append(s0)
        for w in (width, 4 * width):
            starts.append(2.0 * s0 + _cosine_bump(coords, coords[b], w))
        # pure anchored half-bumps: at moderate r the optimum hugs the wall
        # with the atom level matching the crest, not spiking above it
        for w in (width, thickness / 4, thickness / 2):
            starts.append(_cosine_bump(coords, coords[b], w))
        # bumps hovering just off the wall: their basin can beat both the
        # anchored profile and the deep-interior bump at moderate r
        inward = 1.0 if coords[b] <= 0.5 * (lo + hi) else -1.0
        for off in (width / 4, width / 2, width):
            for w in (width / 2, width):
                starts.append(_cosine_bump(coords, coords[b] + inward * off, w))
    if n <= 32:
        for i in range(n):
            s0 = np.zeros(n)
            s0[i] = 1.0
            starts.append(s0)
    return starts


def sp_oracle(
    inst: DiscreteInstance,
    r: float,
    restarts: int = 8,
    seed: int = 0,
    max_iter: int = 10_000,
    tol: float = 1e-10,
) -> OracleResult:
    """Largest value of mean(f^2) - r * energy(f) over f >= 0 with mean(f) = 1.

    Projected gradient ascent (clamp to the cone, renormalize the mass
    constraint) from a portfolio of starts per restart: random interior
    bumps at the natural width for this r, boundary spikes and anchored
    profiles, the lightest-node spike, a rough multiplicative noise field,
    and the constant function (an exact stationary point with value 1, so
    the result is always at least 1).  The reported value is a lower bound
    on the true maximum; the restart scatter measures its reproducibility.
    """
    m = inst.m
    E = inst.energy_matrix
    n = inst.n
    solve = splu(csc_matrix(diags(m) + r * E)).solve
    total_iters = 0

    restart_vals = []
    best_f = np.ones(n)
    best = 1.0  # constant candidate, exactly stationary with objective 1
    for k in range(max(1, restarts)):
        rng = np.random.default_rng([seed, k])
        local = 1.0
        for f0 in _sp_starts(inst, r, rng):
            f, obj, it = _sp_ascend(
                f0, m, E, r, solve, max_iter, tol, abandon_below=0.5 * local
            )
            total_iters += it
            if obj > local:
                local = obj
                if obj > best:
                    best, best_f = obj, f
        restart_vals.append(local)
    return OracleResult(
        r=float(r),
        value=best,
        maximizer=best_f,
        restart_values=np.asarray(restart_vals),
        iterations=total_iters,
    )


def sp_rate_cap(inst: DiscreteInstance) -> float:
    """The r -> 0 ceiling of the strong-form oracle: one over the lightest mass."""
    return float(1.0 / np.min(inst.m))


# ---------------------------------------------------------------------------
# weak-form oracle: peak-node eigenproblems on the mean-zero subspace
# ---------------------------------------------------------------------------


def _mean_zero_basis(m: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(m.reshape(-1, 1), mode="complete")
    return q[:, 1:]


def _wp_ratio(f, m, E, r):
    num = float(f @ (m * f)) - r * float(np.max(np.abs(f))) ** 2
    den = float(f @ (E @ f))
    if den <= 0.0:
        return -math.inf
    return num / den


def _wp_polish(f, m, E, r, iters=400):
    """Subgradient ascent on the weak-form quotient (guards eigen tie cases)."""
    f = f - float(m @ f)
    norm = float(np.linalg.norm(f))
    if norm == 0.0:
        return f, -math.inf
    f = f / norm
    best = _wp_ratio(f, m, E, r)
    step = 0.1
    for _ in range(iters):
        k = int(np.argmax(np.abs(f)))
        den = float(f @ (E @ f))
        if den <= 0.0:
            break
        grad_num = 2.0 * (m * f)
        grad_num[k] -= 2.0 * r * f[k]
        grad = grad_num - best * 2.0 * (E @ f)
        with np.errstate(over="ignore", invalid="ignore"):
            cand = f + (step / den) * grad
            cand = cand - float(m @ cand)
            nrm = float(np.linalg.norm(cand))
        if nrm == 0.0 or not math.isfinite(nrm):
            break
        cand /= nrm
        val = _wp_ratio(cand, m, E, r)
        if val > best:
            f, best = cand, val
            step = min(step * 1.5, 10.0)
        else:
            step *= 0.5
            if step < 1e-14:
                break
    return f, best


def _wp_level_cuts(inst: DiscreteInstance, r: float, per_axis: int = 3) -> list[np.ndarray]:
    """Best recentred threshold indicators along each coordinate axis.

    At larger r the optimizer flattens into two plateaus, which no
    single-peak eigenproblem represents: every eigenvector dodges its own
    penalty node.  Level sets of a coordinate capture that shape; the cut
    energies are built incrementally, so a full axis sweep costs one pass
    over the matrix entries.
    """
    m = inst.m
    E = inst.energy_matrix.tocsr()
    pts = inst.nodes if inst.nodes.ndim == 2 else inst.nodes[:, None]
    diag = E.diagonal()
    out = []
    for axis in range(pts.shape[1]):
        order = np.argsort(pts[:, axis], kind="stable")
        mass = np.cumsum(m[order])
        s = np.zeros(inst.n)  # E @ indicator of the prefix, updated per node
        energy = 0.0
        scores = np.full(inst.n - 1, -np.inf)
        energies = np.empty(inst.n - 1)
        for k in range(inst.n - 1):
            j = order[k]
            energy += diag[j] + 2.0 * s[j]
            lo, hi = E.indptr[j], E.indptr[j + 1]
            s[E.indices[lo:hi]] += E.data[lo:hi]
            energies[k] = energy
            if energy > 0:
                a = mass[k]
                scores[k] = (a * (1.0 - a) - r * max(a, 1.0 - a) ** 2) / energy
        for k in np.argsort(scores)[::-1][:per_axis]:
            if np.isfinite(scores[k]):
                f = np.zeros(inst.n)
                f[order[: k + 1]] = 1.0
                out.append(f - mass[k])
    return out


def wp_oracle(
    inst: DiscreteInstance,
    r: float,
    candidates: int | None = None,
    seed: int = 0,
) -> OracleResult:
    """Largest value of (mean(f^2) - r * sup(f)^2) / energy(f), mean(f) = 0.

    Wherever the optimiser's peak sits, the quotient freezes into a
    rank-one-shifted Rayleigh quotient, so each candidate peak node yields
    a generalized eigenproblem on the mean-zero subspace.  Every resulting
    eigenvector gives an attained (hence valid) quotient value; coordinate
    level-set cuts cover the two-plateau shapes that dominate at larger r,
    and a short subgradient polish covers ties and plateau edges.  Exact up
    to the eigensolver whenever a top eigenvector is consistent with its
    own peak.

    Internally everything runs in mass-whitened coordinates g = sqrt(m)·f:
    the mass side becomes the identity and the energy side becomes the
    symmetrized generator, whose plain spectrum equals the weighted one —
    so the formulation stays well conditioned even when node masses span
    hundreds of orders of magnitude, and a zero mode there genuinely means
    a split instance rather than ill scaling.
    """
    n = inst.n
    m = inst.m
    E = inst.energy_matrix
    if r >= 1.0:
        return OracleResult(r=float(r), value=0.0, maximizer=np.zeros(n),
                            restart_values=np.zeros(1), iterations=0)
    Ed = E.toarray() if sp.issparse(E) else np.asarray(E, dtype=float)
    root = np.sqrt(m)
    S = Ed / root[:, None] / root[None, :]
    S = 0.5 * (S + S.T)
    Qw = _mean_zero_basis(root)
    Bw = Qw.T @ S @ Qw
    evals = np.linalg.eigvalsh(Bw)
    if evals[0] <= 1e-10 * max(evals[-1], 0.0):
        raise Disconnected("energy form is singular on mean-zero functions")
    dim = Bw.shape[0]

    def peak_vector(k):
        return Qw[k, :] / root[k]

    def top_candidate(k):
        w = peak_vector(k)
        A_k = np.eye(dim) - r * np.outer(w, w)
        _, vec = scipy.linalg.eigh(A_k, Bw, subset_by_index=[dim - 1, dim - 1])
        return (Qw @ vec[:, 0]) / root

    if candidates is None or candidates >= n:
        ks = list(range(n))
    else:
        _, vec = scipy.linalg.eigh(Bw, subset_by_index=[0, 0])
        v1 = (Qw @ vec[:, 0]) / root
        order = np.argsort(-np.abs(v1))
        ks = set(order[: max(8, candidates // 2)].tolist())
        ks.update(np.flatnonzero(inst.boundary_mask).tolist())
        rng = np.random.default_rng([seed, 991])
        ks.update(rng.integers(0, n, size=8).tolist())
        ks = sorted(ks)

    best = 0.0
    best_f = np.zeros(n)
    cand_vals = []
    for k in ks:
        f = top_candidate(k)
        val = _wp_ratio(f, m, E, r)
        cand_vals.append(val)
        if val > best:
            best, best_f = val, f
    if cand_vals:
        order = np.argsort(cand_vals)[::-1][:3]
        for j in order:
            f, val = _wp_polish(top_candidate(ks[j]), m, E, r)
            if val > best:
                best, best_f = val, f
    for f0 in _wp_level_cuts(inst, r):
        val = _wp_ratio(f0, m, E, r)
        if val > best:
            best, best_f = val, f0
        f, val = _wp_polish(f0, m, E, r)
        if val > best:
            best, best_f = val, f
    return OracleResult(
        r=float(r),
        value=max(best, 0.0),
        maximizer=best_f,
        restart_values=np.asarray(cand_vals) if cand_vals else np.zeros(1),
        iterations=len(ks),
    )


def poincare_constant(inst: DiscreteInstance) -> float:
    """Best constant C with mean(f^2) <= C * energy(f) on mean-zero functions.

    Computed from the mass-whitened form, whose plain spectrum is the
    weighted one.  Raises :class:`Disconnected` when the energy form has a
    nontrivial kernel beyond constants (spectral gap below 1e-10 of the
    top).
    """
    root = np.sqrt(inst.m)
    S = inst.energy_matrix.toarray() / root[:, None] / root[None, :]
    S = 0.5 * (S + S.T)
    Qw = _mean_zero_basis(root)
    lam = np.linalg.eigvalsh(Qw.T @ S @ Qw)
    if lam[0] <= 1e-10 * max(lam[-1], 0.0):
        raise Disconnected(
            f"smallest nonzero mode {lam[0]:.3e} is degenerate against the top {lam[-1]:.3e}"
        )
    return float(1.0 / lam[0])


# ---------------------------------------------------------------------------
# random test-function ensembles
# ---------------------------------------------------------------------------


def _draw_gaussian(inst: DiscreteInstance, rng) -> np.ndarray:
    return rng.standard_normal(inst.n)


def _draw_smoothed(inst: DiscreteInstance, rng) -> np.ndarray:
    f = rng.standard_normal(inst.n)
    E = inst.energy_matrix
    exit_rates = E.diagonal() / inst.m
    t = 0.5 / float(np.max(exit_rates))
    for _ in range(4):
        f = f - t * (E @ f) / inst.m
    return f


def _draw_bump(inst: DiscreteInstance, rng) -> np.ndarray:
    pts = inst.nodes if inst.nodes.ndim == 2 else inst.nodes[:, None]
    span = pts.max(axis=0) - pts.min(axis=0)
    scale = float(np.max(span))
    for _ in range(16):
        center = pts[rng.integers(0, inst.n)]
        radius = scale * rng.uniform(0.05, 0.6)
        f = (np.linalg.norm(pts - center, axis=1) <= radius).astype(float)
        if 0 < f.sum() < inst.n:
            return f
    return f  # all-ones bump: harmless, still a legal test function


_ENSEMBLES = (
    ("gaussian", _draw_gaussian),
    ("smoothed", _draw_smoothed),
    ("bump", _draw_bump),
)


def _is_violation(lhs: float, rhs: float) -> bool:
    return lhs > rhs * (1.0 + _REL_SLACK) + _ABS_SLACK


def check_super_poincare(
    inst: DiscreteInstance,
    rate: RateFunction,
    r_values,
    trials: int = 100,
    seed: int = 0,
    bound_scale: float = 1.0,
) -> ViolationReport:
    """Test mean(f^2) <= r * energy(f) + rate(r) * mean(|f|)^2 on random f.

    Streams are keyed by (seed, rate-point index, trial index), so any
    single failing trial can be replayed in isolation.
    """
    report = ViolationReport(kind="strong-form check", checked=0)
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    for ri, r in enumerate(r_values):
        beta = bound_scale * rate(r)
        for t in range(trials):
            name, draw = _ENSEMBLES[t % len(_ENSEMBLES)]
            rng = np.random.default_rng([seed, ri, t])
            f = draw(inst, rng)
            lhs = inst.mean(f * f)
            rhs = r * inst.energy(f) + beta * inst.mean(np.abs(f)) ** 2
            report.checked += 1
            if _is_violation(lhs, rhs):
                report.violations.append(Violation(float(r), t, name, lhs, rhs))
    return report


def check_weak_poincare(
    inst: DiscreteInstance,
    rate: RateFunction,
    r_values,
    trials: int = 100,
    seed: int = 0,
    bound_scale: float = 1.0,
) -> ViolationReport:
    """Test mean(f^2) <= rate(r) * energy(f) + r * sup|f|^2 on centred f."""
    report = ViolationReport(kind="weak-form check", checked=0)
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    for ri, r in enumerate(r_values):
        alpha = 0.0 if r >= 1.0 else bound_scale * rate(r)
        for t in range(trials):
            name, draw = _ENSEMBLES[t % len(_ENSEMBLES)]
            rng = np.random.default_rng([seed, ri, t])
            f = draw(inst, rng)
            f = f - inst.mean(f)
            sup = float(np.max(np.abs(f)))
            lhs = inst.mean(f * f)
            rhs = alpha * inst.energy(f) + r * sup * sup
            report.checked += 1
            if _is_violation(lhs, rhs):
                report.violations.append(Violation(float(r), t, name, lhs, rhs))
    return report


# ---------------------------------------------------------------------------
# calibration and scaling fits
# ---------------------------------------------------------------------------


def calibrate_scale(
    inst: DiscreteInstance,
    rate: RateFunction,
    r_values,
    kind: str = "sp",
    margin: float = 1.05,
    **oracle_kwargs,
) -> tuple[RateFunction, float]:
    """Scale a template rate until it dominates the oracle on a grid of points.

    Returns the scaled rate and the factor applied (oracle/template maximum
    times the safety margin).  Used on coarse single-component instances
    before composing two-component bounds that are then tested elsewhere.
    """
    if kind not in ("sp", "wp"):
        raise ValueError(f"kind must be 'sp' or 'wp', got {kind!r}")
    oracle = sp_oracle if kind == "sp" else wp_oracle
    need = 0.0
    for r in np.atleast_1d(np.asarray(r_values, dtype=float)):
        got = oracle(inst, float(r), **oracle_kwargs).value
        template = rate(float(r))
        if got > 0 and template > 0:
            need = max(need, got / template)
    if need == 0.0:
        need = 1.0
    factor = need * margin
    return scale_rate(rate, factor), factor


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law: value ~ exp(intercept) * r**slope."""

    slope: float
    intercept: float
    r2_fit: float


def fit_scaling_exponent(r_values, values) -> ScalingFit:
    """Least-squares line for log(value) against log(r).

    Raises :class:`InsufficientSpan` for fewer than 5 samples or a rate
    argument range narrower than two decades.
    """
    r = np.asarray(r_values, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.size != v.size:
        raise ValueError("rate arguments and values disagree in length")
    if r.size < 5:
        raise InsufficientSpan(f"need at least 5 samples, got {r.size}")
    if np.min(r) <= 0 or np.max(r) / np.min(r) < 100.0:
        raise InsufficientSpan("rate arguments must span at least two decades")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise NonFinite("values must be positive and finite for a log-log fit")
    x = np.log(r)
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / total if total > 0 else 1.0
    return ScalingFit(slope=float(slope), intercept=float(intercept), r2_fit=r2)
