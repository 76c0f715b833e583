"""Continuous-time chain simulation of the discretized sticky process.

The chain is the exact realization of the discrete generator — exponential
holding time with the node's total exit rate, then a jump proportional to the
individual rates — so there is no time-discretization error; the only gap to
the continuum process is the grid itself.  Occupation times are accumulated
per batch with independent counter-based streams keyed (seed, batch), which
makes runs reproducible, batches order-independent, and the batch-means
standard error honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import Generator
from .errors import AbsorbingState

__all__ = ["TrajectoryStats", "batch_table", "stats_from_batches", "simulate", "ergodic_average"]

_BLOCK = 8192  # draws per RNG call; the jump loop itself stays in Python


@dataclass(frozen=True)
class TrajectoryStats:
    """Occupation bookkeeping for one simulated trajectory.

    ``total_time`` is defined as ``interior_time + boundary_time`` (the same
    floating sums, so the identity is exact), and ``occupation_fraction`` is
    the interior share.  ``stderr`` is the batch-means standard error of the
    fraction over the independent batches.
    """

    interior_time: float
    boundary_time: float
    jump_count: int
    occupation_fraction: float
    stderr: float

    @property
    def total_time(self) -> float:
        return self.interior_time + self.boundary_time


def _check_rates(gen: Generator) -> None:
    if np.any(gen.exit_rates <= 0.0):
        dead = int(np.argmin(gen.exit_rates))
        raise AbsorbingState(f"node {dead} has no outgoing rate")


def _batch_start(gen: Generator, start, rng) -> int:
    if start == "stationary":
        weights = gen.m / gen.m.sum()
        return int(rng.choice(gen.m.size, p=weights))
    node = int(start)
    if not 0 <= node < gen.m.size:
        raise ValueError(f"start node {node} out of range")
    return node


def _run_batch(gen: Generator, start: int, horizon: float, rng, weights=None):
    """One batch: (interior_time, boundary_time, jumps, weighted_time, time_sum).

    ``weights`` is an optional per-node vector accumulated as sum of
    weights[i] * (holding time at i); ``time_sum`` accumulates the same
    holding times in the same order, so a unit weight reproduces it exactly.
    """
    indptr, indices = gen.indptr, gen.indices
    exit_rates, on_boundary = gen.exit_rates, gen.boundary_mask
    cum = np.cumsum(gen.rates)  # row slices are nondecreasing, end at exit rate
    row_base = np.concatenate([[0.0], cum])[indptr[:-1]]

    node = int(start)
    t_in = t_out = t_sum = 0.0
    w_sum = 0.0
    jumps = 0
    elapsed = 0.0
    while True:
        holds = rng.standard_exponential(_BLOCK)
        picks = rng.random(_BLOCK)
        for k in range(_BLOCK):
            dt = holds[k] / exit_rates[node]
            if elapsed + dt >= horizon:
                dt = horizon - elapsed
                elapsed = horizon
            else:
                elapsed += dt
            if on_boundary[node]:
                t_out += dt
            else:
                t_in += dt
            t_sum += dt
            if weights is not None:
                w_sum += weights[node] * dt
            if elapsed >= horizon:
                return t_in, t_out, jumps, w_sum, t_sum
            # invert the row's cumulative rates; rows are short (<= 4 edges)
            u = row_base[node] + picks[k] * exit_rates[node]
            j = indptr[node]
            stop = indptr[node + 1] - 1
            while j < stop and cum[j] <= u:
                j += 1
            node = int(indices[j])
            jumps += 1


def batch_table(
    gen: Generator,
    start,
    horizon: float,
    seed: int = 0,
    batches: int = 32,
    weights=None,
):
    """Per-batch tallies: list of (batch, interior, boundary, jumps, w_sum, t_sum).

    Batch ``b`` runs its own counter-based stream keyed (seed, b) for
    ``horizon/batches`` time units, so the table is reproducible and
    independent of evaluation order.
    """
    if horizon <= 0:
        raise ValueError(f"need horizon > 0, got {horizon}")
    _check_rates(gen)
    span = horizon / batches
    rows = []
    for b in range(batches):
        rng = np.random.Generator(np.random.Philox(key=[seed, b]))
        rows.append((b, *_run_batch(gen, _batch_start(gen, start, rng), span, rng, weights)))
    return rows


def stats_from_batches(rows) -> TrajectoryStats:
    """Aggregate a :func:`batch_table` into occupation statistics."""
    t_in = sum(row[1] for row in rows)
    t_out = sum(row[2] for row in rows)
    jumps = sum(row[3] for row in rows)
    fractions = np.array([row[1] / (row[1] + row[2]) for row in rows])
    stderr = (
        float(np.std(fractions, ddof=1) / np.sqrt(len(rows)))
        if len(rows) > 1
        else float("nan")
    )
    return TrajectoryStats(
        interior_time=t_in,
        boundary_time=t_out,
        jump_count=jumps,
        occupation_fraction=t_in / (t_in + t_out),
        stderr=stderr,
    )


def simulate(
    gen: Generator,
    start,
    horizon: float,
    seed: int = 0,
    batches: int = 32,
) -> TrajectoryStats:
    """Simulate the chain for ``horizon`` time units and tally occupation.

    The horizon is split across ``batches`` independent replicas (stream key
    (seed, batch)), each started at ``start``; totals are summed and the
    standard error of the occupation fraction comes from the batch spread.
    ``start`` is a node index, or the string ``"stationary"`` to draw each
    batch's start from the invariant masses (removing the burn-in bias that a
    fixed start carries at short horizons).
    """
    return stats_from_batches(batch_table(gen, start, horizon, seed, batches))


def ergodic_average(
    gen: Generator,
    f,
    horizon: float,
    seed: int = 0,
    start=0,
    batches: int = 32,
    with_error: bool = False,
):
    """Time-average of a node function along the simulated trajectory.

    Converges to the m-weighted mean as the horizon grows.  With
    ``with_error=True`` returns (value, batch-means standard error).
    ``start`` as in :func:`simulate`.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (gen.m.size,):
        raise ValueError(f"f has shape {f.shape}, expected ({gen.m.size},)")
    rows = batch_table(gen, start, horizon, seed, batches, weights=f)
    w_total = sum(row[4] for row in rows)
    t_total = sum(row[5] for row in rows)
    per_batch = np.array([row[4] / row[5] for row in rows])
    value = w_total / t_total
    if with_error:
        err = float(np.std(per_batch, ddof=1) / np.sqrt(batches)) if batches > 1 else float("nan")
        return value, err
    return value
