"""Finite-volume discretisation of sticky-reflected models.

A model becomes a finite weighted graph: nodes carry the stationary
masses, edges carry conductances, and the energy matrix E is the graph
Laplacian built from those conductances, so that ``f @ E @ f`` discretises
the process's Dirichlet form and ``m`` is exactly stationary for the
induced jump chain (symmetry of E gives detailed balance for free).

Construction rules
------------------
* interior nodes sit at cell midpoints; node mass is the interior
  fraction times the cell's share of the interior density;
* boundary nodes are the sticky atoms (or the cells of a sticky circle),
  with the complementary fraction split by the boundary density;
* an edge's conductance is ``weight · geomean(cell masses) / spacing²``
  where the weight is the interior fraction for interior edges and
  ``(1 − interior fraction) · boundary_diffusion`` along a sticky circle;
* the edge from a boundary node into the interior uses a phantom cell of
  the interior density evaluated at the boundary point, at full cell
  spacing, weighted like an interior edge.

Cell masses are floored at 1e-280 of the largest cell so that steep
potentials (whose density underflows far from the well) cannot disconnect
the graph; the floored cells carry no measurable mass but keep
conductances positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    AbsorbingState,
    GridTooCoarse,
    InvalidModel,
    NegativeRate,
    NonFinite,
)
from .model import (
    HalfLine,
    Interval,
    ModelSpec,
    Strip,
    model_hash,
    partition_constants,
)

__all__ = [
    "DiscreteInstance",
    "Generator",
    "build_instance",
    "generator_of",
    "interior_only_instance",
    "boundary_only_instance",
]

_MASS_FLOOR_REL = 1e-280


@dataclass(eq=False)
class DiscreteInstance:
    """A weighted graph discretisation: masses, energy matrix, geometry.

    ``energy_matrix`` is symmetric positive semi-definite with zero row
    sums; ``f @ energy_matrix @ f`` is the discrete Dirichlet energy and
    ``m @ f`` the stationary mean.  ``nodes`` holds midpoint coordinates,
    shape (n,) in one dimension and (n, 2) on the strip.
    """

    nodes: np.ndarray
    m: np.ndarray
    energy_matrix: sp.csr_matrix
    boundary_mask: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool)
        n = self.m.shape[0]
        if self.boundary_mask.shape[0] != n or self.nodes.shape[0] != n:
            raise InvalidModel("node, mass, and boundary arrays disagree in length")
        if not np.all(np.isfinite(self.m)) or np.any(self.m <= 0):
            raise NonFinite("node masses must be positive and finite")
        if abs(float(self.m.sum()) - 1.0) > 1e-12:
            raise InvalidModel(f"masses sum to {self.m.sum()!r}, expected 1")

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(~self.boundary_mask))

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.boundary_mask))

    @property
    def interior_fraction(self) -> float:
        return float(self.m[~self.boundary_mask].sum())

    def energy(self, f: np.ndarray) -> float:
        f = np.asarray(f, dtype=float)
        return float(f @ (self.energy_matrix @ f))

    def mean(self, f: np.ndarray) -> float:
        return float(self.m @ np.asarray(f, dtype=float))

    def to_dict(self) -> dict:
        coo = self.energy_matrix.tocoo()
        return {
            "nodes": self.nodes.tolist(),
            "m": self.m.tolist(),
            "E": {
                "shape": self.n,
                "row": coo.row.tolist(),
                "col": coo.col.tolist(),
                "value": coo.data.tolist(),
            },
            "boundary_mask": [bool(b) for b in self.boundary_mask],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteInstance":
        e = d["E"]
        n = int(e["shape"])
        mat = sp.coo_matrix(
            (np.asarray(e["value"], dtype=float), (e["row"], e["col"])), shape=(n, n)
        ).tocsr()
        return cls(
            nodes=np.asarray(d["nodes"], dtype=float),
            m=np.asarray(d["m"], dtype=float),
            energy_matrix=mat,
            boundary_mask=np.asarray(d["boundary_mask"], dtype=bool),
            metadata=dict(d.get("metadata", {})),
        )


def _laplacian(n: int, rows, cols, conds) -> sp.csr_matrix:
    """Assemble sum of c (e_i - e_j)(e_i - e_j)^T as CSR."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    conds = np.asarray(conds, dtype=float)
    if np.any(conds < 0) or not np.all(np.isfinite(conds)):
        raise NonFinite("edge conductances must be finite and non-negative")
    i = np.concatenate([rows, cols, rows, cols])
    j = np.concatenate([rows, cols, cols, rows])
    v = np.concatenate([conds, conds, -conds, -conds])
    lap = sp.coo_matrix((v, (i, j)), shape=(n, n)).tocsr()
    lap.sum_duplicates()
    return lap


def _floored(raw: np.ndarray) -> np.ndarray:
    top = float(np.max(raw))
    if not (top > 0 and math.isfinite(top)):
        raise NonFinite("all cell masses vanished or overflowed")
    return np.maximum(raw, _MASS_FLOOR_REL * top)


def _geomean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # sqrt separately: the product of two floored cell masses can underflow
    return np.sqrt(a) * np.sqrt(b)


def _validate(inst: DiscreteInstance) -> DiscreteInstance:
    e = inst.energy_matrix
    ones = np.ones(inst.n)
    scale = max(float(np.abs(e.data).max()) if e.nnz else 1.0, 1.0)
    if float(np.abs(e @ ones).max()) > 1e-12 * scale:
        raise InvalidModel("energy matrix row sums are not zero")
    asym = (e - e.T).tocoo()
    if asym.nnz and float(np.abs(asym.data).max()) > 1e-12 * scale:
        raise InvalidModel("energy matrix is not symmetric")
    return inst


def _interval_cells(model: ModelSpec, n_interior: int):
    dom = model.domain
    if isinstance(dom, Interval):
        a, b = dom.a, dom.b
    else:  # truncated half-line
        a, b = 0.0, dom.length
    h = (b - a) / n_interior
    mid = a + h * (np.arange(n_interior) + 0.5)
    with np.errstate(under="ignore"):
        raw = np.exp(model.interior_potential.value(mid)) * h
    return mid, h, _floored(raw)


def _strip_cells(model: ModelSpec, n_interior: int, n_boundary: int):
    dom = model.domain
    hx = dom.width / n_interior
    hy = dom.circumference / n_boundary
    x_mid = hx * (np.arange(n_interior) + 0.5)
    y_mid = hy * (np.arange(n_boundary) + 0.5)
    xx, yy = np.meshgrid(x_mid, y_mid, indexing="ij")  # [i, j] = (x_i, y_j)
    with np.errstate(under="ignore"):
        raw = np.exp(model.interior_potential.value(xx, yy)) * hx * hy
    return x_mid, y_mid, hx, hy, xx, yy, _floored(raw)


def build_instance(
    model: ModelSpec, n_interior: int, n_boundary: int | None = None
) -> DiscreteInstance:
    """Discretise a model on a regular grid.

    ``n_interior`` counts transverse interior cells (at least 4);
    ``n_boundary`` counts cells per sticky circle on the strip (at least
    8) and doubles as the interior grid's periodic resolution there; it is
    ignored for models whose boundary is atomic.
    """
    if n_interior < 4:
        raise GridTooCoarse(f"need at least 4 interior cells, got {n_interior}")
    summary = partition_constants(model)
    th = summary.interior_fraction
    dom = model.domain

    if isinstance(dom, Strip):
        if n_boundary is None:
            n_boundary = max(8, n_interior)
        if n_boundary < 8:
            raise GridTooCoarse(
                f"need at least 8 cells per sticky circle, got {n_boundary}"
            )
        inst = _build_strip(model, th, n_interior, n_boundary)
    else:
        inst = _build_line(model, th, n_interior)
    inst.metadata.update(
        {
            "model": model_hash(model),
            "n_interior": int(n_interior),
            "n_boundary": int(n_boundary) if isinstance(dom, Strip) else 0,
            "interior_fraction": th,
        }
    )
    return _validate(inst)


def _build_line(model: ModelSpec, th: float, n_interior: int) -> DiscreteInstance:
    dom = model.domain
    mid, h, raw = _interval_cells(model, n_interior)
    z_grid = float(raw.sum())
    m_int = th * raw / z_grid

    sticky = list(dom.sticky_points())
    with np.errstate(under="ignore"):
        braw = np.exp([model.boundary_potential.value(np.asarray(p)) for p in sticky])
    braw = np.asarray(braw, dtype=float)
    m_bnd = (1.0 - th) * braw / braw.sum()

    n = n_interior + len(sticky)
    nodes = np.concatenate([mid, np.asarray(sticky, dtype=float)])
    m = np.concatenate([m_int, m_bnd])
    mask = np.zeros(n, dtype=bool)
    mask[n_interior:] = True

    rows, cols, conds = [], [], []
    inner = th * _geomean(raw[:-1], raw[1:]) / (z_grid * h * h)
    rows.extend(range(n_interior - 1))
    cols.extend(range(1, n_interior))
    conds.extend(inner.tolist())
    # boundary atoms couple through a phantom interior cell at the sticky
    # point, at full cell spacing
    for k, p in enumerate(sticky):
        cell_idx = 0 if p <= mid[0] else n_interior - 1
        with np.errstate(under="ignore"):
            phantom = float(np.exp(model.interior_potential.value(np.asarray(p)))) * h
        phantom = max(phantom, _MASS_FLOOR_REL * float(raw.max()))
        c = th * math.sqrt(raw[cell_idx]) * math.sqrt(phantom) / (z_grid * h * h)
        rows.append(cell_idx)
        cols.append(n_interior + k)
        conds.append(c)

    return DiscreteInstance(
        nodes=nodes,
        m=m,
        energy_matrix=_laplacian(n, rows, cols, conds),
        boundary_mask=mask,
    )


def _build_strip(
    model: ModelSpec, th: float, n_interior: int, n_boundary: int
) -> DiscreteInstance:
    dom = model.domain
    x_mid, y_mid, hx, hy, xx, yy, raw = _strip_cells(model, n_interior, n_boundary)
    z_grid = float(raw.sum())
    nx, ny = n_interior, n_boundary

    def idx(i, j):
        return i * ny + j

    walls = list(dom.sticky_walls())
    n_int_nodes = nx * ny
    n = n_int_nodes + len(walls) * ny

    nodes = np.zeros((n, 2))
    nodes[:n_int_nodes, 0] = xx.ravel()
    nodes[:n_int_nodes, 1] = yy.ravel()
    m = np.zeros(n)
    m[:n_int_nodes] = (th * raw / z_grid).ravel()
    mask = np.zeros(n, dtype=bool)
    mask[n_int_nodes:] = True

    # boundary circles: cells of the boundary density along each wall
    braw_walls = []
    for w in walls:
        with np.errstate(under="ignore"):
            bw = np.exp(model.boundary_potential.value(np.full(ny, w), y_mid)) * hy
        braw_walls.append(_floored(bw))
    zb_grid = float(sum(bw.sum() for bw in braw_walls))

    rows, cols, conds = [], [], []
    # interior transverse edges
    for i in range(nx - 1):
        c = th * _geomean(raw[i, :], raw[i + 1, :]) / (z_grid * hx * hx)
        rows.extend(idx(i, j) for j in range(ny))
        cols.extend(idx(i + 1, j) for j in range(ny))
        conds.extend(c.tolist())
    # interior periodic edges
    for j in range(ny):
        jn = (j + 1) % ny
        c = th * _geomean(raw[:, j], raw[:, jn]) / (z_grid * hy * hy)
        rows.extend(idx(i, j) for i in range(nx))
        cols.extend(idx(i, jn) for i in range(nx))
        conds.extend(c.tolist())

    delta = model.boundary_diffusion
    for k, w in enumerate(walls):
        base = n_int_nodes + k * ny
        bw = braw_walls[k]
        nodes[base : base + ny, 0] = w
        nodes[base : base + ny, 1] = y_mid
        m[base : base + ny] = (1.0 - th) * bw / zb_grid
        # edges along the sticky circle (present only with boundary diffusion)
        if delta > 0:
            c = (1.0 - th) * delta * _geomean(bw, np.roll(bw, -1)) / (zb_grid * hy * hy)
            rows.extend(base + j for j in range(ny))
            cols.extend(base + (j + 1) % ny for j in range(ny))
            conds.extend(c.tolist())
        # coupling into the nearest interior column through a phantom cell
        cell_i = 0 if w <= x_mid[0] else nx - 1
        with np.errstate(under="ignore"):
            phantom = np.exp(model.interior_potential.value(np.full(ny, w), y_mid)) * hx * hy
        phantom = np.maximum(phantom, _MASS_FLOOR_REL * float(raw.max()))
        c = th * _geomean(raw[cell_i, :], phantom) / (z_grid * hx * hx)
        rows.extend(idx(cell_i, j) for j in range(ny))
        cols.extend(base + j for j in range(ny))
        conds.extend(c.tolist())

    return DiscreteInstance(
        nodes=nodes,
        m=m,
        energy_matrix=_laplacian(n, rows, cols, conds),
        boundary_mask=mask,
    )


def interior_only_instance(model: ModelSpec, n_interior: int, n_boundary: int | None = None) -> DiscreteInstance:
    """The interior component alone: its normalised measure and bare form.

    Masses are the interior cells normalised to total one and conductances
    drop the interior-fraction weight, so the oracle run on this instance
    calibrates the interior component's own rate function.
    """
    if n_interior < 4:
        raise GridTooCoarse(f"need at least 4 interior cells, got {n_interior}")
    dom = model.domain
    if isinstance(dom, Strip):
        if n_boundary is None:
            n_boundary = max(8, n_interior)
        x_mid, y_mid, hx, hy, xx, yy, raw = _strip_cells(model, n_interior, n_boundary)
        z_grid = float(raw.sum())
        nx, ny = n_interior, n_boundary
        rows, cols, conds = [], [], []
        for i in range(nx - 1):
            c = _geomean(raw[i, :], raw[i + 1, :]) / (z_grid * hx * hx)
            rows.extend(i * ny + j for j in range(ny))
            cols.extend((i + 1) * ny + j for j in range(ny))
            conds.extend(c.tolist())
        for j in range(ny):
            jn = (j + 1) % ny
            c = _geomean(raw[:, j], raw[:, jn]) / (z_grid * hy * hy)
            rows.extend(i * ny + j for i in range(nx))
            cols.extend(i * ny + jn for i in range(nx))
            conds.extend(c.tolist())
        nodes = np.column_stack([xx.ravel(), yy.ravel()])
        n = nx * ny
        m = (raw / z_grid).ravel()
    else:
        mid, h, raw = _interval_cells(model, n_interior)
        z_grid = float(raw.sum())
        n = n_interior
        nodes = mid
        m = raw / z_grid
        rows = list(range(n - 1))
        cols = list(range(1, n))
        conds = (_geomean(raw[:-1], raw[1:]) / (z_grid * h * h)).tolist()
    inst = DiscreteInstance(
        nodes=nodes,
        m=m,
        energy_matrix=_laplacian(n, rows, cols, conds),
        boundary_mask=np.zeros(n, dtype=bool),
        metadata={"model": model_hash(model), "component": "interior"},
    )
    return _validate(inst)


def boundary_only_instance(model: ModelSpec, n_boundary: int | None = None) -> DiscreteInstance:
    """The boundary component alone: sticky atoms, or one cell circle per wall.

    The bare boundary form carries no diffusion weight here; for an atomic
    boundary the form is identically zero (atoms support no gradient).
    """
    dom = model.domain
    if isinstance(dom, Strip):
        if n_boundary is None:
            n_boundary = 64
        if n_boundary < 8:
            raise GridTooCoarse(
                f"need at least 8 cells per sticky circle, got {n_boundary}"
            )
        hy = dom.circumference / n_boundary
        y_mid = hy * (np.arange(n_boundary) + 0.5)
        walls = list(dom.sticky_walls())
        braw_walls = []
        for w in walls:
            with np.errstate(under="ignore"):
                bw = np.exp(model.boundary_potential.value(np.full(n_boundary, w), y_mid)) * hy
            braw_walls.append(_floored(bw))
        zb = float(sum(bw.sum() for bw in braw_walls))
        n = len(walls) * n_boundary
        nodes = np.zeros((n, 2))
        m = np.zeros(n)
        rows, cols, conds = [], [], []
        for k, w in enumerate(walls):
            base = k * n_boundary
            bw = braw_walls[k]
            nodes[base : base + n_boundary, 0] = w
            nodes[base : base + n_boundary, 1] = y_mid
            m[base : base + n_boundary] = bw / zb
            c = _geomean(bw, np.roll(bw, -1)) / (zb * hy * hy)
            rows.extend(base + j for j in range(n_boundary))
            cols.extend(base + (j + 1) % n_boundary for j in range(n_boundary))
            conds.extend(c.tolist())
    else:
        sticky = list(dom.sticky_points())
        with np.errstate(under="ignore"):
            braw = np.exp([model.boundary_potential.value(np.asarray(p)) for p in sticky])
        braw = np.asarray(braw, dtype=float)
        n = len(sticky)
        nodes = np.asarray(sticky, dtype=float)
        m = braw / braw.sum()
        rows, cols, conds = [], [], []
    inst = DiscreteInstance(
        nodes=nodes,
        m=m,
        energy_matrix=_laplacian(n, rows, cols, conds),
        boundary_mask=np.ones(n, dtype=bool),
        metadata={"model": model_hash(model), "component": "boundary"},
    )
    return _validate(inst)


@dataclass(eq=False)
class Generator:
    """Jump-chain view of an instance: exit rates and jump targets per node.

    Rates are conductance over holding mass; the chain is reversible with
    respect to the instance's masses by construction.
    """

    indptr: np.ndarray
    indices: np.ndarray
    rates: np.ndarray
    exit_rates: np.ndarray
    m: np.ndarray
    boundary_mask: np.ndarray

    @property
    def n(self) -> int:
        return self.exit_rates.shape[0]

    def neighbors(self, i: int):
        sl = slice(self.indptr[i], self.indptr[i + 1])
        return self.indices[sl], self.rates[sl]


def generator_of(inst: DiscreteInstance) -> Generator:
    """Extract the jump-chain generator; every node must be able to leave.

    Raises :class:`NegativeRate` if the energy matrix has positive
    off-diagonal entries (not a Laplacian) and :class:`AbsorbingState` if
    some node has no outgoing edge.
    """
    e = inst.energy_matrix.tocsr()
    n = inst.n
    offdiag = e.copy().tolil()
    offdiag.setdiag(0.0)
    offdiag = offdiag.tocsr()
    offdiag.eliminate_zeros()
    if offdiag.nnz and float(offdiag.data.max()) > 0:
        raise NegativeRate("energy matrix has positive off-diagonal entries")
    rates_mat = (-offdiag).multiply(1.0 / inst.m[:, None]).tocsr()
    exit_rates = np.asarray(rates_mat.sum(axis=1)).ravel()
    if np.any(exit_rates <= 0):
        dead = int(np.argmin(exit_rates))
        raise AbsorbingState(f"node {dead} has no outgoing rate")
    return Generator(
        indptr=rates_mat.indptr.copy(),
        indices=rates_mat.indices.copy(),
        rates=rates_mat.data.copy(),
        exit_rates=exit_rates,
        m=inst.m.copy(),
        boundary_mask=inst.boundary_mask.copy(),
    )
