"""Averaging blocks, dyadic shifts, scale-class partitions, and paraproducts.

A shift with parameters (i, j) maps f to the sum over cubes K of
project-out(j) . average-block(K) . project-in(i), where the per-cube
kernel is piecewise constant on the blocks max(i, j) + 1 generations
below K (the deeper of the two projection scales, so nothing the shift
can see is lost).  Kernels are either explicit tables or seeded draws
with a sup-norm cap, so the family's R-bound is capped by construction
in the scalar case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, MeshDepthError
from .grid import DyadicCube, DyadicSystem
from .gridfn import (GridFunction, _block_means, _expand_blocks,
                     conditional_expectation, lp_norm)
from .rng import substream
from .space import SCALAR, NormedSpace


def mod_class_partition(cubes, classes: int) -> list:
    """Split cubes into `classes` sub-collections by level mod `classes`."""
    if classes < 1:
        raise ValueError("need at least one class")
    out = [[] for _ in range(classes)]
    for cube in cubes:
        out[cube.level % classes].append(cube)
    return out


@dataclass(frozen=True)
class RandomKernel:
    """Seeded per-cube kernel draws, capped in sup norm (scalar case) or by a
    witness probe of the drawn block family (matrix case)."""

    seed: int
    cap: float = 1.0
    matrix_dim: int = 1
    probe_budget: int = 12

    def table(self, cube: DyadicCube, blocks: int) -> np.ndarray:
        gen = substream(self.seed, "shift-kernel", cube.level, *cube.corner)
        if self.matrix_dim == 1:
            return gen.uniform(-self.cap, self.cap, size=(blocks, blocks))
        raw = gen.uniform(-1.0, 1.0,
                          size=(blocks, blocks, self.matrix_dim, self.matrix_dim))
        probe = self.witness_probe(raw)
        if probe > 0:
            raw *= self.cap / probe
        return raw

    def witness_probe(self, table: np.ndarray) -> float:
        """Best witness ratio found for the block family of one table."""
        from .rademacher import OperatorFamily, rbound_probe

        family = OperatorFamily(
            tuple(table.reshape(-1, self.matrix_dim, self.matrix_dim)),
            NormedSpace(self.matrix_dim, 2.0),
        )
        return rbound_probe(family, 2.0, self.probe_budget, self.seed)


@dataclass(frozen=True)
class ExplicitKernel:
    """Kernel tables given per cube, keyed by (level, corner tuple)."""

    tables: dict

    def table(self, cube: DyadicCube, blocks: int) -> np.ndarray:
        arr = np.asarray(self.tables[cube.key()], dtype=float)
        if arr.shape[0] != blocks:
            raise ValueError(f"kernel table for {cube.key()} has wrong block count")
        return arr


@dataclass(frozen=True)
class ShiftSpec:
    """Parameters, kernel source, and summation range of a dyadic shift."""

    i: int
    j: int
    system: DyadicSystem
    kernel: object
    space: NormedSpace = SCALAR
    k_levels: Optional[tuple] = None  # inclusive (lo, hi) for the K sum

    @property
    def complexity(self) -> int:
        return max(self.i, self.j) + 1

    @property
    def block_gap(self) -> int:
        return max(self.i, self.j) + 1

    def level_range(self) -> range:
        lo = self.system.min_level
        hi = self.system.depth - self.block_gap
        if self.k_levels is not None:
            lo, hi = max(lo, self.k_levels[0]), min(hi, self.k_levels[1])
        if hi < lo:
            raise MeshDepthError("shift complexity exceeds the mesh depth")
        return range(lo, hi + 1)

    def blocks_per_axis(self) -> int:
        return 1 << self.block_gap


def apply_averaging(cube: DyadicCube, table: np.ndarray, f: GridFunction,
                    block_level: int) -> GridFunction:
    """Averaging block on `cube`: x -> (1_K(x)/|K|) integral of a_K(x, x') f(x').

    `table` is indexed by flattened block pairs (output, input) at
    `block_level`; scalar tables have shape (B, B), matrix tables
    (B, B, n, n).
    """
    sysm, d, n = f.system, f.system.d, f.space.dim
    factor = 1 << (sysm.depth - block_level)
    b_axis = cube.size_cells // factor
    view = f.values[cube.cell_slices()]
    block_integrals = _block_means(view, d, factor).reshape(-1, n) * (
        (2.0**-block_level) ** d
    )
    if table.ndim == 2:
        out_blocks = (table @ block_integrals) / cube.volume
    else:
        out_blocks = np.einsum("oibc,ic->ob", table, block_integrals) / cube.volume
    out = np.zeros_like(f.values)
    shaped = out_blocks.reshape((b_axis,) * d + (n,))
    out[cube.cell_slices()] = _expand_blocks(shaped, d, factor)
    return GridFunction(sysm, out, f.space)


def _shift_term_blocks(spec: ShiftSpec, cube: DyadicCube, f_view: np.ndarray) -> np.ndarray:
    """One K term of the shift, as block values at the kernel resolution."""
    d, n = spec.system.d, spec.space.dim
    gap = spec.block_gap
    b_axis = 1 << gap
    cell_factor = cube.size_cells >> gap

    def means_at(g: int) -> np.ndarray:
        return _block_means(f_view, d, cube.size_cells >> g)

    def blocks_at(arr: np.ndarray, g: int) -> np.ndarray:
        return _expand_blocks(arr, d, 1 << (gap - g))

    proj_in = blocks_at(means_at(spec.i + 1), spec.i + 1) - blocks_at(means_at(spec.i), spec.i)
    table = spec.kernel.table(cube, b_axis**d)
    integrals = proj_in.reshape(-1, n) * (cube.volume / b_axis**d)
    if table.ndim == 2:
        averaged = (table @ integrals) / cube.volume
    else:
        averaged = np.einsum("oibc,ic->ob", table, integrals) / cube.volume
    averaged = averaged.reshape((b_axis,) * d + (n,))

    def block_group_means(arr: np.ndarray, g: int) -> np.ndarray:
        return blocks_at(_block_means(arr, d, 1 << (gap - g)), g)

    return block_group_means(averaged, spec.j + 1) - block_group_means(averaged, spec.j)


def apply_shift(spec: ShiftSpec, f: GridFunction) -> GridFunction:
    """Sum over cubes K of project(j) . averaging-block(K) . project(i)."""
    if f.system != spec.system or f.space.dim != spec.space.dim:
        raise ValueError("function does not match the shift's system/space")
    d = spec.system.d
    out = np.zeros_like(f.values)
    for level in spec.level_range():
        for cube in spec.system.cubes_at_level(level):
            view = f.values[cube.cell_slices()]
            blocks = _shift_term_blocks(spec, cube, view)
            factor = cube.size_cells >> spec.block_gap
            out[cube.cell_slices()] += _expand_blocks(blocks, d, factor)
    return GridFunction(spec.system, out, spec.space)


def adjoint_spec(spec: ShiftSpec) -> ShiftSpec:
    """Adjoint shift: parameters swapped, kernels transposed per cube."""
    blocks = spec.blocks_per_axis() ** spec.system.d
    tables = {}
    for level in spec.level_range():
        for cube in spec.system.cubes_at_level(level):
            table = spec.kernel.table(cube, blocks)
            if table.ndim == 2:
                tables[cube.key()] = table.T.copy()
            else:
                tables[cube.key()] = table.transpose(1, 0, 3, 2).copy()
    return ShiftSpec(spec.j, spec.i, spec.system, ExplicitKernel(tables),
                     spec.space, spec.k_levels)


# -- paraproducts -----------------------------------------------------------------


@dataclass(frozen=True)
class ParaproductSpec:
    """Symbol function and cube range of a dyadic paraproduct."""

    b: GridFunction
    levels: Optional[tuple] = None  # inclusive (lo, hi) cube levels
    root: Optional[DyadicCube] = None

    def level_range(self) -> range:
        sysm = self.b.system
        lo, hi = sysm.min_level, sysm.depth - 1
        if self.levels is not None:
            lo, hi = max(lo, self.levels[0]), min(hi, self.levels[1])
        if self.root is not None:
            lo = max(lo, self.root.level)
        return range(lo, hi + 1)


def apply_paraproduct(spec: ParaproductSpec, f: GridFunction) -> GridFunction:
    """Sum over cubes Q of (Haar projection of the symbol at Q) times <f>_Q.

    Scalar symbols multiply vector values pointwise; matrix symbols (with
    values stored as flattened n*n vectors) act by matrix-vector products.
    """
    b, sysm = spec.b, spec.b.system
    if f.system != sysm:
        raise ValueError("symbol and argument live on different systems")
    n = f.space.dim
    matrix_symbol = b.space.dim == n * n and n > 1
    if not matrix_symbol and b.space.dim != 1:
        raise ValueError("symbol must be scalar or act as n x n matrices")
    mask = None
    if spec.root is not None:
        mask = np.zeros(f.values.shape[:-1], dtype=bool)
        mask[spec.root.cell_slices()] = True
    out = np.zeros_like(f.values)
    for level in spec.level_range():
        proj = (conditional_expectation(b, level + 1).values
                - conditional_expectation(b, level).values)
        avg = conditional_expectation(f, level).values
        if matrix_symbol:
            term = np.einsum("...bc,...c->...b",
                             proj.reshape(proj.shape[:-1] + (n, n)), avg)
        else:
            term = proj * avg
        if mask is not None:
            term = np.where(mask[..., None], term, 0.0)
        out += term
    return GridFunction(sysm, out, f.space)


def operator_ratio(apply_fn, samples, p: float) -> float:
    """Largest output/input L^p ratio over the given inputs."""
    best = 0.0
    seen_nonzero = False
    for f in samples:
        den = lp_norm(f, p)
        if den == 0.0:
            continue
        seen_nonzero = True
        best = max(best, lp_norm(apply_fn(f), p) / den)
    if not seen_nonzero:
        raise DegenerateInputError("all sample inputs are zero")
    return best


# -- serialization -----------------------------------------------------------------


def shift_spec_to_json(spec: ShiftSpec) -> str:
    doc = {
        "i": spec.i,
        "j": spec.j,
        "levels": list(spec.k_levels) if spec.k_levels else None,
        "space": {"dim": spec.space.dim, "q": None if spec.space.q == np.inf else spec.space.q},
        "system": {
            "d": spec.system.d,
            "m_top": spec.system.m_top,
            "depth": spec.system.depth,
            "omega": [list(b) for b in spec.system.omega],
        },
    }
    if isinstance(spec.kernel, RandomKernel):
        doc["kernel"] = {"seed": spec.kernel.seed, "cap": spec.kernel.cap,
                         "matrix_dim": spec.kernel.matrix_dim}
    else:
        doc["kernel"] = {
            "tables": {f"{lvl}:{','.join(map(str, corner))}": np.asarray(t).tolist()
                       for (lvl, corner), t in spec.kernel.tables.items()}
        }
    return json.dumps(doc, sort_keys=True)


def shift_spec_from_json(text: str) -> ShiftSpec:
    doc = json.loads(text)
    sysm = DyadicSystem(
        d=doc["system"]["d"], m_top=doc["system"]["m_top"],
        depth=doc["system"]["depth"],
        omega=tuple(tuple(b) for b in doc["system"]["omega"]),
    )
    q = doc["space"]["q"]
    space = NormedSpace(doc["space"]["dim"], np.inf if q is None else q)
    kern_doc = doc["kernel"]
    if "seed" in kern_doc:
        kernel = RandomKernel(kern_doc["seed"], kern_doc["cap"], kern_doc["matrix_dim"])
    else:
        tables = {}
        for key, tab in kern_doc["tables"].items():
            lvl, corner = key.split(":")
            tables[(int(lvl), tuple(int(c) for c in corner.split(",")))] = np.asarray(tab)
        kernel = ExplicitKernel(tables)
    levels = tuple(doc["levels"]) if doc["levels"] else None
    return ShiftSpec(doc["i"], doc["j"], sysm, kernel, space, levels)


def paraproduct_spec_to_json(spec: ParaproductSpec) -> str:
    b = spec.b
    doc = {
        "levels": list(spec.levels) if spec.levels else None,
        "root": list(spec.root.key()[1]) + [spec.root.level] if spec.root else None,
        "space": {"dim": b.space.dim,
                  "q": None if b.space.q == np.inf else b.space.q},
        "system": {
            "d": b.system.d, "m_top": b.system.m_top, "depth": b.system.depth,
            "omega": [list(bits) for bits in b.system.omega],
        },
        "symbol": b.values.reshape(-1).tolist(),
    }
    return json.dumps(doc, sort_keys=True)


def paraproduct_spec_from_json(text: str) -> ParaproductSpec:
    doc = json.loads(text)
    sysm = DyadicSystem(
        d=doc["system"]["d"], m_top=doc["system"]["m_top"],
        depth=doc["system"]["depth"],
        omega=tuple(tuple(b) for b in doc["system"]["omega"]),
    )
    q = doc["space"]["q"]
    space = NormedSpace(doc["space"]["dim"], np.inf if q is None else q)
    from .gridfn import GridFunction

    shape = (sysm.cells_per_axis,) * sysm.d + (space.dim,)
    b = GridFunction(sysm, np.asarray(doc["symbol"]).reshape(shape), space)
    root = None
    if doc["root"] is not None:
        *corner, level = doc["root"]
        root = sysm.cube(level, tuple(corner))
    levels = tuple(doc["levels"]) if doc["levels"] else None
    return ParaproductSpec(b, levels, root)
