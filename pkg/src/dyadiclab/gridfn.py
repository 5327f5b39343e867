"""Piecewise-constant functions on dyadic meshes and their Haar analysis.

A GridFunction stores one value of a finite-dimensional normed space per
finest-level cell; every integral over a dyadic cube is an exact cell sum,
so no quadrature error enters anywhere in the package.

Bulk per-level operations (level means, analyze/synthesize, paraproduct
support) require the involved levels to be aligned with the cell grid,
which holds for standard systems at every level.  Per-cube operations
(averages, Haar coefficients, projections) work in any translated system
because a translated cube's descendants align with the block grid inside
its own cell slice.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MeshDepthError
from .grid import DyadicCube, DyadicSystem
from .rng import substream
from .space import SCALAR, NormedSpace


def etas(d: int) -> list:
    """Nonzero Haar sign indices in lexicographic order."""
    return list(itertools.product((0, 1), repeat=d))[1:]


def _eta_sign(eta, child_offset) -> int:
    return -1 if sum(e * c for e, c in zip(eta, child_offset)) % 2 else 1


@dataclass(frozen=True)
class GridFunction:
    system: DyadicSystem
    values: np.ndarray  # shape (cells,)*d + (space.dim,)
    space: NormedSpace = SCALAR

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        expected = (self.system.cells_per_axis,) * self.system.d + (self.space.dim,)
        if arr.shape != expected:
            raise ValueError(f"values shape {arr.shape} != expected {expected}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.system, self.values + other.values, self.space)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.system, self.values - other.values, self.space)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.system, self.values * scalar, self.space)

    __rmul__ = __mul__

    def scalar_values(self) -> np.ndarray:
        if self.space.dim != 1:
            raise ValueError("not a scalar-valued function")
        return self.values[..., 0]


def zeros(system: DyadicSystem, space: NormedSpace = SCALAR) -> GridFunction:
    shape = (system.cells_per_axis,) * system.d + (space.dim,)
    return GridFunction(system, np.zeros(shape), space)


def from_callable(system: DyadicSystem, fn, space: NormedSpace = SCALAR) -> GridFunction:
    """Sample a function at cell midpoints (exact for cellwise-constant data)."""
    pts = system.cell_centers()
    vals = np.asarray(fn(pts), dtype=float)
    if vals.shape == pts.shape[:-1]:
        vals = vals[..., None]
    return GridFunction(system, vals, space)


def indicator(cube: DyadicCube, space: NormedSpace = SCALAR,
              value: Optional[np.ndarray] = None) -> GridFunction:
    f = np.zeros((cube.system.cells_per_axis,) * cube.system.d + (space.dim,))
    vec = np.ones(space.dim) if value is None else np.asarray(value, dtype=float)
    f[cube.cell_slices()] = vec
    return GridFunction(cube.system, f, space)


def haar_vector(cube: DyadicCube, eta) -> np.ndarray:
    """Cell array of the L2-normalized Haar function h^eta on `cube`."""
    sysm = cube.system
    if cube.level >= sysm.depth and any(eta):
        raise MeshDepthError("Haar function needs resolvable children")
    arr = np.zeros((sysm.cells_per_axis,) * sysm.d)
    half = cube.size_cells // 2 if cube.size_cells > 1 else 0
    sub = np.ones((cube.size_cells,) * sysm.d)
    for ax, e in enumerate(eta):
        if e:
            idx = [slice(None)] * sysm.d
            idx[ax] = slice(half, None)
            sub[tuple(idx)] *= -1.0
    arr[cube.cell_slices()] = sub * cube.volume**-0.5
    return arr


def haar_function(cube: DyadicCube, eta, space: NormedSpace = SCALAR) -> GridFunction:
    vec = haar_vector(cube, eta)[..., None] * np.ones(space.dim)
    return GridFunction(cube.system, vec, space)


def haar_eval(cube: DyadicCube, eta, points) -> np.ndarray:
    """Evaluate h^eta at points, 0 outside the (translated) cube."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    geo = cube.geometry()
    inside = np.ones(pts.shape[0], dtype=bool)
    sign = np.ones(pts.shape[0])
    for ax in range(cube.system.d):
        t = pts[:, ax] - geo[ax, 0]
        inside &= (t >= 0) & (t < cube.side)
        if eta[ax]:
            sign *= np.where(t < cube.side / 2, 1.0, -1.0)
    return np.where(inside, sign * cube.volume**-0.5, 0.0)


# -- per-cube operations (valid in any system) -------------------------------


def _block_means(arr: np.ndarray, d: int, factor: int) -> np.ndarray:
    """Means over blocks of `factor` cells per axis; trailing axis kept."""
    if factor == 1:
        return arr
    n = arr.shape[-1]
    if d == 1:
        b = arr.shape[0] // factor
        return arr.reshape(b, factor, n).mean(axis=1)
    b = arr.shape[0] // factor
    return arr.reshape(b, factor, b, factor, n).mean(axis=(1, 3))


def _expand_blocks(blocks: np.ndarray, d: int, factor: int) -> np.ndarray:
    out = blocks
    for ax in range(d):
        out = np.repeat(out, factor, axis=ax)
    return out


def cube_average(f: GridFunction, cube: DyadicCube) -> np.ndarray:
    view = f.values[cube.cell_slices()]
    return view.reshape(-1, f.space.dim).mean(axis=0)


def cube_integral(f: GridFunction, cube: DyadicCube) -> np.ndarray:
    return cube_average(f, cube) * cube.volume


def haar_coefficient(f: GridFunction, cube: DyadicCube, eta) -> np.ndarray:
    """Inner product of f with h^eta on `cube`, by exact cell sums."""
    d = f.system.d
    view = f.values[cube.cell_slices()]
    if cube.size_cells == 1:
        if any(eta):
            raise MeshDepthError("oscillating Haar function needs children")
        return view.reshape(f.space.dim) * cube.volume**0.5
    half = cube.size_cells // 2
    kid_means = _block_means(view, d, half)
    coeff = np.zeros(f.space.dim)
    child_vol = cube.volume / 2**d
    for offs in itertools.product((0, 1), repeat=d):
        coeff += _eta_sign(eta, offs) * kid_means[offs] * child_vol
    return coeff * cube.volume**-0.5


def haar_projection(f: GridFunction, cube: DyadicCube) -> GridFunction:
    """Difference between child-level and cube-level averages on `cube`."""
    if cube.level >= f.system.depth:
        raise MeshDepthError("projection needs resolvable children")
    d = f.system.d
    view = f.values[cube.cell_slices()]
    half = cube.size_cells // 2
    kid = _expand_blocks(_block_means(view, d, half), d, half)
    out = np.zeros_like(f.values)
    out[cube.cell_slices()] = kid - view.reshape(-1, f.space.dim).mean(axis=0)
    return GridFunction(f.system, out, f.space)


def shifted_projection(f: GridFunction, root: DyadicCube, gap: int) -> GridFunction:
    """Sum of Haar projections over the subcubes `gap` generations below root."""
    if root.level + gap + 1 > f.system.depth:
        raise MeshDepthError(f"gap {gap} below level {root.level} leaves the mesh")
    d = f.system.d
    view = f.values[root.cell_slices()]
    fine = root.size_cells >> (gap + 1)
    coarse = root.size_cells >> gap
    delta = (_expand_blocks(_block_means(view, d, fine), d, fine)
             - _expand_blocks(_block_means(view, d, coarse), d, coarse))
    out = np.zeros_like(f.values)
    out[root.cell_slices()] = delta
    return GridFunction(f.system, out, f.space)


# -- aligned per-level operations ---------------------------------------------


def _require_aligned(system: DyadicSystem, level: int):
    if np.any(system.shift_cells(level)):
        raise ValueError(
            f"level {level} of this system is not cell-grid aligned; "
            "use per-cube operations instead"
        )


def level_means(f: GridFunction, level: int) -> np.ndarray:
    """Block means over all level-`level` cubes (aligned systems)."""
    _require_aligned(f.system, level)
    factor = 1 << (f.system.depth - level)
    return _block_means(f.values, f.system.d, factor)


def conditional_expectation(f: GridFunction, level: int) -> GridFunction:
    factor = 1 << (f.system.depth - level)
    blocks = level_means(f, level)
    return GridFunction(f.system, _expand_blocks(blocks, f.system.d, factor), f.space)


# -- Haar analysis / synthesis -------------------------------------------------


@dataclass(frozen=True)
class HaarCoefficients:
    """Haar coefficients per level plus the coarse block averages.

    `coeffs[level]` has shape (blocks,)*d + (2^d - 1, dim) with the last
    Haar index ordered as etas(d); `coarse` holds the block means at
    `level_lo` needed to reproduce the function exactly.
    """

    system: DyadicSystem
    space: NormedSpace
    level_lo: int
    level_hi: int
    coeffs: dict
    coarse: np.ndarray

    def get(self, cube: DyadicCube, eta) -> np.ndarray:
        arr = self.coeffs[cube.level]
        blocks = arr.shape[0]
        start = cube.start_cells() // cube.size_cells
        if np.any(start < 0) or np.any(start >= blocks):
            raise KeyError("cube outside the analyzed range")
        return arr[tuple(int(s) for s in start)][etas(self.system.d).index(tuple(eta))]


def analyze(f: GridFunction, level_lo: int, level_hi: Optional[int] = None) -> HaarCoefficients:
    """Haar coefficients for cube levels level_lo..level_hi (aligned systems)."""
    sysm = f.system
    if level_hi is None:
        level_hi = sysm.depth - 1
    if not (sysm.min_level <= level_lo <= level_hi <= sysm.depth - 1):
        raise MeshDepthError("analysis range outside the mesh")
    d, n = sysm.d, f.space.dim
    eta_list = etas(d)
    means = level_means(f, level_hi + 1)
    coeffs = {}
    for level in range(level_hi, level_lo - 1, -1):
        _require_aligned(sysm, level)
        b = means.shape[0] // 2
        if d == 1:
            kids = means.reshape(b, 2, n)
            parent = kids.mean(axis=1)
        else:
            kids = means.reshape(b, 2, b, 2, n).transpose(0, 2, 1, 3, 4)
            parent = kids.mean(axis=(2, 3))
        scale = 2.0 ** (-level * d / 2.0) / 2**d  # |I|^{1/2} * 2^{-d}
        level_coeffs = np.zeros((b,) * d + (len(eta_list), n))
        for idx, eta in enumerate(eta_list):
            acc = np.zeros((b,) * d + (n,))
            for offs in itertools.product((0, 1), repeat=d):
                sel = kids[..., offs[0], :] if d == 1 else kids[..., offs[0], offs[1], :]
                acc += _eta_sign(eta, offs) * sel
            level_coeffs[..., idx, :] = acc * scale
        coeffs[level] = level_coeffs
        means = parent
    return HaarCoefficients(sysm, f.space, level_lo, level_hi, coeffs, means)


def synthesize(hc: HaarCoefficients) -> GridFunction:
    """Exact inverse of analyze: coarse averages plus all Haar layers."""
    sysm, d, n = hc.system, hc.system.d, hc.space.dim
    eta_list = etas(d)
    means = hc.coarse
    for level in range(hc.level_lo, hc.level_hi + 1):
        b = means.shape[0]
        scale = 2.0 ** (level * d / 2.0)  # |I|^{-1/2}
        if d == 1:
            kids = np.repeat(means.reshape(b, 1, n), 2, axis=1)
        else:
            kids = np.repeat(
                np.repeat(means.reshape(b, 1, b, 1, n), 2, axis=1), 2, axis=3
            ).transpose(0, 2, 1, 3, 4)
        for offs in itertools.product((0, 1), repeat=d):
            delta = np.zeros((b,) * d + (n,))
            for idx, eta in enumerate(eta_list):
                delta += _eta_sign(eta, offs) * hc.coeffs[level][..., idx, :]
            if d == 1:
                kids[:, offs[0], :] += scale * delta
            else:
                kids[:, :, offs[0], offs[1], :] += scale * delta
        if d == 1:
            means = kids.reshape(2 * b, n)
        else:
            means = kids.transpose(0, 2, 1, 3, 4).reshape(2 * b, 2 * b, n)
    factor = 1 << (sysm.depth - hc.level_hi - 1)
    return GridFunction(sysm, _expand_blocks(means, d, factor), hc.space)


# -- norms and pairings ---------------------------------------------------------


def lp_norm(f: GridFunction, p: float) -> float:
    norms = f.space.norm(f.values)
    if p == np.inf:
        return float(norms.max())
    return float((norms**p).sum() * f.system.cell_volume) ** (1.0 / p)


def pair(g: GridFunction, f: GridFunction) -> float:
    """Bilinear duality pairing: integral of the pointwise dot product."""
    if g.space.dim != f.space.dim:
        raise ValueError("dual pairing needs matching dimensions")
    return float((g.values * f.values).sum() * f.system.cell_volume)


def bmo_norm(b: GridFunction, p: float) -> float:
    """Supremum over all system cubes of the p-mean oscillation."""
    sysm = b.system
    best = 0.0
    for level in range(sysm.min_level, sysm.depth + 1):
        _require_aligned(sysm, level)
        factor = 1 << (sysm.depth - level)
        means = _expand_blocks(_block_means(b.values, sysm.d, factor), sysm.d, factor)
        dev = b.space.norm(b.values - means)
        if p == np.inf:
            val = float(dev.max())
        else:
            val = float(_block_means((dev**p)[..., None], sysm.d, factor).max()) ** (1.0 / p)
        best = max(best, val)
    return best


# -- random data ---------------------------------------------------------------


def random_grid_function(system: DyadicSystem, seed: int, space: NormedSpace = SCALAR,
                         support: Optional[DyadicCube] = None,
                         mean_zero: Optional[str] = None,
                         label: str = "grid-function") -> GridFunction:
    """Seeded standard-normal cell values, optionally supported/centred.

    mean_zero: None, "global", or "per_top" (zero average on each
    top-level cube of the system, hence also globally).
    """
    gen = substream(seed, label)
    shape = (system.cells_per_axis,) * system.d + (space.dim,)
    vals = np.zeros(shape)
    if support is None:
        vals[...] = gen.standard_normal(shape)
    else:
        sl = support.cell_slices()
        vals[sl] = gen.standard_normal(vals[sl].shape)
    if mean_zero == "per_top":
        f = GridFunction(system, vals, space)
        out = np.array(vals)
        for q in system.top_cubes():
            sl = q.cell_slices()
            if support is not None:
                mask = np.zeros(shape[:-1], dtype=bool)
                mask[support.cell_slices()] = True
                submask = mask[sl]
                if not submask.any():
                    continue
                sub = out[sl]
                sub[submask] -= sub[submask].mean(axis=0)
                out[sl] = sub
            else:
                out[sl] -= cube_average(f, q)
        vals = out
    elif mean_zero == "global":
        mask = np.ones(shape[:-1], dtype=bool)
        if support is not None:
            mask[...] = False
            mask[support.cell_slices()] = True
        vals[mask] -= vals[mask].mean(axis=0)
    return GridFunction(system, vals, space)


# -- serialization ---------------------------------------------------------------


def to_csv(f: GridFunction) -> str:
    """CSV rows of (cell index d-tuple, value components)."""
    out = io.StringIO()
    d, n = f.system.d, f.space.dim
    idx_cols = ",".join(f"i{ax}" for ax in range(d))
    val_cols = ",".join(f"v{k}" for k in range(n))
    out.write(f"{idx_cols},{val_cols}\n")
    flat = f.values.reshape(-1, n)
    for pos, row in enumerate(flat):
        if d == 1:
            idx = (pos,)
        else:
            idx = divmod(pos, f.system.cells_per_axis)
        out.write(",".join(str(i) for i in idx))
        out.write(",")
        out.write(",".join(repr(float(v)) for v in row))
        out.write("\n")
    return out.getvalue()


def from_csv(system: DyadicSystem, text: str, space: NormedSpace = SCALAR) -> GridFunction:
    lines = [ln for ln in text.strip().splitlines()[1:] if ln]
    d, n = system.d, space.dim
    vals = np.zeros((system.cells_per_axis,) * d + (n,))
    for ln in lines:
        parts = ln.split(",")
        idx = tuple(int(x) for x in parts[:d])
        vals[idx] = [float(x) for x in parts[d:]]
    return GridFunction(system, vals, space)


def to_bytes(f: GridFunction) -> bytes:
    """Flat little-endian float64 values in C order, cells then components."""
    return np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def from_bytes(system: DyadicSystem, raw: bytes, space: NormedSpace = SCALAR) -> GridFunction:
    shape = (system.cells_per_axis,) * system.d + (space.dim,)
    vals = np.frombuffer(raw, dtype="<f8").reshape(shape)
    return GridFunction(system, vals.copy(), space)
