"""Dyadic cubes, randomly translated dyadic systems, and good-cube geometry.

The ambient domain is the half-open cube A = [-2^m_top, 2^m_top)^d.  A
system resolves levels k in [-m_top, depth]; a cube at level k has side
2^-k.  Random translation is encoded by bits omega_j in {0,1}^d, one per
scale 2^-j with -m_top < j <= depth; a level-k cube is shifted by
sum_{j>k} 2^-j omega_j, so translated cubes are always unions of finest
level cells and all geometry stays exact in integer cell units.

Nesting in a translated system is rerandomized across scales: the parent
of the cube with corner m at level k has corner floor((m - omega_k)/2).
Consequently the bits at scales coarser than or equal to a cube's side
determine its position inside its ancestors (hence its goodness), while
the strictly finer bits determine its absolute position.  These two bit
groups are disjoint, which makes position and goodness exactly
independent under enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import AmbientRangeError, ResourceLimitError
from .rng import substream

_GOOD_TIE_TOL = 1e-12


@dataclass(frozen=True)
class DyadicSystem:
    """A truncated, possibly translated dyadic lattice over the ambient cube."""

    d: int = 1
    m_top: int = 0
    depth: int = 8
    omega: tuple = ()  # bits for scales j = -m_top+1 .. depth, each in {0,1}^d

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("only d in {1, 2} is supported")
        if self.depth < 0 or self.m_top < 0:
            raise ValueError("depth and m_top must be nonnegative")
        if len(self.omega) > self.m_top + self.depth:
            raise ValueError("too many translation bits for the level range")
        for bits in self.omega:
            if len(bits) != self.d or any(b not in (0, 1) for b in bits):
                raise ValueError("omega entries must be bits in {0,1}^d")

    @staticmethod
    def random(seed: int, d: int = 1, m_top: int = 0, depth: int = 8) -> "DyadicSystem":
        gen = substream(seed, "dyadic-system-omega")
        bits = tuple(
            tuple(int(b) for b in gen.integers(0, 2, size=d))
            for _ in range(m_top + depth)
        )
        return DyadicSystem(d=d, m_top=m_top, depth=depth, omega=bits)

    # -- scales and cells -------------------------------------------------

    @property
    def min_level(self) -> int:
        return -self.m_top

    @property
    def cells_per_axis(self) -> int:
        return 1 << (self.m_top + 1 + self.depth)

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**self.d

    @property
    def cell_volume(self) -> float:
        return float(2.0 ** (-self.depth * self.d))

    @property
    def origin_cell(self) -> int:
        """Cell index of coordinate 0 along each axis."""
        return 1 << (self.m_top + self.depth)

    def bit(self, j: int) -> tuple:
        """Translation bits at scale 2^-j (unsampled scales default to 0)."""
        idx = j + self.m_top - 1
        if 0 <= idx < len(self.omega):
            return self.omega[idx]
        return (0,) * self.d

    def shift_cells(self, level: int) -> np.ndarray:
        """Translation of level-`level` cubes, in finest-cell units."""
        shift = np.zeros(self.d, dtype=np.int64)
        for j in range(level + 1, self.depth + 1):
            shift += (1 << (self.depth - j)) * np.asarray(self.bit(j), dtype=np.int64)
        return shift

    def cell_centers(self) -> np.ndarray:
        """Midpoints of all finest cells, shape (cells_per_axis,)*d + (d,)."""
        side = 2.0**-self.depth
        axis = -(2.0**self.m_top) + side * (np.arange(self.cells_per_axis) + 0.5)
        if self.d == 1:
            return axis[:, None]
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        return np.stack([xx, yy], axis=-1)

    # -- cube construction -------------------------------------------------

    def cube(self, level: int, corner: Sequence[int]) -> "DyadicCube":
        return DyadicCube(self, level, tuple(int(c) for c in corner))

    def top_cubes(self) -> list:
        return list(self.cubes_at_level(self.min_level))

    def cubes_at_level(self, level: int, within=None) -> Iterator["DyadicCube"]:
        """All level-`level` cubes inside the ambient cube.

        `within` optionally restricts to cubes meeting a cell box, given as
        per-axis (lo, hi) cell index pairs.
        """
        size = 1 << (self.depth - level)
        shift = self.shift_cells(level)

        def ceil_div(a: int, b: int) -> int:
            return -((-a) // b)

        ranges = []
        for ax in range(self.d):
            lo_cell, hi_cell = 0, self.cells_per_axis
            if within is not None:
                lo_cell, hi_cell = within[ax]
            base = self.origin_cell + int(shift[ax])  # start cell of corner m is m*size + base
            m_lo = max(ceil_div(lo_cell - size + 1 - base, size),
                       ceil_div(0 - base, size))
            m_hi = min((hi_cell - 1 - base) // size,
                       (self.cells_per_axis - size - base) // size)
            ranges.append(range(m_lo, m_hi + 1))
        for corner in itertools.product(*ranges):
            yield DyadicCube(self, level, corner)


@dataclass(frozen=True)
class DyadicCube:
    """A cube of side 2^-level inside a (possibly translated) dyadic system."""

    system: DyadicSystem
    level: int
    corner: tuple

    def __post_init__(self):
        sysm = self.system
        if not (sysm.min_level <= self.level <= sysm.depth):
            raise AmbientRangeError(
                f"level {self.level} outside [{sysm.min_level}, {sysm.depth}]"
            )
        if len(self.corner) != sysm.d:
            raise AmbientRangeError("corner dimension mismatch")
        start = self.start_cells()
        size = self.size_cells
        for ax in range(sysm.d):
            if start[ax] < 0 or start[ax] + size > sysm.cells_per_axis:
                raise AmbientRangeError(
                    f"cube level={self.level} corner={self.corner} leaves the ambient"
                )

    # -- geometry ----------------------------------------------------------

    @property
    def side(self) -> float:
        return float(2.0**-self.level)

    @property
    def volume(self) -> float:
        return self.side**self.system.d

    @property
    def size_cells(self) -> int:
        return 1 << (self.system.depth - self.level)

    def start_cells(self) -> np.ndarray:
        sysm = self.system
        corner = np.asarray(self.corner, dtype=np.int64)
        return corner * self.size_cells + sysm.origin_cell + sysm.shift_cells(self.level)

    def cell_slices(self) -> tuple:
        start = self.start_cells()
        size = self.size_cells
        return tuple(slice(int(s), int(s) + size) for s in start)

    def geometry(self) -> np.ndarray:
        """Translated intervals per axis, shape (d, 2), exact dyadic floats."""
        cell = 2.0**-self.system.depth
        start = self.start_cells()
        lo = -(2.0**self.system.m_top) + start * cell
        return np.stack([lo, lo + self.side], axis=-1)

    def contains_cube(self, other: "DyadicCube") -> bool:
        a, b = self.start_cells(), other.start_cells()
        return bool(
            np.all(a <= b) and np.all(b + other.size_cells <= a + self.size_cells)
        )

    # -- lattice structure (translated nesting) -----------------------------

    def parent(self) -> "DyadicCube":
        sysm = self.system
        if self.level <= sysm.min_level:
            raise AmbientRangeError("top-level cube has no parent in the system")
        bits = sysm.bit(self.level)
        corner = tuple((m - b) >> 1 for m, b in zip(self.corner, bits))
        return DyadicCube(sysm, self.level - 1, corner)

    def children(self) -> list:
        sysm = self.system
        if self.level >= sysm.depth:
            raise AmbientRangeError("finest-level cube has no children in the mesh")
        bits = sysm.bit(self.level + 1)
        kids = []
        for offs in itertools.product((0, 1), repeat=sysm.d):
            corner = tuple(2 * m + b + e for m, b, e in zip(self.corner, bits, offs))
            kids.append(DyadicCube(sysm, self.level + 1, corner))
        return kids

    def ancestor(self, levels_up: int) -> "DyadicCube":
        cube = self
        for _ in range(levels_up):
            cube = cube.parent()
        return cube

    def key(self) -> tuple:
        return (self.level, self.corner)


def translate(cube: DyadicCube) -> np.ndarray:
    """Geometric realization of a cube under its system's translation."""
    return cube.geometry()


def common_ancestor(a: DyadicCube, b: DyadicCube) -> DyadicCube:
    """Minimal cube of the shared system containing both `a` and `b`."""
    if a.system != b.system:
        raise ValueError("cubes belong to different systems")
    while a.level > b.level:
        a = a.parent()
    while b.level > a.level:
        b = b.parent()
    while a.corner != b.corner:
        if a.level <= a.system.min_level:
            raise AmbientRangeError("no common ancestor inside the ambient")
        a, b = a.parent(), b.parent()
    return a


# -- goodness ---------------------------------------------------------------


@dataclass(frozen=True)
class GoodnessParams:
    """Boundary exponent, ancestor threshold, and ancestor-chain truncation.

    Ancestors at level gap s (side 2^s times the cube's) are inspected for
    r <= s, truncated by `max_generations` (relative) and/or
    `max_ancestor_level` (absolute coarsest level), and always by the
    system's own level floor.  A cube with no inspectable ancestors is
    good by vacuity.
    """

    gamma: float
    r: int
    max_ancestor_level: Optional[int] = None
    max_generations: Optional[int] = None

    def __post_init__(self):
        if not (0 < self.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        if self.r < 1:
            raise ValueError("r must be a positive integer")


def _offset_units(cube: DyadicCube, s: int) -> np.ndarray:
    """Offset of the cube inside its s-generation ancestor, in side units."""
    sysm = cube.system
    u = np.zeros(sysm.d, dtype=np.int64)
    for t in range(s):
        u += (1 << t) * np.asarray(sysm.bit(cube.level - t), dtype=np.int64)
    m = np.asarray(cube.corner, dtype=np.int64)
    return (m - u) % (1 << s)


def _gap_range(cube: DyadicCube, params: GoodnessParams) -> range:
    floor = cube.system.min_level
    if params.max_ancestor_level is not None:
        floor = max(floor, params.max_ancestor_level)
    s_hi = cube.level - floor
    if params.max_generations is not None:
        s_hi = min(s_hi, params.max_generations)
    return range(params.r, s_hi + 1)


def is_good(cube: DyadicCube, params: GoodnessParams) -> bool:
    """Whether the translated cube is far from every inspected ancestor's boundary.

    The distance test compares the integer cell distance against the
    gamma-power threshold (evaluated in floating point); near-ties within
    1e-12 count as bad.
    """
    for s in _gap_range(cube, params):
        o = _offset_units(cube, s)
        dist_units = int(np.min(np.minimum(o, (1 << s) - 1 - o)))
        threshold = 2.0 ** (s * (1.0 - params.gamma))
        if not dist_units > threshold + _GOOD_TIE_TOL:
            return False
    return True


def goodness_bound(params: GoodnessParams, d: int) -> float:
    """Analytic lower bound for the probability of being good."""
    return 1.0 - (8.0 * d / params.gamma) * 2.0 ** (-params.r * params.gamma)


@dataclass(frozen=True)
class GoodnessProbability:
    good_count: int
    total: int
    analytic_bound: float

    @property
    def value(self) -> float:
        return self.good_count / self.total


def _good_mask(u_flat: np.ndarray, corner: Sequence[int], gaps: range,
               gamma: float) -> np.ndarray:
    """Vectorized goodness over enumerated top-gap offsets, one axis per row."""
    good = np.ones(u_flat.shape[1], dtype=bool)
    m = np.asarray(corner, dtype=np.int64)[:, None]
    for s in gaps:
        o = (m - u_flat) % (1 << s)
        dist = np.minimum(o, (1 << s) - 1 - o).min(axis=0)
        good &= dist > 2.0 ** (s * (1.0 - gamma)) + _GOOD_TIE_TOL
    return good


def goodness_probability(max_gap: int, params: GoodnessParams, d: int = 1,
                         base_corner: Optional[Sequence[int]] = None,
                         cap: int = 1 << 22) -> GoodnessProbability:
    """Exact goodness probability over the bits of gaps r..max_gap.

    Enumerates all 2^(max_gap*d) relevant translation-bit patterns; the
    result does not depend on `base_corner`, which is exposed so callers
    can verify that claim.
    """
    if max_gap < params.r:
        raise ValueError("max_gap must be at least the ancestor threshold r")
    n_bits = max_gap * d
    if 2**n_bits > cap:
        raise ResourceLimitError(
            f"enumeration of 2^{n_bits} bit patterns exceeds cap {cap}"
        )
    corner = tuple(base_corner) if base_corner is not None else (0,) * d
    axes = [np.arange(1 << max_gap, dtype=np.int64)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    u_flat = np.stack([g.ravel() for g in grids], axis=0)
    good = _good_mask(u_flat, corner, range(params.r, max_gap + 1), params.gamma)
    return GoodnessProbability(int(good.sum()), good.size, goodness_bound(params, d))


def goodness_probability_mc(max_gap: int, params: GoodnessParams, d: int,
                            trials: int, seed: int) -> GoodnessProbability:
    """Monte Carlo fallback for goodness probabilities beyond the cap."""
    gen = substream(seed, "goodness-mc", max_gap, params.r)
    u = gen.integers(0, 1 << max_gap, size=(d, trials), dtype=np.int64)
    good = _good_mask(u, (0,) * d, range(params.r, max_gap + 1), params.gamma)
    return GoodnessProbability(int(good.sum()), trials, goodness_bound(params, d))


def goodness_position_joint(d: int, level: int, depth: int, m_top: int,
                            params: GoodnessParams, cap: int = 1 << 20) -> np.ndarray:
    """Joint counts of (translated position, goodness) by full bit enumeration.

    Builds a real system for every pattern of the bits at scales
    (level - max_generations, depth] and records the finest-cell shift of
    the base cube together with its goodness flag.  Returns an integer
    array of shape (2^((depth-level)*d), 2) from which exact factorization
    of the joint distribution can be checked.
    """
    if params.max_generations is None:
        raise ValueError("a relative ancestor truncation is required here")
    gens = params.max_generations
    if level - gens < -m_top:
        raise ValueError("system too shallow for the requested generations")
    n_bits = (gens + depth - level) * d
    if 2**n_bits > cap:
        raise ResourceLimitError(f"2^{n_bits} bit patterns exceed cap {cap}")
    n_pos = 1 << ((depth - level) * d)
    counts = np.zeros((n_pos, 2), dtype=np.int64)
    scales = range(level - gens + 1, depth + 1)  # scales j carrying the bits
    cells = 1 << (depth - level)
    for pattern in itertools.product(*([range(1 << d)] * len(scales))):
        omega = [(0,) * d] * (m_top + depth)
        for j, word in zip(scales, pattern):
            omega[j + m_top - 1] = tuple((word >> ax) & 1 for ax in range(d))
        sysm = DyadicSystem(d=d, m_top=m_top, depth=depth, omega=tuple(omega))
        cube = sysm.cube(level, (0,) * d)
        shift = cube.system.shift_cells(level)
        pos = 0
        for ax in range(d):
            pos = pos * cells + int(shift[ax]) % cells
        counts[pos, int(is_good(cube, params))] += 1
    return counts
