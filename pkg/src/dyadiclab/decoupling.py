"""Atom hierarchies, auxiliary martingale splittings, and decoupled norms.

An atom hierarchy is a refining sequence of partitions of a finite
weighted ground set.  Each atom with children carries one probability
factor whose outcomes are its children (with measure-proportional
probabilities), and a product point assigns one independent child choice
per atom.  A function adapted to an atom (supported there, constant on
children, zero mean) splits into a symmetric and an antisymmetric table
over child pairs; the symmetric part has zero mean against the product
factor and the antisymmetric part kills every function of the symmetric
one, which is exactly what the martingale-difference checks verify.

Every integrand here depends on finitely many product coordinates (the
chain of atoms through a ground cell), so expectations are computed
exactly per cell without materializing the full product space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AdaptednessError, ResourceLimitError
from .rng import substream
from .space import SCALAR, NormedSpace

_TOL = 1e-12


@dataclass(frozen=True)
class AtomHierarchy:
    """Refining partitions of weighted ground cells, as index lists per atom."""

    cell_weights: np.ndarray
    levels: tuple  # levels[l] is a tuple of atoms; an atom is a tuple of cell indices

    def __post_init__(self):
        w = np.asarray(self.cell_weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("ground-cell weights must be positive")
        object.__setattr__(self, "cell_weights", w)
        ground = frozenset(range(w.size))
        for atoms in self.levels:
            seen = [c for atom in atoms for c in atom]
            if sorted(seen) != sorted(ground):
                raise ValueError("each level must partition the ground set")
        for lo, hi in zip(self.levels, self.levels[1:]):
            for child in hi:
                if not any(set(child) <= set(parent) for parent in lo):
                    raise ValueError("levels must refine")

    @property
    def n_cells(self) -> int:
        return self.cell_weights.size

    def atom_weight(self, atom) -> float:
        return float(self.cell_weights[list(atom)].sum())

    def children_of(self, level: int, atom) -> list:
        cells = set(atom)
        return [a for a in self.levels[level + 1] if set(a) <= cells]

    def active_atoms(self) -> list:
        """(level, atom, children) triples for atoms that are refined below."""
        out = []
        for level in range(len(self.levels) - 1):
            for atom in self.levels[level]:
                out.append((level, atom, self.children_of(level, atom)))
        return out

    def chain_through(self, cell: int) -> list:
        """Active atoms containing a ground cell, coarse to fine."""
        chain = []
        for level in range(len(self.levels) - 1):
            for atom in self.levels[level]:
                if cell in atom:
                    chain.append((level, atom, self.children_of(level, atom)))
                    break
        return chain


def random_hierarchy(seed: int, depth: int = 3, max_children: int = 4,
                     weight_spread: float = 1.0) -> AtomHierarchy:
    """Seeded hierarchy: the root splits recursively into 1..max_children parts."""
    gen = substream(seed, "atom-hierarchy")
    leaf_counter = itertools.count()

    def split(node_depth: int) -> list:
        if node_depth == depth:
            return [next(leaf_counter)]
        k = int(gen.integers(1, max_children + 1))
        return [split(node_depth + 1) for _ in range(k)]

    tree = split(0)

    def flatten(node) -> tuple:
        if isinstance(node, int):
            return (node,)
        return tuple(c for kid in node for c in flatten(kid))

    levels = []
    frontier = [tree]
    for _ in range(depth + 1):
        levels.append(tuple(flatten(node) for node in frontier))
        nxt = []
        for node in frontier:
            if isinstance(node, int):
                nxt.append(node)
            else:
                nxt.extend(node)
        frontier = nxt
    n_cells = next(leaf_counter)
    weights = np.exp(gen.uniform(-weight_spread, weight_spread, size=n_cells))
    return AtomHierarchy(weights, tuple(levels))


@dataclass(frozen=True)
class AdaptedFamily:
    """Per active atom: values on its children with zero weighted mean."""

    hierarchy: AtomHierarchy
    values: dict  # (level, atom) -> array (n_children, dim)
    space: NormedSpace = SCALAR

    def __post_init__(self):
        for (level, atom, kids) in self.hierarchy.active_atoms():
            vals = np.asarray(self.values[(level, atom)], dtype=float)
            if vals.shape != (len(kids), self.space.dim):
                raise AdaptednessError("wrong table shape for an atom")
            masses = np.array([self.hierarchy.atom_weight(k) for k in kids])
            if np.any(np.abs(masses @ vals) > _TOL * max(1.0, np.abs(vals).max())):
                raise AdaptednessError("nonzero weighted mean on an atom")

    def cell_sum(self) -> np.ndarray:
        """The plain sum over atoms, as one value per ground cell."""
        h = self.hierarchy
        out = np.zeros((h.n_cells, self.space.dim))
        for (level, atom, kids) in h.active_atoms():
            vals = self.values[(level, atom)]
            for kid, v in zip(kids, vals):
                out[list(kid)] += v
        return out


def random_adapted_family(hierarchy: AtomHierarchy, seed: int,
                          space: NormedSpace = SCALAR) -> AdaptedFamily:
    gen = substream(seed, "adapted-family")
    values = {}
    for (level, atom, kids) in hierarchy.active_atoms():
        vals = gen.standard_normal((len(kids), space.dim))
        masses = np.array([hierarchy.atom_weight(k) for k in kids])
        vals -= (masses @ vals) / masses.sum()
        values[(level, atom)] = vals
    return AdaptedFamily(hierarchy, values, space)


@dataclass(frozen=True)
class UVTables:
    """Symmetric/antisymmetric child-pair tables of an adapted family."""

    family: AdaptedFamily
    symmetric: dict      # (level, atom) -> (C, C, dim)
    antisymmetric: dict  # (level, atom) -> (C, C, dim)


def construct_uv(family: AdaptedFamily) -> UVTables:
    """Split each atom's difference into symmetric and antisymmetric parts.

    On the child pair (A, B) the two parts are (val_A + val_B)/2 and
    (val_A - val_B)/2; their sum restores the difference evaluated in the
    base variable and their difference the decoupled copy.  Children are
    ordered lexicographically by their cell lists.
    """
    sym, skew = {}, {}
    for (level, atom, kids) in family.hierarchy.active_atoms():
        order = sorted(range(len(kids)), key=lambda k: kids[k])
        vals = np.asarray(family.values[(level, atom)])[order]
        a = vals[:, None, :]
        b = vals[None, :, :]
        sym[(level, atom)] = (a + b) / 2.0
        skew[(level, atom)] = (a - b) / 2.0
    return UVTables(family, sym, skew)


def check_mds(uv: UVTables, test_functions: int = 20, seed: int = 0) -> float:
    """Largest violation of the martingale-difference identities.

    Per atom: the symmetric table must integrate to zero against the
    product factor, and the antisymmetric table must kill every function
    of the symmetric one (random polynomial test functions).
    """
    h = uv.family.hierarchy
    dim = uv.family.space.dim
    worst = 0.0
    for (level, atom, kids) in h.active_atoms():
        kids_sorted = sorted(kids)
        mu = np.array([h.atom_weight(k) for k in kids_sorted])
        nu = mu / mu.sum()
        u = uv.symmetric[(level, atom)]
        v = uv.antisymmetric[(level, atom)]
        weight = mu[:, None] * nu[None, :]
        worst = max(worst, float(np.abs(np.tensordot(weight, u, axes=([0, 1], [0, 1]))).max()))
        for t in range(test_functions):
            gen = substream(seed, "mds-test", level, t)
            proj = gen.standard_normal(dim)
            coef = gen.standard_normal(4)
            z = u @ proj
            phi = coef[0] + coef[1] * z + coef[2] * z**2 + coef[3] * z**3
            integrals = np.tensordot(weight * phi, v, axes=([0, 1], [0, 1]))
            worst = max(worst, float(np.abs(integrals).max()))
    return worst


def recovery_violation(uv: UVTables) -> float:
    """Max deviation of (symmetric + antisymmetric) from the base difference."""
    worst = 0.0
    h = uv.family.hierarchy
    for (level, atom, kids) in h.active_atoms():
        order = sorted(range(len(kids)), key=lambda k: kids[k])
        vals = np.asarray(uv.family.values[(level, atom)])[order]
        u = uv.symmetric[(level, atom)]
        v = uv.antisymmetric[(level, atom)]
        recon = u + v  # value on (A, B) must be the base value on A
        worst = max(worst, float(np.abs(recon - vals[:, None, :]).max()))
        decoupled = u - v  # value on (A, B) must be the base value on B
        worst = max(worst, float(np.abs(decoupled - vals[None, :, :]).max()))
    return worst


def plain_pnorm(family: AdaptedFamily, p: float) -> float:
    """L^p(mu) norm of the plain sum of the adapted functions."""
    h = family.hierarchy
    cellvals = family.cell_sum()
    norms = family.space.norm(cellvals)
    return float((norms**p * h.cell_weights).sum() ** (1.0 / p))


def decoupled_pnorm(family: AdaptedFamily, p: float,
                    y_mode: str = "exhaustive", trials: int = 2000, seed: int = 0,
                    chain_cap: int = 1_000_000) -> tuple:
    """Randomized-sign decoupled norm, with independent per-atom coordinates.

    Returns (value, stderr); stderr is None in exhaustive mode.  Only the
    chain of atoms through each ground cell enters the integrand, so the
    expectation is exact per cell whenever the chain's product of child
    counts stays below `chain_cap`.
    """
    h = family.hierarchy
    space = family.space
    total = 0.0
    if y_mode == "exhaustive":
        for cell in range(h.n_cells):
            chain = h.chain_through(cell)
            if not chain:
                continue
            counts = [len(kids) for (_, _, kids) in chain]
            if int(np.prod(counts)) > chain_cap:
                raise ResourceLimitError("chain product exceeds the exhaustive cap")
            tables, probs = [], []
            for (level, atom, kids) in chain:
                kids_sorted = sorted(kids)
                vals = np.asarray(family.values[(level, atom)])
                order = sorted(range(len(kids)), key=lambda k: kids[k])
                tables.append(vals[order])
                mu = np.array([h.atom_weight(k) for k in kids_sorted])
                probs.append(mu / mu.sum())
            signs = 1.0 - 2.0 * (
                (np.arange(1 << len(chain))[:, None] >> np.arange(len(chain))[None, :]) & 1
            )
            acc = 0.0
            for choice in itertools.product(*[range(c) for c in counts]):
                prob = float(np.prod([pr[c] for pr, c in zip(probs, choice)]))
                stack = np.stack([tab[c] for tab, c in zip(tables, choice)])
                sums = signs @ stack
                acc += prob * float((space.norm(sums) ** p).mean())
            total += acc * h.cell_weights[cell]
        return total ** (1.0 / p), None
    if y_mode != "mc":
        raise ValueError("y_mode must be 'exhaustive' or 'mc'")
    gen = substream(seed, "decoupled-mc")
    samples = np.zeros(trials)
    actives = h.active_atoms()
    for t in range(trials):
        choice = {}
        for (level, atom, kids) in actives:
            kids_sorted = sorted(kids)
            mu = np.array([h.atom_weight(k) for k in kids_sorted])
            choice[(level, atom)] = int(gen.choice(len(kids_sorted), p=mu / mu.sum()))
        eps = {key: 1.0 - 2.0 * int(gen.integers(0, 2))
               for key in ((lv, at) for (lv, at, _) in actives)}
        cellvals = np.zeros((h.n_cells, space.dim))
        for (level, atom, kids) in actives:
            kids_sorted = sorted(kids)
            vals = np.asarray(family.values[(level, atom)])
            order = sorted(range(len(kids)), key=lambda k: kids[k])
            v = vals[order][choice[(level, atom)]]
            cellvals[list(atom)] += eps[(level, atom)] * v
        samples[t] = float((space.norm(cellvals) ** p * h.cell_weights).sum())
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / np.sqrt(trials))
    return mean ** (1.0 / p), stderr


# -- sums of independent conditional expectations -----------------------------------


@dataclass(frozen=True)
class FiniteProbSpace:
    """A finite probability space given by point weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        object.__setattr__(self, "weights", w / w.sum())

    @property
    def size(self) -> int:
        return self.weights.size


def condexp_sum_check(factors: Sequence[FiniteProbSpace], fs: Sequence[np.ndarray],
                      partitions: Sequence[Sequence[Sequence[int]]], p: float,
                      space: NormedSpace = SCALAR) -> float:
    """Ratio of the summed conditioned functions to the plain sum, in L^p.

    Factor n carries f_n (one value per point) and a sub-algebra given as
    a partition of its points; expectations over the product space are
    exact.  The ratio never exceeds one.
    """
    n_factors = len(factors)
    conditioned = []
    for f, factor, part in zip(fs, factors, partitions):
        f = np.asarray(f, dtype=float)
        g = np.zeros_like(f)
        for block in part:
            block = list(block)
            w = factor.weights[block]
            g[block] = (w[:, None] * f[block]).sum(axis=0) / w.sum()
        conditioned.append(g)

    def product_norm(values: Sequence[np.ndarray]) -> float:
        shape = tuple(sp.size for sp in factors)
        total = np.zeros(shape + (space.dim,))
        for n, vals in enumerate(values):
            idx = [None] * n_factors + [slice(None)]
            idx[n] = slice(None)
            total = total + vals[tuple(idx)]
        weight = np.ones(shape)
        for n, factor in enumerate(factors):
            idx = [None] * n_factors
            idx[n] = slice(None)
            weight = weight * factor.weights[tuple(idx)]
        return float(((space.norm(total) ** p) * weight).sum() ** (1.0 / p))

    num = product_norm(conditioned)
    den = product_norm([np.asarray(f, dtype=float) for f in fs])
    if den == 0.0:
        return 0.0
    return num / den
