"""Independent reference implementations used to pin expected values.

Everything here is written the slow, obvious way (plain loops, explicit
enumerations, dense matrices) so it shares no code path with the package
routines it checks.
"""

import itertools

import numpy as np

from dyadiclab.gridfn import haar_vector


def brute_rademacher_pnorm(elements, p, norm_fn):
    """Mean over all sign patterns via explicit loops."""
    elements = [np.asarray(e, dtype=float) for e in elements]
    total = 0.0
    count = 0
    for signs in itertools.product((1.0, -1.0), repeat=len(elements)):
        vec = sum(s * e for s, e in zip(signs, elements))
        total += float(norm_fn(vec)) ** p
        count += 1
    return (total / count) ** (1.0 / p)


def dense_projection_matrix(root, gap, n_cells):
    """Dense matrix of the sum of Haar projections `gap` levels below root."""
    matrix = np.zeros((n_cells, n_cells))
    sl = root.cell_slices()[0]
    fine = root.size_cells >> (gap + 1)
    coarse = root.size_cells >> gap
    for start in range(sl.start, sl.stop, fine):
        matrix[start:start + fine, start:start + fine] += 1.0 / fine
    for start in range(sl.start, sl.stop, coarse):
        matrix[start:start + coarse, start:start + coarse] -= 1.0 / coarse
    return matrix


def dense_averaging_matrix(cube, table, block_level, system):
    """Dense matrix of an averaging block from its kernel table."""
    n = system.cells_per_axis
    matrix = np.zeros((n, n))
    cells = 1 << (system.depth - block_level)
    sl = cube.cell_slices()[0]
    blocks = cube.size_cells // cells
    cellvol = system.cell_volume
    for bo in range(blocks):
        for bi in range(blocks):
            rows = slice(sl.start + bo * cells, sl.start + (bo + 1) * cells)
            cols = slice(sl.start + bi * cells, sl.start + (bi + 1) * cells)
            matrix[rows, cols] = table[bo, bi] * cellvol / cube.volume
    return matrix


def dense_shift_matrix(spec):
    """Dense matrix of a one-dimensional dyadic shift, by composing factors."""
    system = spec.system
    n = system.cells_per_axis
    total = np.zeros((n, n))
    for level in spec.level_range():
        for cube in system.cubes_at_level(level):
            proj_in = dense_projection_matrix(cube, spec.i, n)
            proj_out = dense_projection_matrix(cube, spec.j, n)
            table = spec.kernel.table(cube, spec.blocks_per_axis())
            avg = dense_averaging_matrix(cube, table, cube.level + spec.block_gap,
                                         system)
            total += proj_out @ avg @ proj_in
    return total


def haar_coefficient_by_eval(f, cube, eta):
    """Coefficient via pointwise Haar values, no pyramid."""
    h = haar_vector(cube, eta)
    return (h[..., None] * f.values).sum(axis=tuple(range(f.system.d))) * \
        f.system.cell_volume


def decoupled_pnorm_full_product(family, p):
    """Decoupled norm by enumerating the full product space of child choices."""
    h = family.hierarchy
    actives = h.active_atoms()
    choice_space = [range(len(kids)) for (_, _, kids) in actives]
    total = 0.0
    n_eps = 1 << len(actives)
    for eps_word in range(n_eps):
        eps = [1.0 - 2.0 * ((eps_word >> t) & 1) for t in range(len(actives))]
        for choices in itertools.product(*choice_space):
            prob = 1.0
            cellvals = np.zeros((h.n_cells, family.space.dim))
            for t, ((level, atom, kids), c) in enumerate(zip(actives, choices)):
                kids_sorted = sorted(kids)
                mu = np.array([h.atom_weight(k) for k in kids_sorted])
                prob *= mu[c] / mu.sum()
                order = sorted(range(len(kids)), key=lambda k: kids[k])
                val = np.asarray(family.values[(level, atom)])[order][c]
                cellvals[list(atom)] += eps[t] * val
            norms = family.space.norm(cellvals)
            total += prob / n_eps * float((norms**p * h.cell_weights).sum())
    return total ** (1.0 / p)
