"""Rademacher averages, R-bound witnesses and probes, and martingale probes.

R-bounds and unconditionality constants are suprema over infinite witness
sets, so this module certifies them from below: any witness ratio is a
valid lower bound, and probes are maxima over seeded witness searches.
Upper bounds come from the inequalities under test, never from here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateInputError, ResourceLimitError
from .gridfn import GridFunction, conditional_expectation
from .rng import substream
from .space import SCALAR, NormedSpace, umd_beta_scalar

EXHAUSTIVE_CAP = 20


@dataclass(frozen=True)
class SignEnsemble:
    """Exhaustive sign enumeration (count <= 20) or seeded Monte Carlo."""

    mode: str = "exhaustive"
    trials: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "mc"):
            raise ValueError("mode must be 'exhaustive' or 'mc'")


EXHAUSTIVE = SignEnsemble("exhaustive")


def sign_patterns(n: int) -> np.ndarray:
    """All 2^n sign patterns as a (2^n, n) array of +-1."""
    if n > EXHAUSTIVE_CAP:
        raise ResourceLimitError(f"exhaustive signs capped at {EXHAUSTIVE_CAP}, got {n}")
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    return 1.0 - 2.0 * bits


@dataclass(frozen=True)
class RademacherNorm:
    value: float
    power_mean: float
    power_stderr: Optional[float] = None  # None for exhaustive evaluation


def rademacher_pnorm(elements: np.ndarray, p: float,
                     ensemble: SignEnsemble = EXHAUSTIVE,
                     space: NormedSpace = None) -> RademacherNorm:
    """(E |sum_n eps_n e_n|^p)^(1/p) over unbiased independent signs."""
    elements = np.atleast_2d(np.asarray(elements, dtype=float))
    n = elements.shape[0]
    if n < 1:
        raise DegenerateInputError("need at least one element")
    if space is None:
        space = NormedSpace(elements.shape[1], 2.0)
    if ensemble.mode == "exhaustive":
        signs = sign_patterns(n)
        powers = space.norm(signs @ elements) ** p
        mean = float(powers.mean())
        return RademacherNorm(mean ** (1.0 / p), mean, None)
    gen = substream(ensemble.seed, "rademacher-pnorm", n)
    signs = 1.0 - 2.0 * gen.integers(0, 2, size=(ensemble.trials, n))
    powers = space.norm(signs @ elements) ** p
    mean = float(powers.mean())
    stderr = float(powers.std(ddof=1) / np.sqrt(ensemble.trials))
    return RademacherNorm(mean ** (1.0 / p), mean, stderr)


@dataclass(frozen=True)
class OperatorFamily:
    """A finite family of real matrices acting on one normed space."""

    operators: tuple
    space: NormedSpace
    labels: tuple = ()

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=float) for op in self.operators)
        for op in ops:
            if op.shape != (self.space.dim, self.space.dim):
                raise ValueError("operator shape must match the space dimension")
        object.__setattr__(self, "operators", ops)

    def __len__(self):
        return len(self.operators)


def scalar_family(values: Sequence[float], space: NormedSpace = SCALAR) -> OperatorFamily:
    eye = np.eye(space.dim)
    return OperatorFamily(tuple(float(v) * eye for v in values), space)


def rbound_witness(family: OperatorFamily, assignment, p: float,
                   ensemble: SignEnsemble = EXHAUSTIVE) -> float:
    """Ratio of output to input Rademacher p-norms for one assignment.

    `assignment` is a sequence of (operator index, element) pairs; any
    witness ratio is a lower bound for the family's R-bound.
    """
    if len(assignment) == 0:
        raise DegenerateInputError("assignment must be nonempty")
    idx = [k for k, _ in assignment]
    elems = np.stack([np.asarray(e, dtype=float) for _, e in assignment])
    outs = np.stack([family.operators[k] @ e for k, e in zip(idx, elems)])
    den = rademacher_pnorm(elems, p, ensemble, family.space)
    if den.value == 0.0:
        raise DegenerateInputError("input Rademacher norm is zero")
    num = rademacher_pnorm(outs, p, ensemble, family.space)
    return num.value / den.value


def _power_iteration_vector(op: np.ndarray, gen, iters: int = 12) -> np.ndarray:
    v = gen.standard_normal(op.shape[1])
    v /= max(np.linalg.norm(v), 1e-300)
    for _ in range(iters):
        w = op.T @ (op @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return v
        v = w / nw
    return v


def rbound_probe(family: OperatorFamily, p: float, budget: int, seed: int,
                 ensemble: SignEnsemble = EXHAUSTIVE,
                 extra_assignments=()) -> float:
    """Best witness ratio found by a seeded search; monotone in `budget`.

    The search always evaluates canonical single-operator witnesses
    (basis vectors plus a power-iteration direction per operator) and
    then `budget` random assignments from per-trial substreams, so a
    larger budget extends, never replaces, a smaller one.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    dim = family.space.dim
    best = 0.0

    def try_assignment(assignment):
        nonlocal best
        try:
            best = max(best, rbound_witness(family, assignment, p, ensemble))
        except DegenerateInputError:
            pass

    for k, op in enumerate(family.operators):
        for ax in range(dim):
            e = np.zeros(dim)
            e[ax] = 1.0
            try_assignment([(k, e)])
        v = _power_iteration_vector(op, substream(seed, "probe-power", k))
        try_assignment([(k, v)])
    for t in range(budget):
        gen = substream(seed, "probe-trial", t)
        n = int(gen.integers(1, 5))  # repeats of operators are valid witnesses
        ks = gen.integers(0, len(family), size=n)
        es = gen.standard_normal((n, dim))
        try_assignment(list(zip(ks.tolist(), es)))
    for assignment in extra_assignments:
        try_assignment(assignment)
    return best


# -- conditional-expectation (Stein) probe --------------------------------------


@dataclass(frozen=True)
class SteinResult:
    ratio: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.ratio <= self.bound + 1e-9


def stein_check(fs: Sequence[GridFunction], levels: Sequence[int], p: float,
                beta_ref: Optional[float] = None,
                signs: Optional[Sequence[int]] = None) -> SteinResult:
    """Randomized ratio of conditioned to raw sums against a reference constant.

    Computes (E_eps ||sum_k eps_k E[f_k | level_k]||_p^p)^(1/p) divided by
    the same expression without the conditioning, with exhaustive signs.
    If a fixed `signs` pattern is supplied, the numerator expectation is
    replaced by that single pattern (a witness of the left side).
    """
    if len(fs) != len(levels):
        raise ValueError("one conditioning level per function")
    if beta_ref is None:
        if fs[0].space.dim != 1:
            raise ValueError("beta_ref is required for non-scalar spaces")
        beta_ref = umd_beta_scalar(p)
    sysm, space = fs[0].system, fs[0].space
    cond = np.stack([conditional_expectation(f, lv).values for f, lv in zip(fs, levels)])
    raw = np.stack([f.values for f in fs])
    patterns = sign_patterns(len(fs))

    def randomized(stack: np.ndarray, pats: np.ndarray) -> float:
        combo = np.tensordot(pats, stack, axes=(1, 0))
        norms = space.norm(combo)
        powers = (norms**p).reshape(pats.shape[0], -1).sum(axis=1) * sysm.cell_volume
        return float(powers.mean() ** (1.0 / p))

    num_pats = (np.asarray(signs, dtype=float)[None, :]
                if signs is not None else patterns)
    num = randomized(cond, num_pats)
    den = randomized(raw, patterns)
    if den == 0.0:
        raise DegenerateInputError("zero input family")
    return SteinResult(num / den, beta_ref)


# -- unconditionality probe -------------------------------------------------------


def umd_probe(space: NormedSpace, p: float, depth: int, seed: int,
              martingales: int = 20) -> float:
    """Lower bound for the martingale-transform constant of the space.

    Samples dyadic (Paley-Walsh) martingales of the given depth and takes
    the maximal transform ratio over exhaustive sign patterns.
    """
    if depth > 10:
        raise ResourceLimitError("martingale depth capped at 10")
    n = space.dim
    npts = 1 << depth
    coords = ((np.arange(npts)[:, None] >> np.arange(depth)[None, :]) & 1) * -2.0 + 1.0
    patterns = sign_patterns(depth)
    best = 0.0
    for m in range(martingales):
        gen = substream(seed, "umd-martingale", m)
        diffs = np.zeros((depth, npts, n))
        for k in range(depth):
            table = gen.standard_normal((1 << k, n))
            history = (np.arange(npts) % (1 << k)) if k else np.zeros(npts, dtype=int)
            diffs[k] = coords[:, k:k + 1] * table[history]
        base = space.norm(diffs.sum(axis=0))
        den = float((base**p).mean() ** (1.0 / p))
        if den == 0.0:
            continue
        combo = np.tensordot(patterns, diffs, axes=(1, 0))
        nums = (space.norm(combo) ** p).mean(axis=1) ** (1.0 / p)
        best = max(best, float(nums.max()) / den)
    return best


# -- calculus checks: averaging and triangle inequality ----------------------------


@dataclass(frozen=True)
class CalculusCheck:
    witness: float
    probe: float

    @property
    def passed(self) -> bool:
        return self.witness <= self.probe * (1.0 + 1e-9) + 1e-12


def averaging_check(pointwise: Sequence[np.ndarray], weights: Sequence[np.ndarray],
                    measure: np.ndarray, assignment, p: float,
                    space: NormedSpace, probe_budget: int = 40, seed: int = 0) -> CalculusCheck:
    """Witness of an averaged family against a probe of its pointwise family.

    `pointwise[s]` has shape (npts, dim, dim); the averaged operator is
    sum_x L_s(x) lambda_s(x) mu(x).  Provided each integral of |lambda_s|
    is at most one, the averaged family's R-bound is dominated by the
    pointwise family's, so the witness must not exceed the probe.  The
    probe includes the derived assignments that realize the domination:
    the same operator indices at every tuple of mesh points, with the
    elements scaled by the weight masses.
    """
    measure = np.asarray(measure, dtype=float)
    npts = measure.size
    masses = [float(np.abs(w * measure).sum()) for w in weights]
    if max(masses) > 1.0 + 1e-12:
        raise ValueError("weights must have integral of |lambda| at most 1")
    averaged = OperatorFamily(
        tuple(np.tensordot(w * measure, ls, axes=(0, 0))
              for ls, w in zip(pointwise, weights)),
        space,
    )
    flat_ops, flat_idx = [], {}
    for s, ls in enumerate(pointwise):
        for x in range(npts):
            flat_idx[(s, x)] = len(flat_ops)
            flat_ops.append(ls[x])
    pw_family = OperatorFamily(tuple(flat_ops), space)

    witness = rbound_witness(averaged, assignment, p)
    derived = []
    ks = [k for k, _ in assignment]
    es = [np.asarray(e, dtype=float) for _, e in assignment]
    scaled = [max(masses[k], 1e-300) * e for k, e in zip(ks, es)]
    for xs in itertools.product(range(npts), repeat=len(ks)):
        derived.append([(flat_idx[(k, x)], e) for k, x, e in zip(ks, xs, scaled)])
    probe = rbound_probe(pw_family, p, probe_budget, seed, extra_assignments=derived)
    return CalculusCheck(witness, probe)


def triangle_check(left: OperatorFamily, right: OperatorFamily, assignment,
                   p: float, probe_budget: int = 40, seed: int = 0) -> CalculusCheck:
    """Witness of the sum family {M_s + L_t} against probe(M) + probe(L).

    `assignment` pairs ((s, t), element); the probes include the two
    projected assignments, which dominate the summed witness by the
    triangle inequality in L^p of the signs.
    """
    if left.space != right.space:
        raise ValueError("families must share a space")
    pairs = sorted({(s, t) for (s, t), _ in assignment})
    pair_index = {st: k for k, st in enumerate(pairs)}
    sum_ops = tuple(left.operators[s] + right.operators[t] for s, t in pairs)
    sum_family = OperatorFamily(sum_ops, left.space)
    sum_assign = [(pair_index[st], e) for st, e in assignment]
    witness = rbound_witness(sum_family, sum_assign, p)
    left_assign = [(st[0], e) for st, e in assignment]
    right_assign = [(st[1], e) for st, e in assignment]
    probe_l = rbound_probe(left, p, probe_budget, seed, extra_assignments=[left_assign])
    probe_r = rbound_probe(right, p, probe_budget, seed + 1,
                           extra_assignments=[right_assign])
    return CalculusCheck(witness, probe_l + probe_r)
