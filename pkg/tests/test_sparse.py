import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadiclab.errors import AdaptednessError, SparsityError
from dyadiclab.grid import DyadicSystem
from dyadiclab.gridfn import (GridFunction, haar_function, indicator, lp_norm, pair,
                              random_grid_function)
from dyadiclab.rng import substream
from dyadiclab.space import SCALAR, conjugate_exponent
from dyadiclab.sparse import (SparseFamily, build_stopping_family, carleson_sum,
                              project_onto_member, project_onto_member_haar,
                              pythagoras_check, stopping_control)

SYS = DyadicSystem(d=1, m_top=0, depth=6)
ROOT = SYS.cube(0, (0,))


def random_family(seed, weights=None):
    driver = random_grid_function(SYS, seed, support=ROOT, label="family-driver")
    return build_stopping_family(driver, ROOT, weights=weights), driver


def test_constant_function_stops_immediately():
    fam = build_stopping_family(indicator(ROOT), ROOT)
    assert len(fam) == 1


def test_unimodular_function_stops_immediately():
    fam = build_stopping_family(haar_function(ROOT, (1,)), ROOT)
    assert len(fam) == 1


def test_quarter_indicator_family():
    f = indicator(SYS.cube(2, (0,)))
    fam = build_stopping_family(f, ROOT)
    assert [c.key() for c in fam.cubes] == [(0, (0,)), (2, (0,))]
    assert fam.parents == [None, 0]


@given(st.integers(0, 10**6))
def test_built_families_are_sparse_exactly(seed):
    fam, _ = random_family(seed)
    assert fam.is_sparse()
    for idx in range(len(fam)):
        kept = fam.cell_count(fam.cubes[idx]) - sum(
            fam.cell_count(fam.cubes[c]) for c in fam.children[idx])
        assert 2 * kept >= fam.cell_count(fam.cubes[idx])


@given(st.integers(0, 10**6))
def test_locate_returns_minimal_member(seed):
    fam, _ = random_family(seed)
    gen = substream(seed, "locate-test")
    for _ in range(10):
        level = int(gen.integers(0, SYS.depth + 1))
        corner = int(gen.integers(0, 1 << level))
        cube = SYS.cube(level, (corner,))
        member = fam.cubes[fam.locate(cube)]
        assert member.contains_cube(cube)
        for idx, other in enumerate(fam.cubes):
            if other.contains_cube(cube):
                assert member.volume <= other.volume


@given(st.integers(0, 10**6))
def test_stopping_controls(seed):
    fam, driver = random_family(seed)
    ctrl = stopping_control(fam, driver)
    assert ctrl["max_q_over_member"] <= 2.0 + 1e-12
    assert ctrl["max_child_over_parent"] <= 2.0 * 2**SYS.d + 1e-12


def test_threshold_factor_changes_the_tree():
    f = indicator(SYS.cube(2, (0,)))
    fam3 = build_stopping_family(f, ROOT, threshold_factor=3.0)
    assert [c.key() for c in fam3.cubes] == [(0, (0,)), (2, (0,))]
    fam5 = build_stopping_family(f, ROOT, threshold_factor=5.0)
    assert len(fam5) == 1  # no subcube average exceeds five times 1/4


# -- Carleson -------------------------------------------------------------------------


def test_carleson_single_member():
    fam = SparseFamily(ROOT)
    res = carleson_sum(fam, indicator(ROOT), 3.0)
    assert res.lhs == pytest.approx(1.0)
    assert res.ratio == pytest.approx(1.0)


def test_carleson_hand_computed_example():
    f = indicator(SYS.cube(2, (0,)))
    fam = build_stopping_family(f, ROOT)
    res = carleson_sum(fam, f, 2.0)
    assert res.lhs**2 == pytest.approx(5.0 / 16.0)
    assert res.ratio == pytest.approx(np.sqrt(5.0) / 2.0)
    assert res.ratio <= res.stated_bound


def test_carleson_zero_function():
    fam = SparseFamily(ROOT)
    zero = GridFunction(SYS, np.zeros((SYS.cells_per_axis, 1)), SCALAR)
    assert carleson_sum(fam, zero, 2.0).lhs == 0.0


def test_carleson_rejects_non_sparse_family():
    fam = SparseFamily(ROOT)
    for corner in (0, 1):
        fam.add(SYS.cube(1, (corner,)), 0)  # children exhaust the root
    with pytest.raises(SparsityError):
        carleson_sum(fam, indicator(ROOT), 2.0)


@given(st.integers(0, 10**6), st.sampled_from([1.5, 2.0, 3.0]))
def test_carleson_bound_on_random_families(seed, p):
    fam, driver = random_family(seed)
    res = carleson_sum(fam, driver, p)
    if res.fnorm > 0:
        assert res.ratio <= 2.0 ** (1.0 / p) * conjugate_exponent(p) + 1e-9


@given(st.integers(0, 10**6))
def test_carleson_with_random_weights(seed):
    gen = substream(seed, "carleson-weights-test")
    weights = np.exp(gen.uniform(-1.0, 1.0, size=SYS.cells_per_axis))
    fam, driver = random_family(seed, weights=weights)
    assert fam.is_sparse()
    res = carleson_sum(fam, driver, 2.0)
    if res.fnorm > 0:
        assert res.ratio <= res.stated_bound + 1e-9


# -- member projections --------------------------------------------------------------------


def test_projection_closed_form_example():
    f = indicator(SYS.cube(3, (0,)))
    fam = build_stopping_family(indicator(SYS.cube(2, (0,))), ROOT)
    out = project_onto_member(fam, ROOT, f)
    expected = (0.5 * indicator(SYS.cube(2, (0,))).values
                - 0.125 * indicator(ROOT).values)
    assert np.abs(out.values - expected).max() < 1e-14


def test_projection_of_member_constant_vanishes():
    fam, _ = random_family(1)
    f = indicator(fam.cubes[0])
    assert np.abs(project_onto_member(fam, ROOT, f).values).max() < 1e-14


def test_single_member_projection_recentres():
    fam = SparseFamily(ROOT)
    f = random_grid_function(SYS, 2)
    out = project_onto_member(fam, ROOT, f)
    masked = f.values * indicator(ROOT).values
    expected = masked - masked.mean(axis=0) * 2 * indicator(ROOT).values
    assert np.abs(out.values - expected).max() < 1e-12


@given(st.integers(0, 10**6))
def test_projection_formulas_agree(seed):
    fam, _ = random_family(seed)
    f = random_grid_function(SYS, seed, label="proj-agree")
    for cube in fam.cubes:
        a = project_onto_member(fam, cube, f)
        b = project_onto_member_haar(fam, cube, f)
        assert np.abs(a.values - b.values).max() < 1e-12


@given(st.integers(0, 10**6))
def test_projection_algebra(seed):
    fam, _ = random_family(seed)
    f = random_grid_function(SYS, seed, label="proj-algebra")
    g = random_grid_function(SYS, seed, label="proj-algebra-dual")
    first = fam.cubes[0]
    proj = project_onto_member(fam, first, f)
    again = project_onto_member(fam, first, proj)
    assert np.abs(again.values - proj.values).max() < 1e-12
    if len(fam) > 1:
        other = project_onto_member(fam, fam.cubes[1], proj)
        assert np.abs(other.values).max() < 1e-12
    assert pair(g, proj) == pytest.approx(
        pair(project_onto_member(fam, first, g), f), abs=1e-10)
    restricted = GridFunction(SYS, f.values * indicator(first).values, f.space)
    assert lp_norm(proj, 2.0) <= 2.0 * lp_norm(restricted, 2.0) + 1e-12


def test_projection_membership_error():
    fam = SparseFamily(ROOT)
    with pytest.raises(KeyError):
        project_onto_member(fam, SYS.cube(1, (0,)), indicator(ROOT))


# -- adapted sums --------------------------------------------------------------------------


def make_adapted(fam, seed, mode):
    out = []
    for idx in range(len(fam)):
        gen = substream(seed, "adapted", idx)
        vals = np.zeros((SYS.cells_per_axis, 1))
        mask = fam.exceptional_mask(idx)
        vals[mask] = gen.standard_normal((int(mask.sum()), 1))
        for child in fam.children[idx]:
            vals[fam.cubes[child].cell_slices()] = gen.standard_normal()
        if mode == "reverse_nonneg":
            vals = np.abs(vals)
        f = GridFunction(SYS, vals, SCALAR)
        if mode == "reverse_cancellative":
            cube = fam.cubes[idx]
            adj = np.array(f.values)
            adj[cube.cell_slices()] -= fam.weighted_average(f.values, cube)
            f = GridFunction(SYS, adj, SCALAR)
        out.append(f)
    return out


def test_single_member_ratios_are_one():
    fam = SparseFamily(ROOT)
    f = random_grid_function(SYS, 3, support=ROOT)
    res = pythagoras_check(fam, [f], 2.0)
    assert res.direct_ratio == pytest.approx(1.0)
    assert res.reverse_ratio == pytest.approx(1.0)


def test_counterexample_reproduces_exactly():
    half = SYS.cube(1, (0,))
    fam = SparseFamily(ROOT)
    fam.add(half, 0)
    fs = [indicator(half), GridFunction(SYS, -indicator(half).values, SCALAR)]
    res = pythagoras_check(fam, fs, 2.0, "direct")
    assert res.sum_norm == 0.0
    assert res.power_sum_root**2 == pytest.approx(2 * 0.5)  # two times |S_-|
    assert res.reverse_ratio == np.inf
    for mode in ("reverse_cancellative", "reverse_nonneg"):
        with pytest.raises(AdaptednessError):
            pythagoras_check(fam, fs, 2.0, mode)


def test_adaptedness_is_enforced():
    fam = SparseFamily(ROOT)
    stray = indicator(SYS.cube(1, (-1,)))  # supported off the root
    with pytest.raises(AdaptednessError):
        pythagoras_check(fam, [stray], 2.0)


@given(st.integers(0, 10**6), st.sampled_from([1.5, 2.0, 3.0]))
def test_direct_and_reverse_bounds(seed, p):
    fam, _ = random_family(seed)
    direct = pythagoras_check(fam, make_adapted(fam, seed, "direct"), p, "direct")
    assert direct.direct_ratio <= direct.direct_bound + 1e-9
    cancel = pythagoras_check(fam, make_adapted(fam, seed, "reverse_cancellative"),
                              p, "reverse_cancellative")
    if cancel.sum_norm > 0:
        assert cancel.reverse_ratio <= cancel.reverse_bound + 1e-9
    nonneg = pythagoras_check(fam, make_adapted(fam, seed, "reverse_nonneg"),
                              p, "reverse_nonneg")
    if nonneg.sum_norm > 0:
        assert nonneg.reverse_ratio <= nonneg.reverse_bound + 1e-9


def test_export_records_format():
    fam = build_stopping_family(indicator(SYS.cube(2, (0,))), ROOT)
    lines = fam.export_records().strip().splitlines()
    assert lines[0] == "0 0 -1"
    assert lines[1] == "2 0 0"
