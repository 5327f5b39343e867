import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadiclab.errors import AmbientRangeError, ResourceLimitError
from dyadiclab.grid import (DyadicCube, DyadicSystem, GoodnessParams, common_ancestor,
                            goodness_bound, goodness_position_joint,
                            goodness_probability, goodness_probability_mc, is_good,
                            translate)


def test_translation_of_half_interval():
    system = DyadicSystem(d=1, m_top=0, depth=3, omega=((0,), (1,), (0,)))
    cube = system.cube(1, (0,))
    assert np.allclose(translate(cube), [[0.25, 0.75]])


def test_translation_identity_when_bits_vanish():
    system = DyadicSystem(d=1, m_top=1, depth=4)
    cube = system.cube(2, (-3,))
    assert np.allclose(translate(cube), [[-0.75, -0.5]])


def test_translation_of_quarter_interval():
    system = DyadicSystem(d=1, m_top=0, depth=3, omega=((0,), (0,), (1,)))
    cube = system.cube(2, (0,))
    assert np.allclose(translate(cube), [[0.125, 0.375]])


def test_translation_uses_strictly_finer_scales_only():
    # bits at the cube's own scale and coarser must not move it
    system = DyadicSystem(d=1, m_top=0, depth=3, omega=((1,), (0,), (0,)))
    cube = system.cube(1, (0,))
    assert np.allclose(translate(cube), [[0.0, 0.5]])


def test_out_of_ambient_raises():
    system = DyadicSystem(d=1, m_top=0, depth=3, omega=((0,), (0,), (1,)))
    with pytest.raises(AmbientRangeError):
        system.cube(2, (3,))  # rightmost quarter shifted right leaves [-1, 1)


def test_children_partition_square():
    system = DyadicSystem(d=2, m_top=0, depth=3)
    cube = system.cube(0, (0, 0))
    kids = cube.children()
    assert len(kids) == 4
    corners = sorted(k.corner for k in kids)
    assert corners == [(0, 0), (0, 1), (1, 0), (1, 1)]
    mask = np.zeros((system.cells_per_axis,) * 2, dtype=int)
    for kid in kids:
        mask[kid.cell_slices()] += 1
    sub = mask[cube.cell_slices()]
    assert (sub == 1).all()
    assert mask.sum() == sub.size


def test_common_ancestor_of_adjacent_siblings():
    system = DyadicSystem(d=1, m_top=0, depth=4)
    left = system.cube(2, (0,))
    right = system.cube(2, (1,))
    assert common_ancestor(left, right).key() == (1, (0,))


def test_common_ancestor_of_nested_pair_is_the_larger():
    system = DyadicSystem(d=1, m_top=0, depth=4)
    small = system.cube(3, (2,))
    large = system.cube(1, (0,))
    assert common_ancestor(small, large).key() == large.key()


def test_common_ancestor_missing_raises():
    system = DyadicSystem(d=1, m_top=0, depth=3)
    with pytest.raises(AmbientRangeError):
        common_ancestor(system.cube(1, (-1,)), system.cube(1, (0,)))


@given(st.integers(0, 2**20), st.integers(0, 3))
def test_translated_nesting_is_consistent(seed, level):
    system = DyadicSystem.random(seed, d=1, m_top=1, depth=5)
    for cube in system.cubes_at_level(level + 1):
        try:
            parent = cube.parent()
        except AmbientRangeError:
            continue  # the parent of a near-edge cube may leave the ambient
        geo_child = translate(cube)
        geo_parent = translate(parent)
        assert geo_parent[0, 0] <= geo_child[0, 0]
        assert geo_child[0, 1] <= geo_parent[0, 1] + 1e-12
        assert any(kid.key() == cube.key() for kid in parent.children())


@given(st.integers(0, 2**20))
def test_levels_partition_in_translated_systems(seed):
    system = DyadicSystem.random(seed, d=1, m_top=0, depth=5)
    for level in range(0, 5):
        mask = np.zeros(system.cells_per_axis, dtype=int)
        for cube in system.cubes_at_level(level):
            mask[cube.cell_slices()[0]] += 1
        assert mask.max() <= 1  # inside-ambient cubes never overlap


def test_boundary_touching_cube_is_bad():
    system = DyadicSystem(d=1, m_top=0, depth=3)
    params = GoodnessParams(gamma=0.5, r=2, max_ancestor_level=0)
    assert not is_good(system.cube(3, (0,)), params)


def test_goodness_of_central_cube_single_ancestor():
    # distance 3/8 beats (1/8)^(1/2) when only the unit ancestor is inspected
    system = DyadicSystem(d=1, m_top=0, depth=3)
    params = GoodnessParams(gamma=0.5, r=3, max_ancestor_level=0)
    assert is_good(system.cube(3, (3,)), params)


def test_goodness_fails_at_quarter_position():
    # distance 1/8 does not beat (1/4)^(1/2) * 1/2
    system = DyadicSystem(d=1, m_top=0, depth=3)
    params = GoodnessParams(gamma=0.5, r=2, max_ancestor_level=0)
    assert not is_good(system.cube(3, (2,)), params)


def test_vacuous_goodness_when_no_ancestor_is_eligible():
    system = DyadicSystem(d=1, m_top=0, depth=3)
    params = GoodnessParams(gamma=0.5, r=5)
    assert is_good(system.cube(2, (1,)), params)


def test_analytic_bound_value():
    assert goodness_bound(GoodnessParams(gamma=0.5, r=10), 1) == pytest.approx(0.5)


def test_goodness_probability_enumeration_matches_bruteforce():
    # oracle: loop over every bit pattern with explicit offset arithmetic
    params = GoodnessParams(gamma=0.5, r=3)
    max_gap = 5
    good = 0
    for word in range(1 << max_gap):
        ok = True
        for s in range(params.r, max_gap + 1):
            offset = word % (1 << s)
            dist = min(offset, (1 << s) - 1 - offset)
            if not dist > 2.0 ** (s * (1 - params.gamma)) + 1e-12:
                ok = False
                break
        good += ok
    res = goodness_probability(max_gap, params, 1)
    assert (res.good_count, res.total) == (good, 1 << max_gap)
    # frozen from the oracle: the pair (gamma=1/2, r=3) admits no good offsets
    assert res.good_count == 0


def test_goodness_probability_independent_of_base_cube():
    params = GoodnessParams(gamma=0.5, r=3)
    reference = goodness_probability(6, params, 1).good_count
    for corner in (1, -7, 13):
        assert goodness_probability(6, params, 1, base_corner=(corner,)).good_count \
            == reference


def test_goodness_probability_vacuous_bound_stays_in_unit_interval():
    params = GoodnessParams(gamma=0.125, r=3)
    res = goodness_probability(5, params, 1)
    assert res.analytic_bound <= 0
    assert 0.0 <= res.value <= 1.0


def test_goodness_probability_beats_positive_bound():
    params = GoodnessParams(gamma=0.5, r=10)
    res = goodness_probability(14, params, 1)
    assert res.analytic_bound == pytest.approx(0.5)
    assert res.value >= res.analytic_bound


def test_goodness_probability_cap():
    with pytest.raises(ResourceLimitError):
        goodness_probability(30, GoodnessParams(gamma=0.5, r=3), 1, cap=1 << 10)


def test_goodness_probability_mc_close_to_exact():
    params = GoodnessParams(gamma=0.5, r=4)
    exact = goodness_probability(8, params, 1).value
    mc = goodness_probability_mc(8, params, 1, trials=20000, seed=3).value
    assert abs(mc - exact) < 0.02


def test_goodness_probability_two_dimensional():
    params = GoodnessParams(gamma=0.5, r=4)
    res = goodness_probability(6, params, 2)
    assert res.total == 1 << 12
    # a cube good in d=2 must be good per axis, so the probability is smaller
    res1 = goodness_probability(6, params, 1)
    assert res.value <= res1.value


def test_position_goodness_factorization_is_exact():
    params = GoodnessParams(gamma=0.5, r=3, max_generations=4)
    joint = goodness_position_joint(1, level=2, depth=4, m_top=2, params=params)
    total = joint.sum()
    rows = joint.sum(axis=1, keepdims=True)
    cols = joint.sum(axis=0, keepdims=True)
    assert (joint * total == rows * cols).all()
    # positions are uniform
    assert (rows == rows[0]).all()
