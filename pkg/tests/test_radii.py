import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from facloc.geometry import EmptyInputError, build_index, uniform_sample
from facloc.radii import (
    RadiusProfile,
    all_radii,
    ball_counts,
    radius_after_insert,
    radius_bisect_oracle,
    radius_of,
    slack,
    solve_sorted,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
points_st = st.lists(st.tuples(unit, unit), min_size=1, max_size=40)

LINE3 = [(0, 0), (0.3, 0), (0.6, 0)]


@pytest.mark.parametrize(
    "pts, i, expected",
    [
        ([(0.5, 0.5)], 0, 1.0),
        # 2r - 0.5 = 1
        ([(0, 0), (0.5, 0)], 0, 0.75),
        # r < 0.3: r; [0.3, 0.6): 2r - 0.3 -> 0.65 out of range; r >= 0.6: 3r - 0.9 -> 19/30
        (LINE3, 0, 19 / 30),
        # 3r - 0.6 = 1 once r >= 0.3
        (LINE3, 1, 8 / 15),
    ],
)
def test_radius_examples(pts, i, expected):
    X = build_index(pts)
    assert radius_of(X, i) == pytest.approx(expected, abs=1e-14)
    assert radius_bisect_oracle(X, i, 1e-10) == pytest.approx(expected, abs=1e-10)
    assert slack(X, i, expected) == pytest.approx(1.0, abs=1e-12)


def test_radius_invalid_index():
    X = build_index([(0.1, 0.1)])
    with pytest.raises(IndexError):
        radius_of(X, 1)
    with pytest.raises(IndexError):
        radius_of(X, -1)


def test_solve_sorted_segment_choice():
    # 1 + 0 + 0.1 + 0.2 over 3 = 0.433 <= 0.9, but over 2 = 0.55 > 0.2
    assert solve_sorted(np.array([0.0, 0.1, 0.2, 0.9])) == pytest.approx(1.3 / 3)


def test_oracle_agrees_on_uniform_sets():
    X = uniform_sample(500, 4)
    prof = all_radii(X)
    for i in range(500):
        assert abs(prof.radii[i] - radius_bisect_oracle(X, i, 1e-10)) <= 1e-8


def test_all_radii_coincident_points():
    prof = all_radii(build_index([(0.4, 0.4)] * 3))
    assert np.allclose(prof.radii, 1 / 3, atol=1e-15)
    assert prof.sum_r == pytest.approx(1.0)


def test_all_radii_single_point():
    prof = all_radii(build_index([(0.2, 0.9)]))
    assert prof.radii.tolist() == [1.0]
    assert prof.sum_r == 1.0 and prof.sum_r_sq == 1.0


def test_all_radii_rejects_empty():
    with pytest.raises(EmptyInputError):
        all_radii(build_index(np.empty((0, 2))))


def test_all_radii_matches_oracle_1000_points():
    X = uniform_sample(1000, 1)
    prof = all_radii(X)
    oracle = np.array([radius_bisect_oracle(X, i, 1e-10) for i in range(1000)])
    assert np.max(np.abs(prof.radii - oracle)) <= 1e-8


def test_all_radii_equals_radius_of():
    X = uniform_sample(2000, 12)
    prof = all_radii(X)
    single = np.array([radius_of(X, i) for i in range(len(X))])
    assert np.array_equal(prof.radii, single)


def test_all_radii_independent_of_cell_size():
    pts = uniform_sample(400, 5).coords
    ref = all_radii(build_index(pts, 1.0)).radii
    for s in (0.013, 0.05, 0.2, 0.7):
        assert np.allclose(all_radii(build_index(pts, s)).radii, ref, atol=1e-14, rtol=0)


def test_profile_aggregates():
    prof = all_radii(uniform_sample(300, 2))
    assert prof.sum_r == pytest.approx(prof.radii.sum(), rel=1e-9)
    assert prof.sum_r_sq == pytest.approx(float(prof.radii @ prof.radii), rel=1e-9)
    s = prof.summary()
    assert s["n"] == 300 and s["max_r"] >= s["min_r"] > 0


def test_insert_into_empty_set():
    X = build_index(np.empty((0, 2)))
    Y, prof = radius_after_insert(X, RadiusProfile.from_radii([]), (0.3, 0.3))
    assert len(Y) == 1 and prof.radii.tolist() == [1.0]


def test_insert_pair():
    X = build_index([(0, 0)])
    Y, prof = radius_after_insert(X, all_radii(X), (0.5, 0))
    assert prof.radii.tolist() == pytest.approx([0.75, 0.75], abs=1e-15)
    assert prof.sum_r == pytest.approx(1.5)


def test_insert_matches_full_recompute():
    X = uniform_sample(500, 8)
    prof = all_radii(X)
    for p in [(0.5, 0.5), (0.0, 1.0), tuple(X.coords[17])]:
        Y, inc = radius_after_insert(X, prof, p)
        full = all_radii(Y)
        assert np.max(np.abs(inc.radii - full.radii)) <= 1e-12
        assert inc.sum_r == pytest.approx(full.sum_r, rel=1e-9)
        assert inc.sum_r_sq == pytest.approx(full.sum_r_sq, rel=1e-9)


@given(points_st)
@settings(max_examples=150, deadline=None)
def test_radius_invariants(pts):
    X = build_index(pts)
    r = all_radii(X).radii
    coords = X.coords
    assert np.all((r > 0) & (r <= 1))
    # at least as many points as 1/r within the ball
    assert np.all(r * ball_counts(coords, r) >= 1 - 1e-9)
    d = np.hypot(coords[:, 0, None] - coords[None, :, 0], coords[:, 1, None] - coords[None, :, 1])
    inside = d <= r[:, None]
    assert np.all(~inside | (r[None, :] <= 3 * r[:, None] + 1e-9))


@given(points_st, st.tuples(unit, unit))
@settings(max_examples=150, deadline=None)
def test_insert_monotone_and_halving(pts, p):
    X = build_index(pts)
    before = all_radii(X).radii
    Y, after = radius_after_insert(X, all_radii(X), p)
    old = after.radii[:-1]
    assert np.all(old <= before + 1e-12)
    assert np.all(old >= before / 2 - 1e-12)
    assert np.max(np.abs(after.radii - all_radii(Y).radii)) <= 1e-12


@given(points_st, st.data())
@settings(max_examples=100, deadline=None)
def test_radius_of_matches_oracle(pts, data):
    X = build_index(pts)
    i = data.draw(st.integers(0, len(pts) - 1))
    assert abs(radius_of(X, i) - radius_bisect_oracle(X, i, 1e-10)) <= 1e-8
