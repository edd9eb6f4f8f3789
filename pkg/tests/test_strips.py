import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horowalk import strips
from horowalk.oracles import acylindricity_bound, displacement_set
from horowalk.spaces import InsufficientDepth, end_of
from horowalk.strips import (
    BGParams,
    BoundaryPair,
    enumerate_bg_brute,
    enumerate_bg_in_ball,
    growth_bound,
    growth_counts,
    is_bounded_geometry,
    per_ball_multiplicity,
    translate_pair,
)
from horowalk.walks import BACKWARD, FORWARD, StepDistribution, reflected, trial_path
from horowalk.words import all_words_upto, mul, parse

from .conftest import elements

AXIS = BoundaryPair(end_of("(A)"), end_of("(a)"))
P4 = BGParams(1, 3, parse("aaaa"))
ENDS = ["(a)", "(A)", "(b)", "(B)", "ab(a)", "A(b)", "(ab)", "(AB)", "b(aB)", "BA(b)", "aab(A)"]


@pytest.mark.trivial
def test_axis_configuration():
    assert is_bounded_geometry(parse("1"), AXIS, P4)
    assert not is_bounded_geometry(parse("1"), BoundaryPair(end_of("(A)"), end_of("(b)")), P4)
    with pytest.raises(ValueError):
        BoundaryPair(end_of("(a)"), end_of("a(a)"))


def test_params_validation():
    with pytest.raises(ValueError):
        BGParams(1, 5, parse("aaa"))
    with pytest.raises(ValueError):
        BGParams(0, 1, parse("a"))


@pytest.mark.trivial
def test_radius_zero():
    assert enumerate_bg_brute(AXIS, P4, 0) == [parse("1")]
    assert enumerate_bg_in_ball(BoundaryPair(end_of("(b)"), end_of("(B)")), P4, 0) == []


@pytest.mark.derived
def test_axis_growth_is_linear_and_matches_enumeration():
    counts = growth_counts(AXIS, P4, 8)
    brute = [len(enumerate_bg_brute(AXIS, P4, r)) for r in range(7)]
    assert counts[:7] == brute
    assert counts == [2 * r + 1 for r in range(9)]
    assert enumerate_bg_in_ball(AXIS, P4, 2) == [parse(w) for w in ("1", "A", "a", "AA", "aa")]


@pytest.mark.derived
def test_off_axis_pair_can_be_empty_at_small_radius():
    pair = BoundaryPair(end_of("bA(b)"), end_of("bA(B)"))
    assert enumerate_bg_in_ball(pair, P4, 2) == enumerate_bg_brute(pair, P4, 2) == []


@pytest.mark.derived
@pytest.mark.parametrize("v", ["aaa", "abab", "bAb", "abAB"])
def test_near_line_enumeration_equals_brute_force(v):
    rng = random.Random(v)
    params = BGParams(1, 3, parse(v))
    for _ in range(8):
        a, b = rng.sample(ENDS, 2)
        pair = BoundaryPair(end_of(a), end_of(b))
        assert enumerate_bg_in_ball(pair, params, 6) == sorted(
            enumerate_bg_brute(pair, params, 6), key=lambda g: (len(g), g.letters))


@given(elements(max_size=4), st.sampled_from(ENDS), st.sampled_from(ENDS))
def test_equivariance(g, a, b):
    if a == b:
        return
    pair = BoundaryPair(end_of(a), end_of(b))
    moved = translate_pair(g, pair)
    for h in all_words_upto(2, 3):
        assert is_bounded_geometry(h, pair, P4) == is_bounded_geometry(mul(g, h), moved, P4)


@pytest.mark.derived
def test_local_bound_matches_brute_force_displacement_count():
    # N(D) for D = 22K with K = 1: worst case is a point on an axis
    assert strips.local_bound(P4) == acylindricity_bound(22) == 45
    assert len(displacement_set(6, parse("a" * 8))) == acylindricity_bound(6)


@pytest.mark.trivial
def test_multiplicity_far_from_the_line_is_zero():
    assert per_ball_multiplicity(AXIS, P4, parse("bbbbbbb")) == 0
    assert per_ball_multiplicity(AXIS, P4, parse("aa")) >= 1


@pytest.mark.derived
def test_multiplicities_stay_below_local_bound():
    N = strips.local_bound(P4)
    for x in ("1", "aa", "AAA", "ab", "aaB"):
        assert per_ball_multiplicity(AXIS, P4, parse(x)) <= N


def test_growth_stays_below_bound_for_assorted_pairs():
    for a, b in [("(A)", "(a)"), ("(ab)", "(AB)"), ("b(aB)", "BA(b)")]:
        pair = BoundaryPair(end_of(a), end_of(b))
        for r, c in enumerate(growth_counts(pair, P4, 30)):
            assert c <= growth_bound(P4, r)


def test_truncated_ends_never_guess():
    pair = BoundaryPair(end_of("ab..."), end_of("(B)"))
    with pytest.raises(InsufficientDepth):
        enumerate_bg_in_ball(pair, P4, 6)


# ------------------------------------------------------------ walk pairs


U = StepDistribution.uniform()


@pytest.mark.trivial
def test_ray_walk_series_decays_like_log_over_n():
    mu = StepDistribution.point_mass("a")
    params = BGParams(1, 3, parse("aaaa"))
    # the backward walk is the inverse ray, so the pair is the a-axis
    series = strips.strip_criterion_series(mu, params, 200, 2, seed=0)
    for s in series:
        assert s is not None
        assert s.at(200) == pytest.approx(math.log(1 + 401) / 200)
        assert s.strip_times == 200


@pytest.mark.derived
def test_strip_times_and_counts_match_a_direct_replay():
    n, m, seed = 60, 12, 5
    params = BGParams(1, 3, parse("aaa"))
    series = strips.strip_criterion_series(U, params, n, m, seed=seed)
    extra = 1 + 3 + 2
    xf, df, okf = strips._resolve_chunk(0, m, U, extra, n, seed, FORWARD, 20, np.zeros(m, np.int64))
    xb, db, okb = strips._resolve_chunk(0, m, reflected(U), extra, 0, seed, BACKWARD, 20, df)
    checked = 0
    for i, s in enumerate(series):
        if s is None:
            continue
        pair = BoundaryPair(strips._end_from_row(xb[i], int(db[i])), strips._end_from_row(xf[i], int(df[i])))
        locs = trial_path(U, n, seed, i).locations
        assert s.strip_times == sum(is_bounded_geometry(w, pair, params) for w in locs[1:])
        for t in range(1, n + 1):
            r = len(locs[t])
            if r <= 5:
                brute = len(enumerate_bg_brute(pair, params, r))
                assert s.values[t - 1] == pytest.approx(math.log1p(brute) / t)
        checked += 1
    assert checked >= 10


def test_strip_series_is_worker_independent(split_jobs):
    params = BGParams(1, 3, parse("aaa"))
    split_jobs(1)
    a = strips.strip_criterion_series(U, params, 100, 600, seed=2)
    split_jobs(3)
    b = strips.strip_criterion_series(U, params, 100, 600, seed=2)
    assert [None if s is None else (s.strip_times, s.values.tolist()) for s in a] == \
           [None if s is None else (s.strip_times, s.values.tolist()) for s in b]
