from fractions import Fraction

import pytest

from horowalk import oracles
from horowalk.words import ball, inv, mul, parse


def _binom_half(k: int) -> Fraction:
    c = Fraction(1)
    for j in range(k):
        c *= (Fraction(1, 2) - j) / (j + 1)
    return c


def return_probabilities(n_max: int) -> list[Fraction]:
    """P(w_n = e) from the closed-walk generating function of the 4-regular
    tree, G(z) = 3 / (1 + 2 sqrt(1 - 12 z^2)); independent of any chain."""
    s = [Fraction(0)] * (n_max + 1)
    for k in range(n_max // 2 + 1):
        s[2 * k] = _binom_half(k) * Fraction(-12) ** k
    den = [2 * c for c in s]
    den[0] += 1
    inv_den = [Fraction(0)] * (n_max + 1)
    inv_den[0] = 1 / den[0]
    for m in range(1, n_max + 1):
        inv_den[m] = -sum(den[j] * inv_den[m - j] for j in range(1, m + 1)) / den[0]
    return [3 * c / Fraction(4) ** m for m, c in enumerate(inv_den)]


@pytest.mark.derived
@pytest.mark.parametrize("n", range(0, 11))
def test_distance_chain_matches_full_enumeration(n):
    law = oracles.walk_law(n)
    by_len: dict[int, Fraction] = {}
    for g, p in law.items():
        by_len[len(g)] = by_len.get(len(g), 0) + p
    chain = oracles.distance_chain_law(n)[-1]
    assert {k: v for k, v in chain.items() if v} == by_len
    assert oracles.expected_distance(n) == sum(len(g) * p for g, p in law.items())


@pytest.mark.derived
def test_expected_distance_matches_generating_function_to_thirty():
    ret = return_probabilities(30)
    assert ret[:5] == [1, 0, Fraction(1, 4), 0, Fraction(7, 64)]
    # one step from e always climbs; from elsewhere the mean increment is 1/2
    mean = Fraction(0)
    for n in range(31):
        assert oracles.expected_distance(n) == mean
        assert oracles.distance_chain_law(n)[-1].get(0, 0) == ret[n]
        mean += Fraction(1, 2) + ret[n] / 2


def test_float_moments_agree_with_exact():
    m, v = oracles.distance_chain_moments(40)
    law = oracles.distance_chain_law(40)[-1]
    mean = sum(j * p for j, p in law.items())
    var = sum(j * j * p for j, p in law.items()) - mean**2
    assert m == pytest.approx(float(mean), rel=1e-12)
    assert v == pytest.approx(float(var), rel=1e-10)


def test_laws_are_probability_measures():
    for law in oracles.distance_chain_law(25):
        assert sum(law.values()) == 1


def test_lower_tail_is_monotone_in_threshold():
    vals = [oracles.lower_tail(30, t) for t in range(0, 32)]
    assert vals == sorted(vals) and vals[-1] == 1


@pytest.mark.trivial
def test_harmonic_masses_sum_to_one():
    for r in range(1, 6):
        assert oracles.harmonic_cylinder_mass(r) * 4 * 3 ** (r - 1) == 1
    assert oracles.harmonic_cylinder_mass(1) == Fraction(1, 4)
    assert oracles.vertex_hitting_prob(2) == Fraction(1, 9)


@pytest.mark.derived
@pytest.mark.parametrize("D", [1, 2, 3, 4])
@pytest.mark.parametrize("y", ["aaaaaaa", "abababa", "abAbbaB", "bbaBBab"])
def test_acylindricity_candidates_match_brute_force(D, y):
    g = parse(y)
    assert oracles.acylindricity_count(D, g) == len(oracles.displacement_set(D, g))
    assert oracles.acylindricity_count(D, g) <= oracles.acylindricity_bound(D)


def test_acylindricity_bound_is_attained_on_an_axis():
    y = parse("a" * 12)
    assert len(oracles.displacement_set(4, y)) == oracles.acylindricity_bound(4) == 9


@pytest.mark.trivial
def test_ball_sizes():
    assert [oracles.ball_size(2, r) for r in range(4)] == [1, 5, 17, 53]
    assert all(oracles.ball_size(2, r) == len(ball(2, r)) for r in range(6))
    assert len(oracles.sphere(2, 3)) == 36


def test_displacement_set_elements_really_move_little():
    y = parse("abAB")
    for g in oracles.displacement_set(3, y):
        assert len(g) <= 3 and len(mul(mul(inv(y), g), y)) <= 3
