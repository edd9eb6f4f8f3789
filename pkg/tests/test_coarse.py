from fractions import Fraction

import pytest
from hypothesis import given

from horowalk.coarse import (
    OrientedGeodesic,
    Shadow,
    dist_to_geodesic,
    four_point_gp_estimate,
    gromov_product,
    gromov_product_boundary,
    nearest_point_projection,
    shadow_complement_cover,
    shadow_contains,
    shadow_contains_end,
    shadow_contains_horo,
    signed_distance,
)
from horowalk.spaces import F2, LINE, ModelSpace, dist, end_of, geodesic
from horowalk.words import all_words_upto, common_prefix

from .conftest import tree_points

P = F2.point
E = F2.basepoint
LN = ModelSpace(LINE)


@pytest.mark.trivial
def test_gromov_product_examples():
    assert gromov_product(F2, E, P("ab"), P("aB")) == 1
    assert gromov_product(F2, E, P("abA"), P("aBA")) == 1
    x = P("abab")
    assert gromov_product(F2, E, x, x) == dist(F2, E, x)


@given(tree_points(), tree_points())
def test_gromov_product_is_common_prefix_in_the_tree(x, y):
    assert gromov_product(F2, E, x, y) == common_prefix(x.word.letters, y.word.letters)


@given(tree_points(), tree_points(), tree_points())
def test_gromov_product_triangle_inequality(x, y, z):
    gp = lambda a, b: gromov_product(F2, E, a, b)  # noqa: E731
    assert gp(x, y) >= min(gp(x, z), gp(y, z))


@given(tree_points(), tree_points())
def test_distance_to_geodesic_is_gromov_product(x, y):
    assert dist_to_geodesic(F2, E, geodesic(F2, x, y)) == gromov_product(F2, E, x, y)


@pytest.mark.trivial
def test_boundary_products():
    assert gromov_product_boundary(F2, E, end_of("(a)"), end_of("(b)")) == 0
    assert gromov_product_boundary(F2, E, end_of("(a)"), end_of("(a)")) == float("inf")


@pytest.mark.derived
def test_boundary_product_matches_truncations():
    xi, eta = end_of("ab(a)"), end_of("(a)")
    exact = gromov_product_boundary(F2, E, xi, eta)
    # liminf over finite truncations stabilises at the exact overlap
    approx = [gromov_product(F2, E, P(_txt(xi.take(n))), P(_txt(eta.take(n)))) for n in range(2, 12)]
    assert exact == 1 and set(approx) == {1}
    assert gromov_product_boundary(F2, P("a"), xi, eta) == 0


def _txt(letters):
    from horowalk.words import GroupElement, encode

    return encode(GroupElement(letters)) or "1"


@pytest.mark.trivial
def test_projection_examples():
    assert nearest_point_projection(F2, P("ab"), geodesic(F2, E, P("A"))) == E
    y = P("ab")
    assert nearest_point_projection(F2, y, geodesic(F2, P("1"), P("abab"))) == y


@pytest.mark.derived
def test_projection_matches_brute_force_minimum():
    y, path = P("abb"), geodesic(F2, E, P("aB"))
    brute = min(path, key=lambda p: dist(F2, y, p))
    assert nearest_point_projection(F2, y, path) == brute == P("a")


@given(tree_points(max_size=8), tree_points(max_size=8), tree_points(max_size=8))
def test_reverse_triangle_identity(y, u, v):
    path = geodesic(F2, u, v)
    p = nearest_point_projection(F2, y, path)
    assert all(dist(F2, y, q) == dist(F2, y, p) + dist(F2, p, q) for q in path)


@given(tree_points(max_size=8), tree_points(max_size=8), tree_points(max_size=8), tree_points(max_size=8))
def test_projection_distance_decomposition(x, y, u, v):
    path = geodesic(F2, u, v)
    px, py = nearest_point_projection(F2, x, path), nearest_point_projection(F2, y, path)
    if px != py:
        assert dist(F2, x, y) == dist(F2, x, px) + dist(F2, px, py) + dist(F2, py, y)


@pytest.mark.trivial
def test_signed_distance():
    g = OrientedGeodesic.between(F2, E, P("abb"))
    assert signed_distance(F2, g, P("a"), P("a")) == 0
    assert signed_distance(F2, g, P("a"), P("ab")) == 1
    assert signed_distance(F2, g.flip(), P("a"), P("ab")) == -1
    with pytest.raises(ValueError):
        signed_distance(F2, g, P("b"), P("a"))


@pytest.mark.trivial
def test_shadow_examples():
    S = Shadow(E, P("ab"), Fraction(1, 2))
    assert shadow_contains(F2, S, P("aba"))
    assert not shadow_contains(F2, S, P("a"))
    assert shadow_contains(F2, S, P("ab"))
    assert S.distance_parameter(F2) == Fraction(3, 2)
    assert S.depth(F2) == -1


@pytest.mark.trivial
def test_complement_cover_formula():
    S = Shadow(E, P("ab"), Fraction(1, 2))
    assert shadow_complement_cover(F2, S) == Shadow(P("ab"), E, Fraction(3, 2))
    line = Shadow(LN.point(0), LN.point(5), 1)
    assert shadow_complement_cover(LN, line) == Shadow(LN.point(5), LN.point(0), 4)


@pytest.mark.derived
@pytest.mark.parametrize("R", [Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)])
def test_complement_cover_exhaustive_on_ball(R):
    ball = [P(_txt(g.letters)) for g in all_words_upto(2, 5)]
    for c in ball[:17]:
        S = Shadow(E, c, R)
        cover = shadow_complement_cover(F2, S)
        assert all(shadow_contains(F2, S, y) or shadow_contains(F2, cover, y) for y in ball)


@given(tree_points(max_size=6), tree_points(max_size=8))
def test_shadow_test_equals_horofunction_test(c, y):
    for R in (Fraction(1, 2), Fraction(3, 2), 2, Fraction(5, 2)):
        S = Shadow(E, c, R)
        assert shadow_contains(F2, S, y) == shadow_contains_horo(F2, S, y)


@given(tree_points(max_size=6), tree_points(max_size=8), tree_points(max_size=8))
def test_points_of_a_shadow_have_large_product(c, y, z):
    S = Shadow(E, c, Fraction(3, 2))
    if shadow_contains(F2, S, y) and shadow_contains(F2, S, z):
        assert gromov_product(F2, E, y, z) >= S.distance_parameter(F2)


@given(tree_points(max_size=6), tree_points(max_size=8))
def test_projection_to_center_geodesic_and_shadow(c, y):
    R = Fraction(3, 2)
    S = Shadow(E, c, R)
    p = nearest_point_projection(F2, y, geodesic(F2, E, c))
    if shadow_contains(F2, S, y):
        assert dist(F2, c, p) <= R
    else:
        assert dist(F2, c, p) >= R


def test_end_in_shadow():
    S = Shadow(E, P("ab"), Fraction(1, 2))
    assert shadow_contains_end(F2, S, end_of("ab(a)"))
    assert not shadow_contains_end(F2, S, end_of("(a)"))


@pytest.mark.trivial
def test_four_point_estimate():
    a3, b3 = P("aaa"), P("bbb")
    assert four_point_gp_estimate(F2, a3, a3, b3, b3, 2) == 0
    assert four_point_gp_estimate(F2, P("aba"), P("abA"), P("aBA"), P("aBa"), 2) == 1
    assert four_point_gp_estimate(F2, a3, a3, a3, b3, 2) is None


@given(tree_points(max_size=8), tree_points(max_size=8), tree_points(max_size=8), tree_points(max_size=8))
def test_four_point_estimate_is_exact_in_trees(a, b, c, d):
    for A in range(0, 5):
        v = four_point_gp_estimate(F2, a, b, c, d, A)
        if v is not None:
            assert v == gromov_product(F2, E, a, c)
