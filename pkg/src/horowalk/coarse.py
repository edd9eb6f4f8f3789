"""Gromov products, nearest point projections and shadows."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .spaces import (
    TREE,
    BoundaryPoint,
    ModelPoint,
    ModelSpace,
    TreeEnd,
    TreePoint,
    UnsupportedModel,
    dist,
    end_lcp,
    geodesic,
    point_along,
    position_on,
    translate_end,
    word_end_lcp,
)
from .words import inv, parse


def _half(x):
    """Exact half: int when possible, Fraction otherwise."""
    if isinstance(x, int):
        return x // 2 if x % 2 == 0 else Fraction(x, 2)
    return Fraction(x) / 2


def gromov_product(space: ModelSpace, base: ModelPoint, x: ModelPoint, y: ModelPoint):
    return _half(dist(space, base, x) + dist(space, base, y) - dist(space, x, y))


def busemann(xi: TreeEnd, z: tuple[int, ...]) -> int:
    """lim_t d(z, xi_t) - t for the ray from the identity to ``xi``."""
    return len(z) - 2 * word_end_lcp(z, xi)


def gromov_product_boundary(space: ModelSpace, base: ModelPoint, xi: BoundaryPoint,
                            eta: BoundaryPoint | ModelPoint):
    """(xi . eta)_base for an end ``xi`` and an end or point ``eta``.

    Trees realise the sup-liminf definition exactly, so the value is the
    overlap length of the two rays issuing from ``base``.
    """
    if space.model != TREE or not isinstance(xi, TreeEnd):
        raise UnsupportedModel("boundary Gromov products are exact on tree models only")
    space.check(base)
    b = base.word.letters
    if isinstance(eta, TreeEnd):
        shift = inv(base.word)
        return end_lcp(translate_end(shift, xi), translate_end(shift, eta))
    space.check(eta)
    x = eta.word.letters
    return _half(dist(space, base, eta) + busemann(xi, b) - busemann(xi, x))


def dist_to_geodesic(space: ModelSpace, p: ModelPoint, path: list[ModelPoint]):
    q = nearest_point_projection(space, p, path)
    return dist(space, p, q)


def nearest_point_projection(space: ModelSpace, y: ModelPoint, path: list[ModelPoint]) -> ModelPoint:
    """Closest point of the geodesic ``path`` to ``y``.

    Ties (possible only in the product models) go to the least point in
    the dataclass order.
    """
    if not path:
        raise ValueError("empty geodesic")
    if space.discrete:
        return min(path, key=lambda p: (dist(space, y, p), p))
    # R-trees: the projection to [u, v] sits at distance (y . v)_u from u.
    u, v = path[0], path[-1]
    t = gromov_product(space, u, y, v)
    return point_along(space, path, t)


@dataclass(frozen=True)
class OrientedGeodesic:
    points: tuple
    reversed: bool = False

    @classmethod
    def between(cls, space: ModelSpace, x: ModelPoint, y: ModelPoint) -> "OrientedGeodesic":
        return cls(tuple(geodesic(space, x, y)))

    def flip(self) -> "OrientedGeodesic":
        return OrientedGeodesic(self.points, not self.reversed)

    def ordered(self) -> list:
        pts = list(self.points)
        return pts[::-1] if self.reversed else pts


def signed_distance(space: ModelSpace, gamma: OrientedGeodesic, x: ModelPoint, y: ModelPoint):
    path = list(gamma.points)
    s, t = position_on(space, path, x), position_on(space, path, y)
    if s is None or t is None:
        raise ValueError("signed distance needs both points on the geodesic")
    d = t - s
    return -d if gamma.reversed else d


# --------------------------------------------------------------------- shadows


@dataclass(frozen=True)
class Shadow:
    """S_base(center, R): points y with (center . y)_base >= d(base, center) - R."""

    base: ModelPoint
    center: ModelPoint
    R: Fraction

    def __post_init__(self):
        object.__setattr__(self, "R", Fraction(self.R))

    def distance_parameter(self, space: ModelSpace):
        return dist(space, self.base, self.center) - self.R

    def depth(self, space: ModelSpace):
        return 2 * self.R - dist(space, self.base, self.center)

    def to_record(self) -> dict:
        return {"base": str(self.base), "center": str(self.center), "R": float(self.R)}

    @classmethod
    def from_record(cls, space: ModelSpace, rec: dict) -> "Shadow":
        return cls(space.point(rec["base"]), space.point(rec["center"]), Fraction(rec["R"]))


def shadow_contains(space: ModelSpace, S: Shadow, y: ModelPoint) -> bool:
    return gromov_product(space, S.base, S.center, y) >= dist(space, S.base, S.center) - S.R


def shadow_contains_horo(space: ModelSpace, S: Shadow, y: ModelPoint) -> bool:
    """Membership through the orbit horofunction: rho_y(center) <= depth."""
    rho = dist(space, S.center, y) - dist(space, S.base, y)
    return rho <= S.depth(space)


def shadow_contains_end(space: ModelSpace, S: Shadow, xi: TreeEnd) -> bool:
    """Whether an end lies in the closure of S (tree models).

    In a tree the closure and the interior of the closure meet the
    boundary in the same set, so this is also the open-set test.
    """
    gp = gromov_product_boundary(space, S.base, xi, S.center)
    return gp >= dist(space, S.base, S.center) - S.R


def shadow_complement_cover(space: ModelSpace, S: Shadow, slack=0) -> Shadow:
    """A shadow based at the center that contains the complement of ``S``."""
    d = dist(space, S.base, S.center)
    return Shadow(S.center, S.base, d - S.R + Fraction(slack))


def four_point_gp_estimate(space: ModelSpace, a, b, c, d, A, base: ModelPoint | None = None,
                           slack=0) -> Optional[Fraction]:
    """(b . d) when (a . b) >= A, (c . d) >= A and (a . c) < A - slack.

    Returns ``None`` when the hypotheses fail.  On trees (slack 0) the
    returned value equals (a . c).
    """
    x0 = space.basepoint if base is None else base
    A = Fraction(A)
    gp = lambda p, q: gromov_product(space, x0, p, q)  # noqa: E731
    if gp(a, b) < A or gp(c, d) < A or not gp(a, c) < A - Fraction(slack):
        return None
    return gp(b, d)


def tree_point(text: str) -> TreePoint:
    return TreePoint(parse(text))

