"""Exact horofunctions: orbit horofunctions rho_y and Busemann functions.

Horofunctions are evaluators, never tables.  Convergence questions are
answered pointwise on explicit finite test sets.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

from .coarse import OrientedGeodesic, busemann
from .spaces import (
    F2Z2,
    LINE,
    TREE,
    WEDGE,
    ZXZ2,
    BoundaryPoint,
    F2Z2Point,
    LineEnd,
    ModelPoint,
    ModelSpace,
    RayPoint,
    TreeEnd,
    TreePoint,
    UnsupportedModel,
    WedgeEnd,
    ZxZ2Point,
    act,
    act_end,
    dist,
    geodesic_length,
    position_on,
)
from .words import GroupElement, alphabet, inv, mul


class HoroClass(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class OrbitHoro:
    """rho_y(z) = d(z, y) - d(x0, y)."""

    space: ModelSpace
    y: ModelPoint
    basepoint: ModelPoint = None

    def __post_init__(self):
        if self.basepoint is None:
            object.__setattr__(self, "basepoint", self.space.basepoint)
        self.space.check(self.y, self.basepoint)


@dataclass(frozen=True)
class BusemannHoro:
    """Busemann function of a boundary point, normalised to vanish at the basepoint."""

    space: ModelSpace
    xi: BoundaryPoint
    basepoint: ModelPoint = None

    def __post_init__(self):
        if self.basepoint is None:
            object.__setattr__(self, "basepoint", self.space.basepoint)
        expected = {TREE: TreeEnd, LINE: LineEnd, WEDGE: WedgeEnd}.get(self.space.model)
        if expected is None or not isinstance(self.xi, expected):
            raise UnsupportedModel(f"no Busemann functions for {self.xi!r} on {self.space.model}")


@dataclass(frozen=True)
class FunctionHoro:
    """A 1-Lipschitz function given only as a callable; classified by probing."""

    space: ModelSpace
    func: Callable[[ModelPoint], Fraction] = field(compare=False)
    basepoint: ModelPoint = None

    def __post_init__(self):
        if self.basepoint is None:
            object.__setattr__(self, "basepoint", self.space.basepoint)


Horofunction = Union[OrbitHoro, BusemannHoro, FunctionHoro]


def _busemann_raw(space: ModelSpace, xi: BoundaryPoint, z: ModelPoint):
    if space.model == TREE:
        return busemann(xi, z.word.letters)
    if space.model == LINE:
        return -xi.sign * z.x
    # wedge: moving out along the ray towards the end lowers the value
    return -z.s if z.ray == xi.ray else z.s


def horo_eval(h: Horofunction, z: ModelPoint):
    space = h.space
    space.check(z)
    if isinstance(h, OrbitHoro):
        return dist(space, z, h.y) - dist(space, h.basepoint, h.y)
    if isinstance(h, BusemannHoro):
        return _busemann_raw(space, h.xi, z) - _busemann_raw(space, h.xi, h.basepoint)
    return h.func(z) - h.func(h.basepoint)


def rho(space: ModelSpace, y: ModelPoint) -> OrbitHoro:
    return OrbitHoro(space, y)


# ------------------------------------------------------------ classification


def _sphere(space: ModelSpace, r: int) -> list[ModelPoint]:
    if space.model == TREE:
        from .words import words_of_length

        return [TreePoint(GroupElement(w)) for w in words_of_length(space.rank, r)]
    if space.model == ZXZ2:
        pts = {ZxZ2Point(n, b) for b in (0, 1) for n in (r - b, b - r)}
        return sorted(p for p in pts if abs(p.n) + p.bit == r)
    if space.model == LINE:
        return [space.point(r), space.point(-r)]
    raise UnsupportedModel(f"probing is not implemented on {space.model}")


def classify(h: Horofunction, probe_budget: int = 0) -> HoroClass:
    """Finite/infinite tag with a certificate, or UNKNOWN.

    Orbit horofunctions attain their infimum -d(x0, y) at y; Busemann
    functions fall without bound along their ray.  Callables carry no
    certificate: they are probed on spheres up to ``probe_budget`` (which
    checks the 1-Lipschitz floor h >= -r) and reported UNKNOWN.
    """
    if isinstance(h, OrbitHoro):
        return HoroClass.FINITE
    if isinstance(h, BusemannHoro):
        return HoroClass.INFINITE
    for r in range(1, probe_budget + 1):
        m = min(horo_eval(h, z) for z in _sphere(h.space, r))
        if m < -r:
            raise ValueError(f"not 1-Lipschitz: value {m} on the sphere of radius {r}")
    return HoroClass.UNKNOWN


# ------------------------------------------------------------ local minimum map


@dataclass(frozen=True)
class PointSet:
    points: frozenset

    def diameter(self, space: ModelSpace):
        pts = list(self.points)
        return max((dist(space, p, q) for p in pts for q in pts), default=0)


@dataclass(frozen=True)
class BoundaryLimit:
    point: BoundaryPoint


LocalMinResult = Union[PointSet, BoundaryLimit]


def neighbours(space: ModelSpace, p: ModelPoint) -> list[ModelPoint]:
    if space.model == TREE:
        return [TreePoint(mul(p.word, GroupElement((x,)))) for x in alphabet(space.rank)]
    if space.model == F2Z2:
        nb = [F2Z2Point(mul(p.word, GroupElement((x,)))) for x in alphabet(2)]
        return nb + [F2Z2Point(mul(p.word, GroupElement((), 1)))]
    if space.model == ZXZ2:
        return [ZxZ2Point(p.n + 1, p.bit), ZxZ2Point(p.n - 1, p.bit), ZxZ2Point(p.n, 1 - p.bit)]
    raise UnsupportedModel(f"{space.model} has no vertex neighbours")


def local_min_map(h: Horofunction) -> LocalMinResult:
    """The set where h <= inf h + 1, or the end that minimising sequences reach."""
    if isinstance(h, BusemannHoro):
        return BoundaryLimit(h.xi)
    if not isinstance(h, OrbitHoro):
        raise UnsupportedModel("local minimum map needs an orbit or Busemann horofunction")
    space = h.space
    if not space.discrete:
        raise UnsupportedModel("near-minimiser sets are finite only on discrete models")
    floor = horo_eval(h, h.y)
    # Unit-step graphs: the sublevel set {h <= floor + 1} is the unit ball at y.
    pts = {h.y} | {p for p in neighbours(space, h.y) if horo_eval(h, p) <= floor + 1}
    return PointSet(frozenset(pts))


def act_local_min(g: GroupElement, space: ModelSpace, res: LocalMinResult) -> LocalMinResult:
    if isinstance(res, BoundaryLimit):
        return BoundaryLimit(act_end(g, res.point))
    return PointSet(frozenset(act(space, g, p) for p in res.points))


# ------------------------------------------------------------ restriction to geodesics


class ProfileMismatch(AssertionError):
    """Neither profile matches within the allowed slack."""


@dataclass(frozen=True)
class Profile:
    kind: str  # "V" or "monotone"
    p: ModelPoint
    slope: int  # +1 or -1 for monotone profiles, 0 for V
    residual: Fraction


def _samples(space: ModelSpace, gamma: OrientedGeodesic) -> list[tuple[Fraction, ModelPoint]]:
    from .spaces import point_along

    path = list(gamma.points)
    length = geodesic_length(space, path)
    if space.discrete:
        ts = [Fraction(t) for t in range(int(length) + 1)]
    else:
        breaks = {Fraction(0), Fraction(length)}
        acc = Fraction(0)
        for u, v in zip(path, path[1:]):
            acc += dist(space, u, v)
            breaks.add(acc)
        grid = {Fraction(k, 2) for k in range(int(2 * length) + 1)}
        ts = sorted(breaks | grid)
    pts = [(t, point_along(space, path, t)) for t in ts]
    if gamma.reversed:
        pts = [(length - t, p) for t, p in reversed(pts)]
    return pts


def restrict_profile(h: Horofunction, gamma: OrientedGeodesic, slack=0) -> Profile:
    """Match h along gamma to a V-shape or to a slope-one monotone profile.

    A V-shape whose apex is an endpoint is reported as monotone from the
    start of the (oriented) geodesic.
    """
    space = h.space
    samples = _samples(space, gamma)
    vals = [(t, p, horo_eval(h, p)) for t, p in samples]
    t0, p0, h0 = vals[0]
    t_end = vals[-1][0]

    best_v = None
    for tp, pp, hp in vals:
        res = max(abs(hv - (hp + abs(tv - tp))) for tv, _, hv in vals)
        if best_v is None or res < best_v[0]:
            best_v = (res, tp, pp)
    best_m = None
    for slope in (1, -1):
        res = max(abs(hv - (h0 + slope * (tv - t0))) for tv, _, hv in vals)
        if best_m is None or res < best_m[0]:
            best_m = (res, slope)

    res_v, tp, pp = best_v
    interior = t0 < tp < t_end
    if interior and res_v <= best_m[0]:
        prof = Profile("V", pp, 0, Fraction(res_v))
    else:
        prof = Profile("monotone", p0, best_m[1], Fraction(best_m[0]))
    if prof.residual > slack:
        raise ProfileMismatch(f"no profile within slack {slack}: best residual {prof.residual}")
    return prof


def oriented(space: ModelSpace, x: ModelPoint, y: ModelPoint) -> OrientedGeodesic:
    return OrientedGeodesic.between(space, x, y)


# ------------------------------------------------------------ group action


def horo_action(g: GroupElement, h: Horofunction) -> Horofunction:
    """g.h, where (g.h)(z) = h(g^-1 z) - h(g^-1 x0)."""
    space = h.space
    if not space.acting:
        raise UnsupportedModel(f"no group action on the {space.model} model")
    if isinstance(h, OrbitHoro):
        if h.basepoint != space.basepoint:
            raise ValueError("action is defined for horofunctions at the model basepoint")
        return OrbitHoro(space, act(space, g, h.y))
    if isinstance(h, BusemannHoro):
        return BusemannHoro(space, act_end(g, h.xi))
    raise UnsupportedModel("cannot act on a callable horofunction")


def horo_action_eval(g: GroupElement, h: Horofunction, z: ModelPoint):
    """The defining formula of g.h, evaluated directly."""
    space = h.space
    gi = inv(g)
    return horo_eval(h, act(space, gi, z)) - horo_eval(h, act(space, gi, space.basepoint))


# ------------------------------------------------------------ pointwise limits


def deviation(h: Horofunction, candidate: Horofunction, test_points: Iterable[ModelPoint]):
    return max(abs(horo_eval(h, z) - horo_eval(candidate, z)) for z in test_points)


def pointwise_limit_check(seq: Sequence[Horofunction], candidate: Horofunction,
                          test_points: Iterable[ModelPoint]):
    """sup over the test points of |h_N - candidate| for the last supplied h_N."""
    if not seq:
        raise ValueError("empty sequence")
    return deviation(seq[-1], candidate, list(test_points))


def deviation_series(seq: Sequence[Horofunction], candidate: Horofunction,
                     test_points: Iterable[ModelPoint]) -> list:
    pts = list(test_points)
    return [deviation(h, candidate, pts) for h in seq]


# ------------------------------------------------------------ named examples


def line_end_horo(sign: int) -> BusemannHoro:
    return BusemannHoro(ModelSpace(LINE), LineEnd(sign))


def wedge_ray_horo(n: int) -> BusemannHoro:
    return BusemannHoro(ModelSpace(WEDGE), WedgeEnd(n))


def wedge_point(n: int, s) -> RayPoint:
    return RayPoint(n, Fraction(s))


def position(space: ModelSpace, gamma: OrientedGeodesic, p: ModelPoint):
    return position_on(space, list(gamma.points), p)
