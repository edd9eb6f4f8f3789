"""Exact model spaces: free-group trees, a wedge of rays, the line,
Z x Z/2 and F2 x Z/2, together with their boundary points.

Distances are ints on the discrete models and ``Fraction`` on the
continuous ones, so every identity below can be checked with ``==``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .words import (
    IDENTITY,
    GroupElement,
    common_prefix,
    encode,
    mul,
    parse,
    primitive_root,
    reduce_letters,
)

TREE, WEDGE, LINE, ZXZ2, F2Z2 = "tree", "wedge", "line", "zxz2", "f2z2"
MODELS = (TREE, WEDGE, LINE, ZXZ2, F2Z2)

# L1 product of a tree with an edge; a documented constant, not a sharp bound.
PRODUCT_DELTA = 1


class ModelMismatch(ValueError):
    pass


class UnsupportedModel(ValueError):
    pass


class InsufficientDepth(ValueError):
    """A truncated boundary point was asked for letters it does not know."""


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# --------------------------------------------------------------------- points


@dataclass(frozen=True, order=True)
class TreePoint:
    word: GroupElement = IDENTITY

    def __post_init__(self):
        if self.word.bit:
            raise ValueError("tree points carry no involution bit")

    def __str__(self):
        return encode(self.word) or "1"


@dataclass(frozen=True, order=True)
class RayPoint:
    ray: int = 0
    s: Fraction = Fraction(0)

    def __post_init__(self):
        s = _q(self.s)
        if s < 0:
            raise ValueError("ray coordinate must be >= 0")
        object.__setattr__(self, "s", s)
        if s == 0:
            object.__setattr__(self, "ray", 0)
        elif self.ray < 1:
            raise ValueError("rays are indexed from 1")


@dataclass(frozen=True, order=True)
class LinePoint:
    x: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "x", _q(self.x))


@dataclass(frozen=True, order=True)
class ZxZ2Point:
    n: int = 0
    bit: int = 0

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")


@dataclass(frozen=True, order=True)
class F2Z2Point:
    word: GroupElement = IDENTITY

    @property
    def bit(self) -> int:
        return self.word.bit

    def __str__(self):
        return encode(self.word) or "1"


ModelPoint = Union[TreePoint, RayPoint, LinePoint, ZxZ2Point, F2Z2Point]

_POINT_TYPES = {TREE: TreePoint, WEDGE: RayPoint, LINE: LinePoint, ZXZ2: ZxZ2Point, F2Z2: F2Z2Point}


# ----------------------------------------------------------- boundary points


@dataclass(frozen=True)
class TreeEnd:
    """An end of the tree: ``prefix`` followed by ``period`` repeated forever.

    With ``period=None`` only ``prefix`` is known (a truncated limit point
    of a sample path); asking for later letters raises InsufficientDepth.
    """

    prefix: tuple[int, ...] = ()
    period: tuple[int, ...] | None = None

    def __post_init__(self):
        prefix = tuple(self.prefix)
        if reduce_letters(prefix) != prefix:
            raise ValueError("end prefix is not reduced")
        period = self.period
        if period is not None:
            period = tuple(period)
            if not period:
                raise ValueError("period must be nonempty")
            if reduce_letters(prefix + period + period) != prefix + period + period:
                raise ValueError("eventually periodic word is not reduced")
            period = primitive_root(period)
            # Canonical form: shortest prefix, rotated period.
            while prefix and prefix[-1] == period[-1]:
                prefix = prefix[:-1]
                period = period[-1:] + period[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    @property
    def truncated(self) -> bool:
        return self.period is None

    @property
    def known_depth(self) -> float:
        return float("inf") if self.period is not None else len(self.prefix)

    def letter(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        if self.period is None:
            raise InsufficientDepth(f"end known only to depth {len(self.prefix)}")
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def take(self, n: int) -> tuple[int, ...]:
        if n <= len(self.prefix):
            return self.prefix[:n]
        return self.prefix + tuple(self.letter(i) for i in range(len(self.prefix), n))

    def __str__(self):
        if self.period is None:
            return encode(GroupElement(self.prefix)) + "..."
        return encode(GroupElement(self.prefix)) + "(" + encode(GroupElement(self.period)) + ")^inf"


@dataclass(frozen=True)
class LineEnd:
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class WedgeEnd:
    ray: int


BoundaryPoint = Union[TreeEnd, LineEnd, WedgeEnd]


def end_of(text: str) -> TreeEnd:
    """Parse ``"pre(per)"`` into an eventually periodic end, e.g. ``"ab(a)"``."""
    if "(" in text:
        pre, per = text.rstrip(")").split("(")
        return TreeEnd(parse(pre).letters, parse(per).letters)
    return TreeEnd(parse(text.rstrip(".")).letters, None)


def end_lcp(xi: TreeEnd, eta: TreeEnd) -> float:
    """Length of the common prefix of two ends (``inf`` iff equal)."""
    if xi.period is not None and eta.period is not None:
        bound = max(len(xi.prefix), len(eta.prefix)) + len(xi.period) + len(eta.period)
    else:
        bound = int(min(xi.known_depth, eta.known_depth))
    for i in range(bound):
        if xi.letter(i) != eta.letter(i):
            return i
    if xi.period is not None and eta.period is not None:
        return float("inf")
    raise InsufficientDepth("truncated ends agree on all known letters")


def word_end_lcp(w: tuple[int, ...], xi: TreeEnd) -> int:
    """Common prefix length of a finite word and an end."""
    n = len(w)
    depth = xi.known_depth
    i = 0
    while i < n:
        if i >= depth:
            raise InsufficientDepth(f"end known only to depth {len(xi.prefix)}")
        if w[i] != xi.letter(i):
            return i
        i += 1
    return n


def translate_end(g: GroupElement, xi: TreeEnd) -> TreeEnd:
    """The end ``g . xi``."""
    letters = g.letters
    if xi.period is None:
        t = 0
        while t < min(len(letters), len(xi.prefix)) and letters[-1 - t] == -xi.prefix[t]:
            t += 1
        if t == len(xi.prefix) and t < len(letters):
            raise InsufficientDepth("translation consumes the known prefix")
        return TreeEnd(letters[: len(letters) - t] + xi.prefix[t:], None)
    copies = len(letters) // len(xi.period) + 2
    body = reduce_letters(letters + xi.prefix + xi.period * copies)
    # The periodic tail survives cancellation; cut it back off.
    keep = len(body) - len(xi.period)
    return TreeEnd(body[:keep], body[keep:])


# ------------------------------------------------------------------- spaces


@dataclass(frozen=True)
class ModelSpace:
    model: str = TREE
    rank: int = 2
    delta: Fraction = field(default=None)  # filled per model

    def __post_init__(self):
        if self.model not in MODELS:
            raise UnsupportedModel(f"unknown model {self.model!r}")
        if self.model == F2Z2 and self.rank != 2:
            raise ValueError("the F2 x Z/2 model has rank 2")
        d = PRODUCT_DELTA if self.model in (ZXZ2, F2Z2) else 0
        object.__setattr__(self, "delta", Fraction(d))

    @property
    def basepoint(self) -> ModelPoint:
        return _POINT_TYPES[self.model]()

    @property
    def acting(self) -> bool:
        return self.model in (TREE, F2Z2)

    @property
    def discrete(self) -> bool:
        return self.model in (TREE, ZXZ2, F2Z2)

    def point(self, data) -> ModelPoint:
        """Build a point of this model from a word, number or tuple."""
        if isinstance(data, _POINT_TYPES[self.model]):
            return data
        if self.model in (TREE, F2Z2):
            g = parse(data, central=self.model == F2Z2) if isinstance(data, str) else data
            if any(abs(x) > self.rank for x in g.letters):
                raise ModelMismatch(f"{data!r} uses letters beyond rank {self.rank}")
            return TreePoint(g) if self.model == TREE else F2Z2Point(g)
        if self.model == LINE:
            return LinePoint(_q(data))
        if self.model == WEDGE:
            ray, s = data
            return RayPoint(ray, _q(s))
        n, bit = data
        return ZxZ2Point(n, bit)

    def check(self, *points) -> None:
        cls = _POINT_TYPES[self.model]
        for p in points:
            if not isinstance(p, cls):
                raise ModelMismatch(f"{p!r} is not a point of the {self.model} model")


F2 = ModelSpace(TREE, 2)


def dist(space: ModelSpace, x: ModelPoint, y: ModelPoint):
    space.check(x, y)
    m = space.model
    if m == TREE:
        a, b = x.word.letters, y.word.letters
        return len(a) + len(b) - 2 * common_prefix(a, b)
    if m == F2Z2:
        a, b = x.word.letters, y.word.letters
        return len(a) + len(b) - 2 * common_prefix(a, b) + (x.bit ^ y.bit)
    if m == LINE:
        return abs(x.x - y.x)
    if m == ZXZ2:
        return abs(x.n - y.n) + abs(x.bit - y.bit)
    return abs(x.s - y.s) if x.ray == y.ray else x.s + y.s


def geodesic(space: ModelSpace, x: ModelPoint, y: ModelPoint) -> list[ModelPoint]:
    """Ordered points of a geodesic from x to y.

    Discrete models list every vertex.  On the line and the wedge only the
    endpoints and the interior breakpoint (the basepoint of the wedge) are
    listed; the geodesic is the polyline through them.
    """
    space.check(x, y)
    m = space.model
    if m in (TREE, F2Z2):
        a, b = x.word.letters, y.word.letters
        c = common_prefix(a, b)
        path = [a[:i] for i in range(len(a), c - 1, -1)] + [b[:i] for i in range(c + 1, len(b) + 1)]
        if m == TREE:
            return [TreePoint(GroupElement(w)) for w in path]
        pts = [F2Z2Point(GroupElement(w, x.bit)) for w in path]
        if x.bit != y.bit:
            pts.append(F2Z2Point(GroupElement(b, y.bit)))
        return pts
    if m == ZXZ2:
        step = 1 if y.n >= x.n else -1
        pts = [ZxZ2Point(n, x.bit) for n in range(x.n, y.n + step, step)]
        if x.bit != y.bit:
            pts.append(ZxZ2Point(y.n, y.bit))
        return pts
    if m == LINE:
        return [x] if x == y else [x, y]
    if x == y:
        return [x]
    if x.ray != y.ray and x.s > 0 and y.s > 0:
        return [x, RayPoint(), y]
    return [x, y]


def on_segment(space: ModelSpace, u: ModelPoint, v: ModelPoint, p: ModelPoint) -> bool:
    return dist(space, u, p) + dist(space, p, v) == dist(space, u, v)


def point_along(space: ModelSpace, path: list[ModelPoint], t) -> ModelPoint:
    """Point at arclength ``t`` along a geodesic returned by ``geodesic``."""
    if space.discrete:
        if t != int(t):
            raise ValueError("discrete geodesics have integer parameters")
        return path[int(t)]
    t = _q(t)
    for u, v in zip(path, path[1:]):
        d = dist(space, u, v)
        if t <= d:
            return _interpolate(space, u, v, t)
        t -= d
    if t == 0:
        return path[-1]
    raise ValueError("parameter beyond the end of the geodesic")


def _interpolate(space: ModelSpace, u: ModelPoint, v: ModelPoint, t: Fraction) -> ModelPoint:
    if space.model == LINE:
        return LinePoint(u.x + t if v.x >= u.x else u.x - t)
    # Wedge pieces always lie on a single ray (breakpoints at the basepoint).
    ray = u.ray if u.s > 0 else v.ray
    return RayPoint(ray, u.s + t if v.s >= u.s else u.s - t)


def geodesic_length(space: ModelSpace, path: list[ModelPoint]):
    return sum((dist(space, u, v) for u, v in zip(path, path[1:])), 0)


def position_on(space: ModelSpace, path: list[ModelPoint], p: ModelPoint):
    """Arclength parameter of ``p`` on the geodesic, or ``None`` if off it."""
    if space.discrete:
        try:
            return path.index(p)
        except ValueError:
            return None
    if len(path) == 1:
        return Fraction(0) if p == path[0] else None
    acc = Fraction(0)
    for u, v in zip(path, path[1:]):
        if on_segment(space, u, v, p):
            return acc + dist(space, u, p)
        acc += dist(space, u, v)
    return None


def act(space: ModelSpace, g: GroupElement, x: ModelPoint) -> ModelPoint:
    if not space.acting:
        raise UnsupportedModel(f"no group action on the {space.model} model")
    space.check(x)
    if space.model == TREE:
        if g.bit:
            raise ValueError("the involution does not act on the tree")
        return TreePoint(mul(g, x.word))
    return F2Z2Point(mul(g, x.word))


def orbit_point(space: ModelSpace, g: GroupElement) -> ModelPoint:
    return act(space, g, space.basepoint)


def act_end(g: GroupElement, xi: BoundaryPoint) -> BoundaryPoint:
    if not isinstance(xi, TreeEnd):
        raise UnsupportedModel("only tree ends carry a group action")
    return translate_end(GroupElement(g.letters), xi)


__all__ = [
    "TREE", "WEDGE", "LINE", "ZXZ2", "F2Z2", "MODELS", "F2", "PRODUCT_DELTA",
    "TreePoint", "RayPoint", "LinePoint", "ZxZ2Point", "F2Z2Point", "ModelPoint",
    "TreeEnd", "LineEnd", "WedgeEnd", "BoundaryPoint", "ModelSpace",
    "ModelMismatch", "UnsupportedModel", "InsufficientDepth",
    "dist", "geodesic", "point_along", "position_on", "geodesic_length", "on_segment",
    "act", "orbit_point", "act_end", "translate_end", "end_of", "end_lcp", "word_end_lcp",
]
