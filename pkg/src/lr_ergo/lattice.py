"""Finite emulation of the lattice Z^D: sites, regions, the l1 metric and rays.

Sites are plain tuples of ints.  A :class:`Torus` describes the finite box the
experiment lives in; passing ``torus=None`` to the geometric helpers means the
bare infinite lattice.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

Site = tuple[int, ...]

BREAKPOINT_TOL = 1e-12


class LatticeError(ValueError):
    pass


class EmptyRegionError(LatticeError):
    pass


class OutOfBoxError(LatticeError):
    pass


def as_site(x: Iterable[int] | int) -> Site:
    if isinstance(x, (int,)):
        return (int(x),)
    return tuple(int(c) for c in x)


@dataclass(frozen=True)
class Torus:
    extent: tuple[int, ...]
    boundary: str = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "extent", tuple(int(e) for e in self.extent))
        if not self.extent or any(e < 1 for e in self.extent):
            raise LatticeError(f"extent must be positive per axis, got {self.extent}")
        if self.boundary not in ("periodic", "open"):
            raise LatticeError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def n_sites(self) -> int:
        return math.prod(self.extent)

    def in_box(self, s: Site) -> bool:
        return len(s) == self.dim and all(0 <= c < e for c, e in zip(s, self.extent))

    def reduce(self, s: Site) -> Site:
        """Map a site into the box (periodic) or check that it lies there (open)."""
        if self.periodic:
            return tuple(c % e for c, e in zip(s, self.extent))
        if not self.in_box(s):
            raise OutOfBoxError(f"site {s} outside open box {self.extent}")
        return s

    def axis_delta(self, a: int, b: int, axis: int) -> int:
        d = abs(a - b)
        if self.periodic:
            L = self.extent[axis]
            d %= L
            return min(d, L - d)
        return d

    def sites(self) -> "Region":
        return Region(itertools.product(*(range(e) for e in self.extent)))

    def minimal_image(self, s: Site) -> Site:
        """Representative of ``s`` with coordinates in (-L/2, L/2] on a periodic torus."""
        if not self.periodic:
            return s
        out = []
        for c, L in zip(s, self.extent):
            c %= L
            if c > L // 2:
                c -= L
            out.append(c)
        return tuple(out)


class Region:
    """Finite, deduplicated, lexicographically ordered set of sites."""

    __slots__ = ("sites", "_set")

    def __init__(self, sites: Iterable[Site | Sequence[int] | int] = ()):
        uniq = {as_site(s) for s in sites}
        dims = {len(s) for s in uniq}
        if len(dims) > 1:
            raise LatticeError(f"mixed site dimensions {sorted(dims)}")
        self.sites: tuple[Site, ...] = tuple(sorted(uniq))
        self._set = frozenset(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, s) -> bool:
        return as_site(s) in self._set

    def __eq__(self, other) -> bool:
        return isinstance(other, Region) and self.sites == other.sites

    def __hash__(self) -> int:
        return hash(self.sites)

    def __repr__(self) -> str:
        body = ", ".join(str(s[0]) if len(s) == 1 else str(s) for s in self.sites)
        return f"Region({{{body}}})"

    @property
    def dim(self) -> int | None:
        return len(self.sites[0]) if self.sites else None

    def index(self, s: Site) -> int:
        return self.sites.index(s)

    def issubset(self, other: "Region") -> bool:
        return self._set <= other._set

    def isdisjoint(self, other: "Region") -> bool:
        return self._set.isdisjoint(other._set)

    def union(self, *others: "Region") -> "Region":
        return Region(itertools.chain(self.sites, *(o.sites for o in others)))

    def intersection(self, other: "Region") -> "Region":
        return Region(s for s in self.sites if s in other._set)

    def difference(self, other: "Region") -> "Region":
        return Region(s for s in self.sites if s not in other._set)


def l1_norm(s: Sequence[int]) -> int:
    return sum(abs(int(c)) for c in s)


def site_distance(x: Site, y: Site, torus: Torus | None = None) -> int:
    if torus is None:
        return sum(abs(a - b) for a, b in zip(x, y))
    return sum(torus.axis_delta(a, b, i) for i, (a, b) in enumerate(zip(x, y)))


def _require_nonempty(*regions: Region) -> None:
    for r in regions:
        if len(r) == 0:
            raise EmptyRegionError("operation undefined on the empty region")


def dist(X: Region, Y: Region, torus: Torus | None = None) -> int:
    """Smallest l1 distance between the two regions (wrapped per axis on a periodic torus)."""
    _require_nonempty(X, Y)
    if not X.isdisjoint(Y):
        return 0
    return min(site_distance(x, y, torus) for x in X for y in Y)


def diam(X: Region, torus: Torus | None = None) -> int:
    _require_nonempty(X)
    return max((site_distance(x, y, torus) for x in X for y in X), default=0)


def translate(X: Region, n: Sequence[int], torus: Torus | None = None) -> Region:
    n = as_site(n)
    shifted = [tuple(a + b for a, b in zip(x, n)) for x in X]
    if torus is not None:
        shifted = [torus.reduce(s) for s in shifted]
    return Region(shifted)


def ball_extension(X: Region, r: int, torus: Torus | None = None) -> Region:
    """Union of closed l1 balls of radius ``r`` around every site of X, clipped to the box."""
    _require_nonempty(X)
    if r < 0:
        raise LatticeError("radius must be nonnegative")
    D = X.dim
    offsets = [o for o in itertools.product(range(-r, r + 1), repeat=D) if l1_norm(o) <= r]
    out = set()
    for x in X:
        for o in offsets:
            s = tuple(a + b for a, b in zip(x, o))
            if torus is None:
                out.add(s)
            elif torus.periodic:
                out.add(torus.reduce(s))
            elif torus.in_box(s):
                out.add(s)
    return Region(out)


def distance_to_boundary(X: Region, torus: Torus) -> float:
    """Distance from X to the nearest site outside an open box; infinite when periodic."""
    _require_nonempty(X)
    if torus.periodic:
        return math.inf
    return min(min(c + 1, L - c) for x in X for c, L in zip(x, torus.extent))


@dataclass(frozen=True)
class RationalDirection:
    """Direction n/|n|_1 for a nonzero integer vector n, kept in exact arithmetic."""

    n: Site

    def __post_init__(self):
        object.__setattr__(self, "n", as_site(self.n))
        if l1_norm(self.n) == 0:
            raise LatticeError("direction vector must be nonzero")

    @property
    def unit(self) -> tuple[Fraction, ...]:
        norm = l1_norm(self.n)
        return tuple(Fraction(c, norm) for c in self.n)

    @property
    def unit_float(self) -> tuple[float, ...]:
        return tuple(float(u) for u in self.unit)

    @property
    def dim(self) -> int:
        return len(self.n)


def _snap_floor(x: float) -> int:
    r = round(x)
    if abs(x - r) <= BREAKPOINT_TOL * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def ray_point(v: float, q: RationalDirection, t: float) -> Site:
    """Componentwise floor of v * unit(q) * t."""
    if t < 0:
        raise LatticeError("ray time must be nonnegative")
    return tuple(_snap_floor(v * float(u) * t) for u in q.unit)


def ray_breakpoints(v: float, q: RationalDirection, T: float) -> list[float]:
    """Times in (0, T) at which some component of v * unit(q) * t crosses an integer."""
    if T <= 0:
        raise LatticeError("horizon T must be positive")
    times: list[float] = []
    for u in q.unit:
        rate = abs(v * float(u))
        if rate == 0.0:
            continue
        m = 1
        while True:
            t = m / rate
            if t >= T - BREAKPOINT_TOL:
                break
            times.append(t)
            m += 1
    times.sort()
    out: list[float] = []
    for t in times:
        if not out or t - out[-1] > BREAKPOINT_TOL:
            out.append(t)
    return out
