"""Metric and projective primitives.

This module owns the four geometric objects everything else is built
from: finite point clouds with an exact fixed-radius counting index,
points of real projective space with a canonical representative,
points of the blown-up space (base point plus direction), and the
log-spaced radius grids used by the dimension estimators.

Distance conventions
--------------------
Base space: Euclidean. Balls are closed, so a point at distance
exactly r is counted. Projective space carries the angular metric
arccos|<a, b>| in [0, pi/2], evaluated through the chord form
2*asin(min(|a-b|, |a+b|)/2) which is stable for nearly equal and
nearly antipodal representatives. The blown-up space combines the two
with a scale lambda:

    sqrt(|a.base - b.base|^2 + lambda^2 * angle(a.dir, b.dir)^2)

which is a metric on the product because both factors are.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DimensionMismatch,
    InvalidGrid,
    NonPositiveScale,
    ZeroVector,
)

HALF_PI = float(np.pi / 2.0)

# Resolution of the canonical-representative lattice. Snapping unit
# vectors to multiples of 2^-26 costs ~3e-8 rad of angular error but
# makes the representative bitwise identical across input rescalings,
# which turns projective equality into byte equality.
_QUANT = 2.0 ** 26

_ZERO_TOL = 1e-12


def _as_vector(v, n=None):
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise DimensionMismatch(f"expected a flat vector, got shape {a.shape}")
    if n is not None and a.shape[0] != n:
        raise DimensionMismatch(f"expected {n} coordinates, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ZeroVector("vector has non-finite coordinates")
    return a


def _canonical_rep(v):
    """Canonical unit representative of the line through v.

    Prescale by the power of two bringing the largest magnitude into
    [0.5, 1) (exact in floating point), normalize, snap to the 2^-26
    lattice, renormalize, then force the first coordinate larger than
    1e-12 in magnitude to be positive. The lattice snap absorbs the
    last-ulp differences that normalizing alpha*v instead of v can
    produce, so representatives of a line agree bitwise.
    """
    m = float(np.max(np.abs(v)))
    if m < _ZERO_TOL:
        raise ZeroVector(f"norm below {_ZERO_TOL}: cannot take a direction")
    u = np.ldexp(v, -np.frexp(m)[1])
    u = u / np.sqrt(np.add.reduce(u * u))
    q = np.rint(u * _QUANT) / _QUANT
    rep = q / np.sqrt(np.add.reduce(q * q))
    for c in rep:
        if abs(c) > _ZERO_TOL:
            if c < 0.0:
                rep = -rep
            break
    rep = rep + 0.0  # clear negative zeros left by the flip
    rep.setflags(write=False)
    return rep


class ProjectivePoint:
    """A point of P^{n-1}: the line through a nonzero vector.

    Instances are immutable and compare (and hash) by the bytes of
    their canonical representative, so two constructions from any
    nonzero multiples of the same vector are equal.
    """

    __slots__ = ("rep",)

    def __init__(self, rep):
        object.__setattr__(self, "rep", rep)

    def __setattr__(self, name, value):
        raise AttributeError("ProjectivePoint is immutable")

    @property
    def n(self):
        return self.rep.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return self.rep.tobytes() == other.rep.tobytes()

    def __hash__(self):
        return hash(self.rep.tobytes())

    def __repr__(self):
        coords = ", ".join(f"{c:.6g}" for c in self.rep)
        return f"ProjectivePoint([{coords}])"


def projective_from_vector(v, n=None):
    """Map a nonzero vector to its projective class.

    Raises ZeroVector when the norm is below 1e-12; callers must not
    project a point onto itself.
    """
    a = _as_vector(v, n)
    if a.shape[0] < 2:
        raise DimensionMismatch("projective space needs ambient dimension >= 2")
    return ProjectivePoint(_canonical_rep(a))


def projective_distance(a, b):
    """Angular distance on P^{n-1}, in radians, in [0, pi/2].

    Equals arccos|<a, b>| but is computed from the shorter of the two
    chords, which keeps full precision near 0 where the arccos form
    loses half the significant digits.
    """
    if not isinstance(a, ProjectivePoint) or not isinstance(b, ProjectivePoint):
        raise TypeError("projective_distance expects ProjectivePoint operands")
    if a.n != b.n:
        raise DimensionMismatch(f"ambient dimensions differ: {a.n} vs {b.n}")
    diff = a.rep - b.rep
    summ = a.rep + b.rep
    chord = min(
        float(np.sqrt(np.add.reduce(diff * diff))),
        float(np.sqrt(np.add.reduce(summ * summ))),
    )
    theta = 2.0 * float(np.arcsin(min(chord, 2.0) / 2.0))
    # a last-ulp overshoot past pi/2 is possible for orthogonal reps
    return min(theta, HALF_PI)


def projective_distance_rows(rep, reps):
    """Vectorized angular distance from one canonical rep to many.

    `rep` is a length-n representative, `reps` an (m, n) matrix of
    representatives. Same chord formula as projective_distance, so
    scalar and row results agree.
    """
    dm = np.sqrt(np.add.reduce((reps - rep) ** 2, axis=1))
    dp = np.sqrt(np.add.reduce((reps + rep) ** 2, axis=1))
    chord = np.minimum(dm, dp)
    theta = 2.0 * np.arcsin(np.minimum(chord, 2.0) / 2.0)
    return np.minimum(theta, HALF_PI)


@dataclass(frozen=True)
class BlowupPoint:
    """A point of the blown-up space: a base location plus a direction.

    For lifted (strict-transform) points the direction is the class of
    base - center and is_exceptional is False. Exceptional points sit
    at the center itself and carry a tangent-cone direction.
    """

    base: np.ndarray
    dir: ProjectivePoint
    is_exceptional: bool = False

    def __post_init__(self):
        base = np.asarray(self.base, dtype=np.float64)
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        if base.shape != (self.dir.n,):
            raise DimensionMismatch(
                f"base has shape {base.shape}, direction lives in R^{self.dir.n}"
            )


def blowup_distance(a, b, lam):
    """Product metric on base x P^{n-1} with angular scale lam > 0."""
    if not isinstance(a, BlowupPoint) or not isinstance(b, BlowupPoint):
        raise TypeError("blowup_distance expects BlowupPoint operands")
    if a.base.shape != b.base.shape:
        raise DimensionMismatch(
            f"base dimensions differ: {a.base.shape} vs {b.base.shape}"
        )
    lam = float(lam)
    if not lam > 0.0:
        raise NonPositiveScale(f"lambda must be positive, got {lam}")
    diff = a.base - b.base
    base_d = float(np.sqrt(np.add.reduce(diff * diff)))
    ang = projective_distance(a.dir, b.dir)
    return float(np.hypot(base_d, lam * ang))


def distance_rows(points, centers):
    """Euclidean distances from each center row to every point.

    Returns an array of shape (len(centers), len(points)). The
    per-pair arithmetic (coordinate differences squared, summed over
    the last axis, then sqrt) matches the one-center path exactly, so
    counts derived from these rows agree with naive scans.
    """
    diff = points[np.newaxis, :, :] - centers[:, np.newaxis, :]
    return np.sqrt(np.add.reduce(diff * diff, axis=2))


class PointCloud:
    """An immutable finite point set in R^n with an exact range index.

    Parameters
    ----------
    points : array-like, shape (N, n)
        Embedding coordinates, N >= 1 and n >= 2, all finite.
    labels : sequence of str, optional
        Per-point identifiers (token strings); length must be N.
    """

    __slots__ = ("points", "labels", "_tree")

    def __init__(self, points, labels=None):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise DimensionMismatch(f"points must be 2-d, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise DimensionMismatch("a cloud needs at least one point")
        if pts.shape[1] < 2:
            raise DimensionMismatch("ambient dimension must be at least 2")
        if not np.all(np.isfinite(pts)):
            bad = np.argwhere(~np.isfinite(pts))[0]
            raise NonFiniteValue(
                f"non-finite coordinate at point {bad[0]}, column {bad[1]}",
                row=int(bad[0]),
                col=int(bad[1]),
            )
        pts.setflags(write=False)
        self.points = pts
        if labels is not None:
            labels = list(labels)
            if len(labels) != pts.shape[0]:
                raise DimensionMismatch(
                    f"{len(labels)} labels for {pts.shape[0]} points"
                )
        self.labels = labels
        self._tree = cKDTree(pts)

    @property
    def n(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def range_count(self, center, r):
        """Number of points within the closed ball B(center, r)."""
        c = _as_vector(center, self.n)
        r = float(r)
        if r < 0.0:
            raise ValueError(f"radius must be >= 0, got {r}")
        return int(self._tree.query_ball_point(c, r, return_length=True))

    def distances_to(self, center):
        """Euclidean distance from center to every point, in cloud order."""
        c = _as_vector(center, self.n)
        return distance_rows(self.points, c[np.newaxis, :])[0]

    def sorted_distances(self, center):
        """Ascending distances from center; counting d <= r with a right
        bisect on this array reproduces range_count on tie-free data."""
        return np.sort(self.distances_to(center))


def range_count(cloud, center, r):
    """Count cloud points in the closed ball of radius r around center.

    Exact by contract: the spatial index must agree with a naive O(N)
    distance scan, boundary ties included.
    """
    return cloud.range_count(center, r)


@dataclass(frozen=True)
class RadiusGrid:
    """A strictly increasing grid of positive analysis radii.

    At least four entries, because slope estimation needs room. The
    last entry is r_max, the outer edge of the analysis window.
    """

    radii: np.ndarray = field()

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=np.float64)
        if r.ndim != 1 or r.shape[0] < 4:
            raise InvalidGrid("grid needs at least 4 radii")
        if not np.all(np.isfinite(r)) or r[0] <= 0.0:
            raise InvalidGrid("grid radii must be finite and positive")
        if not np.all(np.diff(r) > 0.0):
            raise InvalidGrid("grid radii must be strictly increasing")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)

    @property
    def r_max(self):
        return float(self.radii[-1])

    def __len__(self):
        return self.radii.shape[0]

    def __iter__(self):
        return iter(self.radii)

    @classmethod
    def geometric(cls, r_min, r_max, count=32):
        """Log-spaced grid from r_min to r_max inclusive.

        Log spacing matches the log-log slope estimators: equal steps
        in log r. The top entry is pinned to r_max exactly.
        """
        r_min = float(r_min)
        r_max = float(r_max)
        if not (0.0 < r_min < r_max):
            raise InvalidGrid(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
        if count < 4:
            raise InvalidGrid("grid needs at least 4 radii")
        g = np.geomspace(r_min, r_max, int(count))
        g[-1] = r_max
        if not np.all(np.diff(g) > 0.0):
            # an extremely narrow span can collapse adjacent log steps
            raise InvalidGrid(
                f"span [{r_min}, {r_max}] too narrow for {count} distinct radii"
            )
        return cls(g)
