"""Synthetic point clouds with analytic ground truth.

Every generator records exactly what it built: which samples belong
to which component, the components' tangent subspaces as orthonormal
bases, their intrinsic dimensions, and the singular points. The
acceptance suite leans on these records instead of re-deriving truth
from the data.

Reproducibility is part of the contract. All randomness flows through
numpy's Philox generator, a counter-based 64-bit PRNG whose streams
are identical across platforms and word sizes, so a fixed seed pins
the cloud byte for byte. Draw order is fixed by construction and
never depends on dict iteration or threading.

Noise convention: "noise sigma" is the expected total displacement.
Each coordinate receives Gaussian noise with standard deviation
sigma / sqrt(n), so E[|noise|^2] = sigma^2 regardless of the ambient
dimension. The pinned intersection point itself stays exact; there is
no point in blurring the one coordinate the detector is aimed at.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    InfeasibleSpec,
    OffManifold,
    UnknownSingularPoint,
)
from .geometry import PointCloud, projective_from_vector

FLAT_PATCH = "flatpatch"
CROSSING_LINES = "crossinglines"
SUBSPACE_UNION = "union"
CONE = "cone"
SPHERE_PATCH = "spherepatch"

KINDS = (FLAT_PATCH, CROSSING_LINES, SUBSPACE_UNION, CONE, SPHERE_PATCH)

_REJECTION_CAP = 200


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic cloud.

    kind: one of flatpatch, crossinglines, union, cone, spherepatch.
    n: ambient dimension.
    dims: intrinsic dimension per component (cone: dims[0] is the
        surface dimension, opening_angle sets its shape).
    samples: sample count per component.
    sigma: expected total noise displacement (see module docstring).
    seed: Philox seed; equal seeds give byte-identical clouds.
    radius: component radius (unit balls by default).
    min_angle: smallest allowed principal angle between subspaces of a
        union, in radians; enforced by rejection.
    opening_angle: cone half-angle in radians (cone kind only).
    include_center: append the exact intersection/apex point (union,
        crossinglines and cone kinds).
    """

    kind: str
    n: int
    dims: tuple
    samples: tuple
    sigma: float = 0.01
    seed: int = 0
    radius: float = 1.0
    min_angle: float = float(np.deg2rad(30.0))
    opening_angle: float = float(np.deg2rad(45.0))
    include_center: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InfeasibleSpec(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "samples", tuple(int(m) for m in self.samples))
        if len(self.dims) != len(self.samples):
            raise InfeasibleSpec("dims and samples must pair up")
        if any(d < 1 for d in self.dims) or any(m < 1 for m in self.samples):
            raise InfeasibleSpec("dims and samples must be positive")
        if any(d >= self.n for d in self.dims):
            raise InfeasibleSpec("component dimensions must be below ambient")
        if self.sigma < 0.0 or self.radius <= 0.0:
            raise InfeasibleSpec("need sigma >= 0 and radius > 0")


@dataclass(frozen=True)
class ConeFrame:
    axis: object  # ProjectivePoint
    opening_angle: float


@dataclass(frozen=True)
class ComponentCone:
    """Projectivized tangent data of one component at a singular point:
    a frame of basis directions for subspace components, or an axis
    plus opening angle for a cone."""

    frame: tuple = ()
    cone: Optional[ConeFrame] = None


@dataclass(frozen=True)
class GroundTruth:
    kind: str
    singular_points: tuple
    center_index: Optional[int]
    bases: tuple  # (n, D_j) orthonormal basis per component
    dims: tuple
    membership: np.ndarray = field(repr=False)  # -1 marks the pinned center
    sigma: float = 0.0
    radius: float = 1.0
    cone_frames: tuple = ()

    def interior_mask(self, points, margin=0.2):
        """Samples safely away from the outer boundary: within
        (1 - margin) * radius of the origin, pinned center excluded.
        Boundary points mimic singularities for purely local reasons,
        so assertions stay off them."""
        norms = np.sqrt(np.add.reduce(np.asarray(points) ** 2, axis=1))
        return (self.membership >= 0) & (norms <= (1.0 - margin) * self.radius)


def _orthonormal(rng, n, d):
    """QR-based random orthonormal basis with a deterministic sign fix."""
    g = rng.standard_normal((n, d))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def _min_principal_angle(b1, b2):
    s = np.linalg.svd(b1.T @ b2, compute_uv=False)
    c = min(1.0, float(s[0])) if s.size else 0.0
    return float(np.arccos(c))


def _ball_sample(rng, d, m, radius):
    """Uniform draws from the d-ball of the given radius."""
    g = rng.standard_normal((m, d))
    g /= np.sqrt(np.add.reduce(g * g, axis=1))[:, np.newaxis]
    t = rng.random(m) ** (1.0 / d)
    return g * (t * radius)[:, np.newaxis]


def _sphere_sample(rng, d, m, radius):
    g = rng.standard_normal((m, d + 1))
    g /= np.sqrt(np.add.reduce(g * g, axis=1))[:, np.newaxis]
    return g * radius


def generate(spec):
    """Build the cloud and its ground truth for a SynthSpec.

    Returns (PointCloud, GroundTruth). The pinned intersection point,
    when included, is the final row and carries membership -1.
    """
    rng = np.random.Generator(np.random.Philox(int(spec.seed)))
    n = int(spec.n)

    bases = []
    dims = list(spec.dims)
    cone_frames = []

    if spec.kind == CROSSING_LINES:
        if len(dims) != 2 or dims != [1, 1]:
            raise InfeasibleSpec("crossinglines is the two-line case: dims (1, 1)")
        e1 = np.zeros(n)
        e1[0] = 1.0
        e2 = np.zeros(n)
        e2[1] = 1.0
        bases = [e1[:, np.newaxis], e2[:, np.newaxis]]
    elif spec.kind in (FLAT_PATCH, SPHERE_PATCH):
        if len(dims) != 1:
            raise InfeasibleSpec(f"{spec.kind} takes exactly one component")
        width = dims[0] + 1 if spec.kind == SPHERE_PATCH else dims[0]
        if width > n:
            raise InfeasibleSpec("component does not fit the ambient space")
        bases = [_orthonormal(rng, n, width)]
    elif spec.kind == CONE:
        if len(dims) != 1:
            raise InfeasibleSpec("cone takes exactly one component")
        if not (0.0 < spec.opening_angle < np.pi / 2.0):
            raise InfeasibleSpec("cone opening angle must lie in (0, pi/2)")
        surf = dims[0]  # surface dimension: axis direction + (surf-1)-sphere
        if surf < 2 or surf + 1 > n:
            raise InfeasibleSpec("cone surface needs 2 <= dim, dim + 1 <= n")
        frame = _orthonormal(rng, n, surf + 1)
        bases = [frame]
        cone_frames = [
            ConeFrame(
                axis=projective_from_vector(frame[:, 0]),
                opening_angle=float(spec.opening_angle),
            )
        ]
    elif spec.kind == SUBSPACE_UNION:
        if sum(dims) > n and len(dims) > 1:
            # not fatal by itself, but separation gets hopeless fast;
            # the rejection loop below is the actual arbiter
            pass
        for attempt in range(_REJECTION_CAP):
            candidate = [_orthonormal(rng, n, d) for d in dims]
            ok = True
            for a in range(len(candidate)):
                for b in range(a + 1, len(candidate)):
                    if (
                        _min_principal_angle(candidate[a], candidate[b])
                        < spec.min_angle
                    ):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                bases = candidate
                break
        else:
            raise InfeasibleSpec(
                f"could not place {len(dims)} subspaces with principal angles"
                f" >= {np.rad2deg(spec.min_angle):.0f} deg in R^{n}"
                f" after {_REJECTION_CAP} attempts"
            )

    rows = []
    membership = []
    for j, (d, m) in enumerate(zip(dims, spec.samples)):
        if spec.kind == SPHERE_PATCH:
            coords = _sphere_sample(rng, d, m, spec.radius)
            rows.append(coords @ bases[j].T)
        elif spec.kind == CONE:
            frame = bases[j]
            axis, equator = frame[:, 0], frame[:, 1:]
            c = equator.shape[1]  # equator sphere dimension is c - 1
            u = rng.standard_normal((m, c))
            u /= np.sqrt(np.add.reduce(u * u, axis=1))[:, np.newaxis]
            t = rng.random(m) ** (1.0 / d) * spec.radius
            direction = (
                np.cos(spec.opening_angle) * axis[np.newaxis, :]
                + np.sin(spec.opening_angle) * (u @ equator.T)
            )
            rows.append(direction * t[:, np.newaxis])
        else:
            coords = _ball_sample(rng, d, m, spec.radius)
            rows.append(coords @ bases[j].T)
        membership.extend([j] * m)

    points = np.vstack(rows)
    if spec.sigma > 0.0:
        points = points + rng.standard_normal(points.shape) * (
            spec.sigma / np.sqrt(n)
        )

    singular = spec.kind in (CROSSING_LINES, SUBSPACE_UNION, CONE)
    center_index = None
    if singular and spec.include_center:
        points = np.vstack([points, np.zeros((1, n))])
        membership.append(-1)
        center_index = points.shape[0] - 1

    membership = np.asarray(membership, dtype=np.int64)
    membership.setflags(write=False)
    truth = GroundTruth(
        kind=spec.kind,
        singular_points=(np.zeros(n),) if singular else (),
        center_index=center_index,
        bases=tuple(bases),
        dims=tuple(dims),
        membership=membership,
        sigma=float(spec.sigma),
        radius=float(spec.radius),
        cone_frames=tuple(cone_frames),
    )
    return PointCloud(points), truth


def _subspace_residual(x, basis):
    proj = basis @ (basis.T @ x)
    return float(np.sqrt(np.add.reduce((x - proj) ** 2)))


def oracle_dimension(truth, point, scale=None):
    """Analytic local dimension at a point of the generated cloud.

    On one component: that component's intrinsic dimension. At a
    recorded singular point: the tuple of all component dimensions,
    because no single power law holds there (callers assert on the
    instability, not on a number). The scale argument exists for
    interface symmetry; exact subspace truth does not depend on it.

    Tolerance: a point belongs to a component when it sits within
    3 * sigma + 1e-9 of the component's surface.
    """
    x = np.asarray(point, dtype=np.float64)
    tol = 3.0 * truth.sigma + 1e-9
    norm = float(np.sqrt(np.add.reduce(x * x)))

    if truth.singular_points and norm <= tol and len(truth.dims) >= 1:
        if truth.kind in (CROSSING_LINES, SUBSPACE_UNION):
            return tuple(sorted(truth.dims))
        if truth.kind == CONE:
            return tuple(truth.dims)

    residuals = []
    for j, basis in enumerate(truth.bases):
        if truth.kind == SPHERE_PATCH:
            inplane = basis @ (basis.T @ x)
            r = float(np.sqrt(np.add.reduce(inplane * inplane)))
            res = float(
                np.hypot(
                    _subspace_residual(x, basis), r - truth.radius
                )
            )
        elif truth.kind == CONE:
            frame = truth.cone_frames[j]
            res_plane = _subspace_residual(x, basis)
            # basis column 0 is the exact axis; the projectivized
            # frame.axis is grid-snapped and too coarse for tol at
            # sigma = 0
            axial = abs(float(x @ basis[:, 0]))
            if norm < 1e-15:
                angle_gap = 0.0
            else:
                c = min(1.0, axial / norm)
                angle_gap = abs(float(np.arccos(c)) - frame.opening_angle)
            res = float(np.hypot(res_plane, norm * np.sin(angle_gap)))
        else:
            res = _subspace_residual(x, basis)
        residuals.append(res)

    best = int(np.argmin(residuals))
    if residuals[best] > tol:
        raise OffManifold(
            f"point is {residuals[best]:.3g} from the nearest component,"
            f" beyond tolerance {tol:.3g}"
        )
    return float(truth.dims[best])


def oracle_tangent_cone(truth, s):
    """Projectivized tangent data of each component at singular point s.

    Subspace components yield their basis directions as a frame (one
    projective point for a line, a reference frame for planes and up).
    A cone component yields its axis and opening angle. Raises
    UnknownSingularPoint when s is not a recorded singular point.
    """
    s = np.asarray(s, dtype=np.float64)
    hit = any(
        float(np.sqrt(np.add.reduce((s - sp) ** 2))) <= 1e-9
        for sp in truth.singular_points
    )
    if not hit:
        raise UnknownSingularPoint("no recorded singular point at this location")
    out = []
    for j, basis in enumerate(truth.bases):
        if truth.kind == CONE:
            out.append(ComponentCone(cone=truth.cone_frames[j]))
        else:
            frame = tuple(
                projective_from_vector(basis[:, c])
                for c in range(basis.shape[1])
            )
            out.append(ComponentCone(frame=frame))
    return out
