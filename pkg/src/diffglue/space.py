"""The model category: Euclidean blocks glued along a diffeomorphism.

Blocks are open subsets of R^n with the standard smooth structure.  A glued
space identifies a locus Y inside block 1 with its image f(Y) inside block 2,
and every point of the result falls into exactly one of three regions:
block-1-only, the locus, or block-2-only.  The locus comes in three kinds --
a finite point set, an open subdomain, or a parametrized submanifold -- which
determine how much tangential information survives at the seam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (HypothesisNotAsserted, LocusOutsideBlock, NotADiffeomorphism,
                     NotInImage, OutsideDomain, ValidationError)
from .numerics import EPS_DOM, EPS_NUM, DiffConfig, DiffEngine, SamplePlan

BLOCK1, LOCUS, BLOCK2 = "block1", "locus", "block2"


@dataclass(frozen=True)
class EuclideanBlock:
    """Open subset of R^dim described by a membership predicate."""

    dim: int
    contains: Callable[[Sequence[float]], bool]
    seed_points: tuple
    name: str = "block"

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"{self.name}: dim must be >= 1")
        object.__setattr__(self, "seed_points",
                           tuple(tuple(float(c) for c in p) for p in self.seed_points))
        if not self.seed_points:
            raise ValidationError(f"{self.name}: needs at least one seed point")
        for p in self.seed_points:
            if len(p) != self.dim:
                raise ValidationError(f"{self.name}: seed point {p} has wrong dimension")
            if not self.contains(p):
                raise ValidationError(f"{self.name}: seed point {p} outside domain")
            # openness probe: an eps ball around each seed must stay inside
            for i in range(self.dim):
                for s in (+EPS_DOM, -EPS_DOM):
                    probe = list(p)
                    probe[i] += s
                    if not self.contains(probe):
                        raise ValidationError(
                            f"{self.name}: domain not open at seed {p} (axis {i})")


@dataclass(frozen=True)
class PointSetLocus:
    points: tuple

    kind = "point_set"

    def __post_init__(self):
        object.__setattr__(self, "points",
                           tuple(tuple(float(c) for c in p) for p in self.points))


@dataclass(frozen=True)
class OpenSubdomainLocus:
    contains: Callable[[Sequence[float]], bool]
    sample_points: tuple

    kind = "open_subdomain"

    def __post_init__(self):
        object.__setattr__(self, "sample_points",
                           tuple(tuple(float(c) for c in p) for p in self.sample_points))


@dataclass(frozen=True)
class SubmanifoldLocus:
    """Locus parametrized by phi: R^k -> block-1 coordinates, k < dim1."""

    param_dim: int
    chart: Callable
    invert: Callable          # right inverse of chart, used for membership
    param_samples: tuple

    kind = "submanifold"

    def __post_init__(self):
        object.__setattr__(self, "param_samples",
                           tuple(tuple(float(c) for c in p) for p in self.param_samples))


@dataclass(frozen=True)
class GluingMap:
    """Diffeomorphism from the locus onto its image in block 2.

    ``extends_globally`` marks maps whose forward/inverse formulas remain
    valid on the whole block; the verification suites use that to push
    block-1 test data through f when building compatible families.
    """

    forward: Callable
    inverse: Callable
    jacobian: Optional[Callable] = None
    extends_globally: bool = False


@dataclass(frozen=True)
class HypothesisFlags:
    pullback_equality_asserted: bool = False
    omega_diffeology_equality_asserted: bool = False

    @property
    def asserted(self) -> bool:
        return self.pullback_equality_asserted and self.omega_diffeology_equality_asserted


@dataclass(frozen=True)
class GluedPoint:
    """Point of the glued space, tagged by region.

    Locus points carry block-1 coordinates in ``coords`` and the image
    coordinates under f in ``coords2``.
    """

    region: str
    coords: tuple
    coords2: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if self.coords2 is not None:
            object.__setattr__(self, "coords2", tuple(float(c) for c in self.coords2))


@dataclass(frozen=True)
class Plot:
    """Parametrized map from R^domain_dim into a block or glued space."""

    domain_dim: int
    mapping: Callable
    basepoint: tuple = ()


@dataclass(frozen=True)
class LocusFrames:
    """Tangential data of the locus at one point.

    ``t1`` has shape (dim1, k): columns span the locus tangent directions in
    block-1 coordinates; ``t2`` (dim2, k) are their pushforwards through f.
    Pullbacks of covectors onto the locus act by the transposes.
    """

    point: tuple
    image: tuple
    t1: np.ndarray
    t2: np.ndarray


class GluedSpace:
    """Two Euclidean blocks glued along a diffeomorphism of a locus."""

    def __init__(self, block1, block2, locus, f, flags, engine=None, plan=None):
        self.block1 = block1
        self.block2 = block2
        self.locus = locus
        self.f = f
        self.flags = flags
        self.engine = engine or DiffEngine(DiffConfig())
        self.plan = plan or SamplePlan()

    # -- hypotheses ------------------------------------------------------
    def require_hypotheses(self):
        if not self.flags.asserted:
            raise HypothesisNotAsserted(
                "pullback-equality and omega-diffeology-equality flags must both be "
                "asserted before gluing-dependent operations")

    # -- locus geometry ----------------------------------------------------
    def locus_points(self) -> list:
        """Sampled locus points in block-1 coordinates."""
        if self.locus.kind == "point_set":
            pts = list(self.locus.points)
        elif self.locus.kind == "open_subdomain":
            pts = list(self.locus.sample_points)
        else:
            pts = [tuple(self.locus.chart(list(t))) for t in self.locus.param_samples]
        return pts[: max(self.plan.locus_count, 1)] if len(pts) > self.plan.locus_count else pts

    def locus_contains(self, coords) -> bool:
        if self.locus.kind == "point_set":
            return any(_close(coords, p) for p in self.locus.points)
        if self.locus.kind == "open_subdomain":
            return bool(self.locus.contains(coords))
        t = self.locus.invert(list(coords))
        back = self.locus.chart(list(t))
        return _close(back, coords)

    def map_forward(self, y) -> tuple:
        return tuple(float(v) for v in self.f.forward(list(y)))

    def map_inverse(self, z) -> tuple:
        return tuple(float(v) for v in self.f.inverse(list(z)))

    def f_jacobian(self, y) -> np.ndarray:
        """Jacobian of f at a locus point (dim2 x dim1)."""
        if self.f.jacobian is not None:
            return np.asarray(self.f.jacobian(list(y)), dtype=float)
        return self.engine.jacobian_array(self.f.forward, list(y))

    def locus_frames(self, y) -> LocusFrames:
        d1, d2 = self.block1.dim, self.block2.dim
        fy = self.map_forward(y)
        if self.locus.kind == "point_set":
            t1 = np.zeros((d1, 0))
            t2 = np.zeros((d2, 0))
        elif self.locus.kind == "open_subdomain":
            t1 = np.eye(d1)
            t2 = self.f_jacobian(y)
        else:
            # jacobian rows are d(chart_j)/dt_i, so the array itself has the
            # tangent directions as columns
            t = self.locus.invert(list(y))
            comp = lambda params: self.f.forward(self.locus.chart(params))
            k = self.locus.param_dim
            t1 = self.engine.jacobian_array(self.locus.chart, list(t)).reshape(d1, k)
            t2 = self.engine.jacobian_array(comp, list(t)).reshape(d2, k)
        return LocusFrames(tuple(y), fy, t1, t2)

    # -- sampling ----------------------------------------------------------
    def block_samples(self, which: int) -> list:
        """Off-locus interior sample coordinates for one block."""
        block = self.block1 if which == 1 else self.block2
        pts = []
        seeds = block.seed_points
        lo = [min(s[i] for s in seeds) - 1.0 for i in range(block.dim)]
        hi = [max(s[i] for s in seeds) + 1.0 for i in range(block.dim)]
        base = seeds[0]
        for axis in range(block.dim):
            for v in np.linspace(lo[axis], hi[axis], self.plan.per_axis):
                p = list(base)
                p[axis] = float(v)
                if not block.contains(p):
                    continue
                if which == 1 and self.locus_contains(p):
                    continue
                if which == 2 and self.in_glued_image(p):
                    continue
                pts.append(tuple(p))
        return pts

    def in_glued_image(self, z) -> bool:
        """Is a block-2 coordinate in f(Y)?"""
        try:
            y = self.map_inverse(z)
        except Exception:
            return False
        if len(y) != self.block1.dim:
            return False
        if not self.locus_contains(y):
            return False
        return _close(self.map_forward(y), z)

    def region_samples(self) -> dict:
        return {
            BLOCK1: [classify_point(self, 1, p) for p in self.block_samples(1)],
            LOCUS: [classify_point(self, 1, y) for y in self.locus_points()],
            BLOCK2: [classify_point(self, 2, p) for p in self.block_samples(2)],
        }

    def probe_sequences(self) -> list:
        """Geometric point sequences approaching each sampled locus point.

        Each entry is (locus_point, [approach points as GluedPoints]).  The
        approach stays inside block 1; for open subdomain loci the interior
        of Y cannot be reached from its complement, so the sequence may run
        inside the locus itself (degenerating to a block-smoothness probe).
        """
        out = []
        block1_pts = self.block_samples(1)
        for y in self.locus_points():
            target = None
            if block1_pts:
                arr = np.asarray(block1_pts, dtype=float)
                dists = np.linalg.norm(arr - np.asarray(y), axis=1)
                target = arr[int(np.argmin(dists))]
            else:
                target = np.asarray(self.block1.seed_points[0], dtype=float)
            d = target - np.asarray(y, dtype=float)
            norm = float(np.linalg.norm(d))
            if norm < EPS_NUM:
                continue
            d = d / norm
            r0 = min(1.0, norm / 2.0)
            seq = []
            for j in range(1, self.plan.probe_steps + 1):
                p = np.asarray(y) + (r0 * self.plan.probe_ratio ** j) * d
                p = [float(v) for v in p]
                if self.block1.contains(p):
                    seq.append(classify_point(self, 1, p))
            if seq:
                out.append((classify_point(self, 1, y), seq))
        return out


def _close(a, b, tol: float = EPS_NUM) -> bool:
    return max(abs(float(x) - float(y)) for x, y in zip(a, b)) <= tol


def default_flags(locus) -> HypothesisFlags:
    """Point-set loci assert the hypotheses automatically: both pullback
    spaces are zero, so the standing conditions hold trivially."""
    if locus.kind == "point_set":
        return HypothesisFlags(True, True)
    return HypothesisFlags(False, False)


def structural_hypothesis_check(space: GluedSpace) -> bool:
    """Sufficient structural check for the standing hypotheses.

    Point-set loci: trivially true.  Open-subdomain loci glued along a
    diffeomorphism: the pullback of coordinate differentials is surjective
    when the Jacobian is invertible at the sampled locus points, which
    suffices.  Submanifold loci are not decided structurally.
    """
    if space.locus.kind == "point_set":
        return True
    if space.locus.kind == "open_subdomain":
        for y in space.locus_points():
            j = space.f_jacobian(y)
            if j.shape[0] != j.shape[1]:
                return False
            if abs(np.linalg.det(j)) <= 1e-10:
                return False
        return True
    return False


def build_glued_space(block1, block2, locus, f, flags=None,
                      engine=None, plan=None) -> GluedSpace:
    """Validate the gluing data and assemble a GluedSpace.

    Checks locus containment, diffeomorphism round-trips, Jacobian
    invertibility probes, and the hypothesis flags.
    """
    if flags is None:
        flags = default_flags(locus)
    space = GluedSpace(block1, block2, locus, f, flags, engine=engine, plan=plan)

    locus_pts = space.locus_points()
    for y in locus_pts:
        if len(y) != block1.dim:
            raise LocusOutsideBlock(f"locus point {y} has wrong dimension")
        if not block1.contains(list(y)):
            raise LocusOutsideBlock(f"locus point {y} outside block 1")
        z = space.map_forward(y)
        if len(z) != block2.dim:
            raise NotADiffeomorphism(f"f({y}) has wrong dimension")
        if not block2.contains(list(z)):
            raise LocusOutsideBlock(f"f({y}) = {z} outside block 2")
        back = space.map_inverse(z)
        if not _close(back, y):
            raise NotADiffeomorphism(f"inverse round-trip fails at {y}: got {back}")
        again = space.map_forward(back)
        if not _close(again, z):
            raise NotADiffeomorphism(f"forward round-trip fails at f({y})")

    if locus.kind == "open_subdomain":
        for y in locus_pts:
            j = space.f_jacobian(y)
            if j.shape != (block2.dim, block1.dim) or j.shape[0] != j.shape[1]:
                raise NotADiffeomorphism("open-subdomain gluing needs square Jacobian")
            if abs(np.linalg.det(j)) <= 1e-10:
                raise NotADiffeomorphism(f"Jacobian of f singular at locus point {y}")
    elif locus.kind == "submanifold":
        k = locus.param_dim
        if k >= block1.dim:
            raise ValidationError("submanifold parameter count must be < block dim")
        for y in locus_pts:
            frames = space.locus_frames(y)
            if np.linalg.matrix_rank(frames.t1, tol=1e-10) < k:
                raise ValidationError(f"parametrization Jacobian rank-deficient at {y}")
            if np.linalg.matrix_rank(frames.t2, tol=1e-10) < k:
                raise NotADiffeomorphism(f"pushforward frame rank-deficient at {y}")

    if not flags.asserted:
        raise HypothesisNotAsserted(
            "gluing hypotheses not asserted; pass HypothesisFlags(True, True) "
            "(point-set loci assert them automatically)")
    return space


def classify_point(space: GluedSpace, which: int, coords) -> GluedPoint:
    """Classify tagged block coordinates into the three-region decomposition.

    Block-1 coordinates in Y and block-2 coordinates in f(Y) land on the
    same locus point (block-2 input is pulled back through the inverse).
    """
    coords = tuple(float(c) for c in coords)
    if which == 1:
        if not space.block1.contains(list(coords)):
            raise OutsideDomain(f"{coords} outside block 1")
        if space.locus_contains(coords):
            return GluedPoint(LOCUS, coords, space.map_forward(coords))
        return GluedPoint(BLOCK1, coords)
    if which == 2:
        if not space.block2.contains(list(coords)):
            raise OutsideDomain(f"{coords} outside block 2")
        if space.in_glued_image(coords):
            y = space.map_inverse(coords)
            return GluedPoint(LOCUS, y, coords)
        return GluedPoint(BLOCK2, coords)
    raise ValueError("which must be 1 or 2")


def embed(space: GluedSpace, which: str, coords) -> GluedPoint:
    """Standard inductions: i1-tilde covers block 1, i2 covers block 2."""
    if which == "i1_tilde":
        return classify_point(space, 1, coords)
    if which == "i2":
        return classify_point(space, 2, coords)
    raise ValueError("which must be 'i1_tilde' or 'i2'")


def unembed(space: GluedSpace, point: GluedPoint, which: str) -> tuple:
    """Inverse of the requested induction on its image."""
    if which == "i1_tilde":
        if point.region in (BLOCK1, LOCUS):
            return point.coords
        raise NotInImage("i1_tilde image excludes block-2-only points")
    if which == "i2":
        if point.region == BLOCK2:
            return point.coords
        if point.region == LOCUS:
            return point.coords2 if point.coords2 is not None else space.map_forward(point.coords)
        raise NotInImage("i2 image excludes block-1-only points")
    raise ValueError("which must be 'i1_tilde' or 'i2'")


def plot_differentiable(plot: Plot, engine: DiffEngine, params) -> bool:
    """Sampled differentiability probe for a plot at interior parameters."""
    try:
        fd = DiffEngine(DiffConfig(mode="central_fd", fd_step=1e-5))
        g1 = fd.jacobian_array(plot.mapping, list(params))
        fd2 = DiffEngine(DiffConfig(mode="central_fd", fd_step=5e-6))
        g2 = fd2.jacobian_array(plot.mapping, list(params))
    except Exception:
        return False
    return bool(np.max(np.abs(g1 - g2)) <= 1e-4 * (1.0 + np.max(np.abs(g1))))
