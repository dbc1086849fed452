"""Covector fields on blocks, glued fibres, and glued sections.

Over a block point the cotangent-like fibre is the coordinate covector
space R^dim.  Over a locus point it is the subspace of compatible pairs
(a, b) in R^dim1 x R^dim2 cut out by matching the tangential pullbacks of
the two sides: rows of the relation matrix are sampled tangent directions
of the locus (all of them for an open subdomain, the parametrization
directions for a submanifold, none for a point set).

Glued sections are stored through their block splits (s1, s2); evaluation
over the locus solves for fibre coordinates in the compatible-pair basis
and rejects pairs that escape the subspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (DimensionMismatch, IncompatiblePair, IncompatibleSections,
                     NotAFunctionOnGluedSpace, OutsideDomain, RankAmbiguous)
from .fields import evaluate_vector, evaluate_vector_array
from .numerics import EPS_NUM, SVD_CUTOFF_REL, DiffEngine
from .space import BLOCK1, BLOCK2, LOCUS, EuclideanBlock, GluedPoint, GluedSpace

BLOCK1_FIBRE, BLOCK2_FIBRE, PAIR_FIBRE = "block1", "block2", "pair"


@dataclass(frozen=True)
class BlockForm:
    """Covector field on a block: components in the coordinate coframe."""

    block: EuclideanBlock
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.block.dim:
            raise DimensionMismatch(
                f"form has {len(self.components)} components on a dim-{self.block.dim} block")

    def __call__(self, coords) -> list:
        return evaluate_vector(self.components, coords)

    def at(self, coords) -> np.ndarray:
        if not self.block.contains(list(coords)):
            raise OutsideDomain(f"{tuple(coords)} outside {self.block.name}")
        return evaluate_vector_array(self.components, coords)

    def __add__(self, other: "BlockForm") -> "BlockForm":
        comps = tuple(lambda x, f=f, g=g: f(x) + g(x)
                      for f, g in zip(self.components, other.components))
        return BlockForm(self.block, comps)

    def scaled(self, h: Callable) -> "BlockForm":
        """Product h * form for a scalar field h."""
        return BlockForm(self.block,
                         tuple(lambda x, f=f: h(x) * f(x) for f in self.components))

    def scaled_const(self, c: float) -> "BlockForm":
        return BlockForm(self.block,
                         tuple(lambda x, f=f, c=c: c * f(x) for f in self.components))


def zero_block_form(block: EuclideanBlock) -> BlockForm:
    return BlockForm(block, tuple((lambda x: 0.0) for _ in range(block.dim)))


def coordinate_form(block: EuclideanBlock, axis: int) -> BlockForm:
    comps = tuple((lambda x, i=i, a=axis: 1.0 if i == a else 0.0)
                  for i in range(block.dim))
    return BlockForm(block, comps)


def differential_block(block: EuclideanBlock, h: Callable, engine: DiffEngine) -> BlockForm:
    """Differential of a scalar field: components are the gradient."""
    comps = tuple(
        (lambda x, i=i: engine.gradient(h, x, within=block.contains)[i])
        for i in range(block.dim))
    return BlockForm(block, comps)


def pullback(form: BlockForm, mapping: Callable, source: EuclideanBlock,
             engine: DiffEngine, jacobian: Optional[Callable] = None) -> BlockForm:
    """Pullback along a smooth map into the form's block.

    Component i at u is sum_j J[j][i](u) * omega_j(mapping(u)).
    """
    target_dim = form.block.dim

    def component(u, i):
        y = mapping(list(u))
        if len(y) != target_dim:
            raise DimensionMismatch("map target dimension does not match the form's block")
        w = form(y)
        if jacobian is not None:
            rows = jacobian(list(u))
        else:
            rows = engine.jacobian(mapping, u)
        total = 0.0
        for j in range(target_dim):
            total = total + rows[j][i] * w[j]
        return total

    comps = tuple((lambda u, i=i: component(u, i)) for i in range(source.dim))
    return BlockForm(source, comps)


@dataclass(frozen=True)
class CompatResult:
    """Outcome of a sampled compatibility check; falsy results carry a witness."""

    ok: bool
    max_residual: float = 0.0
    witness: Optional[dict] = None
    samples: int = 0

    def __bool__(self):
        return self.ok


def check_forms_compatible(space: GluedSpace, omega1: BlockForm,
                           omega2: BlockForm) -> CompatResult:
    """Do the two block forms agree through the locus pullbacks?

    Point-set loci admit only locally constant plots, so every pair is
    compatible; otherwise the tangential pullbacks must match at the
    sampled locus points.
    """
    if space.locus.kind == "point_set":
        return CompatResult(True, 0.0, None, 0)
    worst = 0.0
    witness = None
    n = 0
    for y in space.locus_points():
        fr = space.locus_frames(y)
        lhs = fr.t1.T @ omega1.at(y)
        rhs = fr.t2.T @ omega2.at(fr.image)
        res = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
        n += 1
        if res > worst:
            worst = res
            witness = {"point": list(y), "pullback1": lhs.tolist(),
                       "pullback2": rhs.tolist(), "residual": res}
    if worst > EPS_NUM:
        return CompatResult(False, worst, witness, n)
    return CompatResult(True, worst, None, n)


@dataclass(frozen=True)
class GluedForm:
    """Pair of block forms passing the compatibility check."""

    space: GluedSpace
    omega1: BlockForm
    omega2: BlockForm

    def __post_init__(self):
        result = check_forms_compatible(self.space, self.omega1, self.omega2)
        if not result:
            raise IncompatibleSections(f"forms incompatible: {result.witness}")


@dataclass(frozen=True)
class FibreModel:
    """Concrete basis model of the glued fibre at one point.

    ``basis`` rows are basis vectors: length dim1 / dim2 over block points,
    length dim1+dim2 (compatible pairs) over locus points.
    """

    point: GluedPoint
    kind: str
    basis: np.ndarray
    d1: int
    d2: int

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def block1_part(self, components: np.ndarray) -> np.ndarray:
        """rho1: block-1 covector carried by an element's fibre coordinates."""
        if self.kind == BLOCK1_FIBRE:
            return components
        if self.kind == PAIR_FIBRE:
            return components @ self.basis[:, : self.d1]
        raise IncompatiblePair("rho1 undefined over block-2-only points")

    def block2_part(self, components: np.ndarray) -> np.ndarray:
        if self.kind == BLOCK2_FIBRE:
            return components
        if self.kind == PAIR_FIBRE:
            return components @ self.basis[:, self.d1:]
        raise IncompatiblePair("rho2 undefined over block-1-only points")


@dataclass(frozen=True)
class FibreElement:
    fibre: FibreModel
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float).reshape(-1)
        if comp.shape[0] != self.fibre.dim:
            raise DimensionMismatch(
                f"element has {comp.shape[0]} components in a dim-{self.fibre.dim} fibre")
        object.__setattr__(self, "components", comp)


def relation_matrix(space: GluedSpace, y) -> np.ndarray:
    """Linear relations cutting the compatible pairs out of R^(d1+d2)."""
    fr = space.locus_frames(y)
    d1, d2 = space.block1.dim, space.block2.dim
    k = fr.t1.shape[1]
    if k == 0:
        return np.zeros((0, d1 + d2))
    return np.hstack([fr.t1.T, -fr.t2.T])


@dataclass(frozen=True)
class PullbackOperators:
    """Restriction/pullback maps onto a locus point, in locus coordinates.

    Locus covectors are represented through the tangent frame: all of
    R^dim1 for an open locus, parameter components for a submanifold, the
    zero space for a point set.  ``f_star`` is linear on each fibre; for an
    open locus it is the transpose-Jacobian action of the gluing map.
    """

    space: GluedSpace
    point: tuple

    def _frames(self):
        return self.space.locus_frames(self.point)

    def i_star(self, a) -> np.ndarray:
        """Restriction of a block-1 covector to the locus."""
        fr = self._frames()
        return fr.t1.T @ np.asarray(a, dtype=float)

    def j_star(self, b) -> np.ndarray:
        """Restriction of a block-2 covector to the glued image."""
        fr = self._frames()
        if self.space.locus.kind == "open_subdomain":
            return np.asarray(b, dtype=float)
        return fr.t2.T @ np.asarray(b, dtype=float)

    def f_star(self, c) -> np.ndarray:
        """Pullback from the image side to the locus side."""
        if self.space.locus.kind == "open_subdomain":
            fr = self._frames()
            return fr.t2.T @ np.asarray(c, dtype=float)
        return np.asarray(c, dtype=float)

    def i_star_lambda(self, e: "FibreElement") -> np.ndarray:
        return self.i_star(rho1(e))

    def fj_star_lambda(self, e: "FibreElement") -> np.ndarray:
        return self.f_star(self.j_star(rho2(e)))


def nullspace_basis(matrix: np.ndarray) -> np.ndarray:
    """Orthonormal nullspace rows under the relative singular-value cutoff.

    Rank decisions falling inside the cutoff band fail loudly rather than
    guess (RankAmbiguous).
    """
    rows, cols = matrix.shape
    if rows == 0:
        return np.eye(cols)
    _, sing, vt = np.linalg.svd(matrix)
    smax = sing[0] if sing.size else 0.0
    if smax == 0.0:
        return np.eye(cols)
    cut = SVD_CUTOFF_REL * smax
    for s in sing:
        if 0.1 * cut < s < 10.0 * cut:
            raise RankAmbiguous(
                f"singular value {s:.3e} inside the cutoff band around {cut:.3e}")
    rank = int(np.sum(sing > cut))
    basis = vt[rank:]
    # canonical sign: first significant entry of each basis vector positive
    out = []
    for v in basis:
        idx = int(np.argmax(np.abs(v) > 1e-12))
        if v[idx] < 0:
            v = -v
        out.append(v)
    return np.asarray(out).reshape(-1, cols)


def compute_fibre(space: GluedSpace, point: GluedPoint) -> FibreModel:
    """Fibre of the glued cotangent-like bundle at a point.

    Block-only points carry the block fibre; locus points carry the
    nullspace of the sampled compatibility relations.  Results are memoized
    on the space (fibres are pure functions of the point).
    """
    space.require_hypotheses()
    cache = space.__dict__.setdefault("_fibre_cache", {})
    key = (point.region, point.coords)
    hit = cache.get(key)
    if hit is not None:
        return hit
    d1, d2 = space.block1.dim, space.block2.dim
    if point.region == BLOCK1:
        fibre = FibreModel(point, BLOCK1_FIBRE, np.eye(d1), d1, d2)
    elif point.region == BLOCK2:
        fibre = FibreModel(point, BLOCK2_FIBRE, np.eye(d2), d1, d2)
    else:
        rel = relation_matrix(space, point.coords)
        basis = np.eye(d1 + d2) if rel.shape[0] == 0 else nullspace_basis(rel)
        fibre = FibreModel(point, PAIR_FIBRE, basis, d1, d2)
    cache[key] = fibre
    return fibre


def rho1(element: FibreElement) -> np.ndarray:
    return element.fibre.block1_part(element.components)


def rho2(element: FibreElement) -> np.ndarray:
    return element.fibre.block2_part(element.components)


def pair_residual(fibre: FibreModel, a, b) -> tuple:
    """Least-squares coordinates of (a, b) in the pair basis and the residual."""
    target = np.concatenate([np.asarray(a, float).reshape(-1),
                             np.asarray(b, float).reshape(-1)])
    comps, *_ = np.linalg.lstsq(fibre.basis.T, target, rcond=None)
    res = float(np.max(np.abs(fibre.basis.T @ comps - target)))
    return comps, res


def rho_pair_inverse(fibre: FibreModel, a, b, tol: float = EPS_NUM) -> FibreElement:
    """Element of the locus fibre with the given block parts."""
    if fibre.kind != PAIR_FIBRE:
        raise IncompatiblePair("rho_pair_inverse needs a locus fibre")
    comps, res = pair_residual(fibre, a, b)
    scale = 1.0 + float(np.max(np.abs(np.concatenate([np.atleast_1d(a), np.atleast_1d(b)]))))
    if res > tol * scale:
        raise IncompatiblePair(
            f"pair escapes the compatible subspace at {fibre.point.coords} "
            f"(residual {res:.3e})")
    return FibreElement(fibre, comps)


class LambdaSection:
    """Section of the glued bundle, stored through its block splits."""

    def __init__(self, space: GluedSpace, s1: BlockForm, s2: BlockForm):
        self.space = space
        self.s1 = s1
        self.s2 = s2

    def at(self, point: GluedPoint) -> FibreElement:
        fibre = compute_fibre(self.space, point)
        if point.region == BLOCK1:
            return FibreElement(fibre, self.s1.at(point.coords))
        if point.region == BLOCK2:
            return FibreElement(fibre, self.s2.at(point.coords))
        a = self.s1.at(point.coords)
        b = self.s2.at(point.coords2)
        # derived sections (brackets, covariant derivatives) carry the
        # engine's derivative error into their locus values
        return rho_pair_inverse(fibre, a, b,
                                tol=self.space.engine.config.membership_tol)

    def __add__(self, other: "LambdaSection") -> "LambdaSection":
        return LambdaSection(self.space, self.s1 + other.s1, self.s2 + other.s2)

    def scaled_const(self, c: float) -> "LambdaSection":
        return LambdaSection(self.space, self.s1.scaled_const(c), self.s2.scaled_const(c))


def split_section(s: LambdaSection) -> tuple:
    return s.s1, s.s2


def assemble_section(space: GluedSpace, s1: BlockForm, s2: BlockForm) -> LambdaSection:
    """Assemble block sections into a glued section, checking locus compatibility."""
    space.require_hypotheses()
    for y in space.locus_points():
        point = GluedPoint(LOCUS, y, space.map_forward(y))
        fibre = compute_fibre(space, point)
        a = s1.at(y)
        b = s2.at(point.coords2)
        _, res = pair_residual(fibre, a, b)
        scale = 1.0 + float(max(np.max(np.abs(a)), np.max(np.abs(b))))
        if res > EPS_NUM * scale:
            raise IncompatibleSections(
                f"sections disagree over locus point {y} (residual {res:.3e})")
    return LambdaSection(space, s1, s2)


@dataclass(frozen=True)
class GluedFunction:
    """Scalar function on the glued space given by a compatible block pair."""

    space: GluedSpace
    h1: Callable
    h2: Callable

    def validate(self):
        for y in self.space.locus_points():
            v1 = float(self.h1(list(y)))
            v2 = float(self.h2(list(self.space.map_forward(y))))
            if abs(v1 - v2) > EPS_NUM * (1.0 + abs(v1) + abs(v2)):
                raise NotAFunctionOnGluedSpace(
                    f"h1({y}) = {v1} but h2(f({y})) = {v2}")
        return self

    def value(self, point: GluedPoint) -> float:
        if point.region == BLOCK2:
            return float(self.h2(list(point.coords)))
        if point.region == BLOCK1:
            return float(self.h1(list(point.coords)))
        return 0.5 * float(self.h1(list(point.coords))) \
            + 0.5 * float(self.h2(list(point.coords2)))


def differential_glued(space: GluedSpace, h: GluedFunction,
                       engine: Optional[DiffEngine] = None) -> LambdaSection:
    """Differential of a glued function, by the three-case rule.

    Off the locus this is the block differential; over the locus it is the
    compatible pair of both block differentials (membership is automatic
    for genuine glued functions and still verified numerically).
    """
    space.require_hypotheses()
    h.validate()
    eng = engine or space.engine
    d1 = differential_block(space.block1, h.h1, eng)
    d2 = differential_block(space.block2, h.h2, eng)
    return LambdaSection(space, d1, d2)


def vanishing_at_point(form: BlockForm, plots: Sequence, engine: DiffEngine) -> float:
    """Test-oracle for vanishing forms on a single block.

    Evaluates the pullback of the form along centered plots at the center
    and returns the worst magnitude; a form vanishes at the base point when
    this is ~0 over a generating family of plots.
    """
    worst = 0.0
    for plot in plots:
        rows = engine.jacobian(plot.mapping, list(plot.basepoint))
        w = form(plot.mapping(list(plot.basepoint)))
        for i in range(plot.domain_dim):
            total = 0.0
            for j in range(form.block.dim):
                total += float(rows[j][i]) * float(w[j])
            worst = max(worst, abs(total))
    return worst
