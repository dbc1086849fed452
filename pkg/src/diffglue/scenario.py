"""Scenario files: structured YAML documents describing a glued space,
its metrics and connections, numerics settings, and suite selection.

Maps, domains, and coefficient fields are named built-ins with coefficient
data; polynomial fields are coefficient maps keyed by comma-separated
monomial exponent tuples (``"2": 3.0`` is 3x^2 on a line, ``"1,1": 2.0``
is 2xy on a plane).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import yaml

from .errors import ParseError, ValidationError
from .fields import PolyField
from .metric import BlockMetric
from .connection import BlockConnection, koszul_solve, zero_connection
from .numerics import DiffConfig, DiffEngine, SamplePlan
from .space import (EuclideanBlock, GluedSpace, GluingMap, HypothesisFlags,
                    OpenSubdomainLocus, PointSetLocus, SubmanifoldLocus,
                    build_glued_space)

SUITE_CATALOGUE = (
    "fibres", "metric-gluing", "koszul", "leibniz", "symmetry",
    "metric-compat", "bracket-split", "covderiv-split", "torsion-split",
    "levi-civita-inheritance",
)


# -- poly / field parsing -----------------------------------------------------

def parse_poly(spec: dict, dim: int, where: str) -> PolyField:
    if not isinstance(spec, dict):
        raise ParseError(f"{where}: polynomial spec must be a mapping")
    coeffs = {}
    for key, val in spec.items():
        parts = str(key).replace(" ", "").split(",")
        try:
            exps = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise ParseError(f"{where}: bad exponent key {key!r}") from exc
        if len(exps) != dim:
            raise ParseError(f"{where}: exponent key {key!r} has wrong arity for dim {dim}")
        coeffs[exps] = float(val)
    return PolyField(dim, coeffs)


def parse_domain(spec: dict, dim: int, where: str) -> Callable:
    kind = spec.get("kind", "all")
    if kind == "all":
        return lambda x: True
    if kind == "below":
        axis, bound = int(spec.get("axis", 0)), float(spec["bound"])
        return lambda x, a=axis, b=bound: x[a] < b
    if kind == "above":
        axis, bound = int(spec.get("axis", 0)), float(spec["bound"])
        return lambda x, a=axis, b=bound: x[a] > b
    if kind == "interval":
        axis = int(spec.get("axis", 0))
        lo, hi = float(spec["lo"]), float(spec["hi"])
        return lambda x, a=axis, lo=lo, hi=hi: lo < x[a] < hi
    if kind == "box":
        bounds = [(float(lo), float(hi)) for lo, hi in spec["bounds"]]
        if len(bounds) != dim:
            raise ParseError(f"{where}: box bounds arity mismatch")
        return lambda x, bs=bounds: all(lo < v < hi for v, (lo, hi) in zip(x, bs))
    raise ParseError(f"{where}: unknown domain kind {kind!r}")


def _cbrt(v):
    return abs(v) ** (1.0 / 3.0) * (1.0 if v >= 0 else -1.0)


def parse_map(spec: dict, d1: int, d2: int, where: str) -> GluingMap:
    kind = spec.get("kind", "identity")
    if kind == "identity":
        if d1 != d2:
            raise ParseError(f"{where}: identity map needs equal block dims")
        return GluingMap(lambda y: list(y), lambda z: list(z),
                         jacobian=lambda y, d=d1: np.eye(d).tolist(),
                         extends_globally=True)
    if kind == "affine":
        mat = np.asarray(spec["matrix"], dtype=float)
        off = np.asarray(spec.get("offset", [0.0] * d2), dtype=float)
        if mat.shape != (d2, d1):
            raise ParseError(f"{where}: affine matrix must be {d2}x{d1}")
        inv = np.linalg.inv(mat) if d1 == d2 else None
        if inv is None:
            raise ParseError(f"{where}: affine gluing needs square matrix")

        def forward(y, m=mat, o=off):
            return [sum(m[j][i] * y[i] for i in range(len(y))) + o[j]
                    for j in range(m.shape[0])]

        def inverse(z, m=inv, o=off):
            return [sum(m[i][j] * (z[j] - o[j]) for j in range(len(z)))
                    for i in range(m.shape[0])]

        return GluingMap(forward, inverse, jacobian=lambda y, m=mat: m.tolist(),
                         extends_globally=True)
    if kind == "cubic":
        if d1 != 1 or d2 != 1:
            raise ParseError(f"{where}: cubic map is one-dimensional")
        return GluingMap(lambda y: [y[0] ** 3],
                         lambda z: [_cbrt(z[0])],
                         jacobian=lambda y: [[3.0 * y[0] ** 2]],
                         extends_globally=True)
    raise ParseError(f"{where}: unknown map kind {kind!r}")


def parse_locus(spec: dict, d1: int, where: str):
    kind = spec.get("kind")
    if kind == "point_set":
        return PointSetLocus(tuple(tuple(p) for p in spec.get("points", [])))
    if kind == "open_subdomain":
        dom = parse_domain(spec.get("domain", {}), d1, where + ".domain")
        samples = spec.get("sample_points")
        if not samples:
            raise ParseError(f"{where}: open_subdomain locus needs sample_points")
        return OpenSubdomainLocus(dom, tuple(tuple(p) for p in samples))
    if kind == "submanifold":
        chart_spec = spec.get("chart", {})
        if chart_spec.get("kind") != "axis_embed":
            raise ParseError(f"{where}: unknown chart kind")
        axes = [int(a) for a in chart_spec["axes"]]
        k = len(axes)

        def chart(t, axes=axes, d=d1):
            out = [0.0] * d
            for i, a in enumerate(axes):
                out[a] = t[i]
            return out

        def invert(x, axes=axes):
            return [x[a] for a in axes]

        samples = spec.get("param_samples")
        if not samples:
            raise ParseError(f"{where}: submanifold locus needs param_samples")
        return SubmanifoldLocus(k, chart, invert, tuple(tuple(p) for p in samples))
    raise ParseError(f"{where}: unknown locus kind {kind!r}")


def parse_block(spec: dict, name: str) -> EuclideanBlock:
    dim = int(spec["dim"])
    dom = parse_domain(spec.get("domain", {"kind": "all"}), dim, name + ".domain")
    seeds = spec.get("seed_points")
    if not seeds:
        raise ParseError(f"{name}: seed_points required")
    return EuclideanBlock(dim, dom, tuple(tuple(p) for p in seeds), name)


def parse_metric(spec: dict, block: EuclideanBlock, where: str) -> BlockMetric:
    raw = spec.get("entries")
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: metric needs an 'entries' mapping")
    d = block.dim
    polys: dict = {}
    for key, val in raw.items():
        i, j = (int(p) for p in str(key).replace(" ", "").split(","))
        polys[(i, j)] = parse_poly(val, d, f"{where}[{key}]")
    entries = []
    zero = PolyField.constant(d, 0.0)
    for i in range(d):
        row = []
        for j in range(d):
            p = polys.get((i, j)) or polys.get((j, i)) or zero
            row.append(lambda x, p=p: p(x))
        entries.append(tuple(row))
    return BlockMetric(block, tuple(entries))


def parse_connection(spec: dict, block: EuclideanBlock, where: str) -> BlockConnection:
    raw = spec.get("entries", {})
    d = block.dim
    polys = {}
    for key, val in raw.items():
        k, i, j = (int(p) for p in str(key).replace(" ", "").split(","))
        polys[(k, i, j)] = parse_poly(val, d, f"{where}[{key}]")
    zero = PolyField.constant(d, 0.0)

    def christoffel(x, polys=polys, zero=zero, d=d):
        return [[[polys.get((k, i, j), zero)(x) for j in range(d)]
                 for i in range(d)] for k in range(d)]

    return BlockConnection(block, christoffel)


# -- scenario ------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    raw: dict
    diff: DiffConfig
    plan: SamplePlan
    suites: tuple


@dataclass
class ScenarioContext:
    """Built objects of a scenario; glued objects are constructed lazily."""

    scenario: Scenario
    space: GluedSpace
    g1: BlockMetric
    g2: BlockMetric
    connection_kind: str
    n1_spec: Optional[BlockConnection]
    n2_spec: Optional[BlockConnection]
    engine: DiffEngine
    _n1: Optional[BlockConnection] = None
    _n2: Optional[BlockConnection] = None
    _glued_metric: object = None
    _glued_connection: object = None

    @property
    def nabla1(self) -> BlockConnection:
        if self._n1 is None:
            self._n1 = self.n1_spec if self.n1_spec is not None \
                else koszul_solve(self.g1, self.engine)
        return self._n1

    @property
    def nabla2(self) -> BlockConnection:
        if self._n2 is None:
            self._n2 = self.n2_spec if self.n2_spec is not None \
                else koszul_solve(self.g2, self.engine)
        return self._n2

    def glued_metric(self):
        from .metric import glue_metrics
        if self._glued_metric is None:
            self._glued_metric = glue_metrics(self.space, self.g1, self.g2)
        return self._glued_metric

    def glued_connection(self):
        from .connection import glue_connections
        if self._glued_connection is None:
            self._glued_connection = glue_connections(
                self.space, self.glued_metric(), self.nabla1, self.nabla2,
                self.engine)
        return self._glued_connection


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ParseError(f"{path}: invalid YAML{loc}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: scenario document must be a mapping")
    name = raw.get("name") or "scenario"
    diff_spec = raw.get("diff", {})
    diff = DiffConfig(mode=diff_spec.get("mode", "forward_dual"),
                      fd_step=float(diff_spec.get("fd_step", 1e-5)))
    s = raw.get("samples", {})
    plan = SamplePlan(per_axis=int(s.get("per_axis", 16)),
                      locus_count=int(s.get("locus_count", 8)),
                      probe_steps=int(s.get("probe_steps", 6)),
                      probe_ratio=float(s.get("probe_ratio", 0.5)),
                      seed=int(s.get("seed", 0)))
    suites = tuple(raw.get("suites") or SUITE_CATALOGUE)
    for su in suites:
        if su not in SUITE_CATALOGUE:
            raise ValidationError(f"unknown suite {su!r}; catalogue: {SUITE_CATALOGUE}")
    return Scenario(name, raw, diff, plan, suites)


def build_context(scenario: Scenario, mode: Optional[str] = None,
                  seed: Optional[int] = None) -> ScenarioContext:
    """Construct the space and block-level objects of a scenario."""
    raw = scenario.raw
    diff = scenario.diff if mode is None else DiffConfig(mode=mode,
                                                         fd_step=scenario.diff.fd_step)
    plan = scenario.plan if seed is None else SamplePlan(
        per_axis=scenario.plan.per_axis, locus_count=scenario.plan.locus_count,
        probe_steps=scenario.plan.probe_steps, probe_ratio=scenario.plan.probe_ratio,
        seed=seed)
    engine = DiffEngine(diff)
    sp = raw.get("space")
    if not isinstance(sp, dict):
        raise ParseError("scenario: missing 'space' section")
    block1 = parse_block(sp["block1"], "block1")
    block2 = parse_block(sp["block2"], "block2")
    locus = parse_locus(sp["locus"], block1.dim, "space.locus")
    gmap = parse_map(sp.get("map", {}), block1.dim, block2.dim, "space.map")
    flags_spec = sp.get("hypothesis_flags")
    flags = None
    if flags_spec is not None:
        flags = HypothesisFlags(
            bool(flags_spec.get("pullback_equality_asserted", False)),
            bool(flags_spec.get("omega_diffeology_equality_asserted", False)))
    space = build_glued_space(block1, block2, locus, gmap, flags,
                              engine=engine, plan=plan)

    mets = raw.get("metrics")
    if not isinstance(mets, dict) or "g1" not in mets or "g2" not in mets:
        raise ParseError("scenario: 'metrics' must define g1 and g2")
    g1 = parse_metric(mets["g1"], block1, "metrics.g1")
    g2 = parse_metric(mets["g2"], block2, "metrics.g2")

    conn = raw.get("connections", {"kind": "levi_civita"})
    kind = conn.get("kind", "levi_civita")
    n1_spec = n2_spec = None
    if kind == "explicit":
        n1_spec = parse_connection(conn.get("gamma1", {}), block1, "connections.gamma1")
        n2_spec = parse_connection(conn.get("gamma2", {}), block2, "connections.gamma2")
    elif kind == "flat":
        n1_spec, n2_spec = zero_connection(block1), zero_connection(block2)
    elif kind != "levi_civita":
        raise ParseError(f"connections: unknown kind {kind!r}")

    return ScenarioContext(scenario, space, g1, g2, kind, n1_spec, n2_spec, engine)


def fixture_path(name: str):
    from importlib import resources
    base = resources.files("diffglue") / "fixtures" / f"{name}.yaml"
    return base
