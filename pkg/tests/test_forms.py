"""Differentials, pullbacks, glued fibres, and section splitting."""

import numpy as np
import pytest

import diffglue as dg
from diffglue.forms import (coordinate_form, nullspace_basis,
                            relation_matrix, vanishing_at_point, zero_block_form)


def line(name="line", seeds=((1.5,), (-1.0,))):
    return dg.EuclideanBlock(1, lambda x: True, seeds, name)


def identity_map():
    return dg.GluingMap(lambda y: list(y), lambda z: list(z), extends_globally=True)


@pytest.fixture
def engine():
    return dg.DiffEngine(dg.DiffConfig())


@pytest.fixture
def cross():
    return dg.build_glued_space(line("a1"), line("a2"),
                                dg.PointSetLocus([(0.0,)]), identity_map())


@pytest.fixture
def halfline():
    locus = dg.OpenSubdomainLocus(lambda x: x[0] < 0.0, [(-1.0,), (-0.5,), (-2.0,)])
    return dg.build_glued_space(line("h1", ((1.0,), (-1.0,), (-2.5,))),
                                line("h2", ((1.0,), (-1.0,), (-2.5,))),
                                locus, identity_map(),
                                dg.HypothesisFlags(True, True))


@pytest.fixture
def plane_axis():
    plane = lambda n: dg.EuclideanBlock(2, lambda x: True,
                                        [(0.5, 1.0), (-1.0, -0.5)], n)
    locus = dg.SubmanifoldLocus(1, lambda t: [t[0], 0.0], lambda x: [x[0]],
                                [(-1.0,), (0.3,), (1.2,)])
    return dg.build_glued_space(plane("p1"), plane("p2"), locus, identity_map(),
                                dg.HypothesisFlags(True, True))


# -- differentials -----------------------------------------------------------

def test_differential_square(engine):
    b = line()
    form = dg.differential_block(b, lambda x: x[0] ** 2, engine)
    assert form.at((3.0,)) == pytest.approx([6.0])


def test_differential_constant(engine):
    form = dg.differential_block(line(), lambda x: 7.0, engine)
    assert form.at((2.0,)) == pytest.approx([0.0])


def test_differential_xy_cross_checked(engine):
    # h(x,y) = xy: gradient (y, x); dual values cross-checked against fd
    plane = dg.EuclideanBlock(2, lambda x: True, [(1.0, 2.0)], "p")
    h = lambda x: x[0] * x[1]
    form = dg.differential_block(plane, h, engine)
    assert form.at((1.0, 2.0)) == pytest.approx([2.0, 1.0])
    fd = dg.DiffEngine(dg.DiffConfig("central_fd"))
    assert fd.gradient_array(h, [1.0, 2.0]) == pytest.approx([2.0, 1.0], abs=1e-6)


# -- pullbacks ---------------------------------------------------------------

def test_pullback_linear_map(engine):
    target, source = line("t"), line("s")
    dx = coordinate_form(target, 0)
    pulled = dg.pullback(dx, lambda u: [2.0 * u[0]], source, engine)
    assert pulled.at((0.7,)) == pytest.approx([2.0])


def test_pullback_constant_map_is_zero(engine):
    target, source = line("t"), line("s")
    form = dg.BlockForm(target, ((lambda x: 1.0 + x[0] ** 2),))
    pulled = dg.pullback(form, lambda u: [4.0], source, engine)
    assert pulled.at((0.3,)) == pytest.approx([0.0])


def test_pullback_chain_rule(engine):
    # y dy pulled along x -> x^2 gives 2x^3 dx
    target, source = line("t"), line("s")
    ydy = dg.BlockForm(target, ((lambda y: y[0]),))
    pulled = dg.pullback(ydy, lambda u: [u[0] ** 2], source, engine)
    for x in (0.5, -1.2, 2.0):
        assert pulled.at((x,)) == pytest.approx([2.0 * x ** 3])


def test_pullback_functoriality(engine):
    # pullback(pullback(w, F), G) = pullback(w, F o G) at sampled points
    target, mid, source = line("t"), line("m"), line("s")
    w = dg.BlockForm(target, ((lambda y: 1.0 + y[0] ** 2),))
    F = lambda u: [3.0 * u[0] + 1.0]
    G = lambda v: [v[0] ** 2]
    two_step = dg.pullback(dg.pullback(w, F, mid, engine), G, source, engine)
    one_step = dg.pullback(w, lambda v: F(G(v)), source, engine)
    for x in (0.4, -0.9, 1.5):
        assert two_step.at((x,)) == pytest.approx(one_step.at((x,)), abs=1e-9)


def test_pullback_dimension_mismatch(engine):
    target, source = line("t"), line("s")
    dx = coordinate_form(target, 0)
    with pytest.raises(dg.DimensionMismatch):
        dg.pullback(dx, lambda u: [u[0], 0.0], source, engine).at((0.5,))


# -- compatibility of forms ----------------------------------------------------

def test_forms_compatible_point_locus_always(cross):
    w1 = dg.BlockForm(cross.block1, ((lambda x: 1.0 + x[0]),))
    w2 = dg.BlockForm(cross.block2, ((lambda x: -3.0),))
    assert dg.check_forms_compatible(cross, w1, w2)


def test_constant_plot_pullback_vanishes(engine, cross):
    # oracle behind the point-locus rule: forms evaluate to zero on
    # constant plots
    w = dg.BlockForm(cross.block1, ((lambda x: 1.0 + x[0] ** 2),))
    plots = [dg.Plot(1, lambda u: [0.0], (0.0,)), dg.Plot(2, lambda u: [0.0], (0.0, 0.0))]
    assert vanishing_at_point(w, plots, engine) == pytest.approx(0.0)


def test_forms_compatible_halfline(halfline):
    dx1 = coordinate_form(halfline.block1, 0)
    dx2 = coordinate_form(halfline.block2, 0)
    assert dg.check_forms_compatible(halfline, dx1, dx2)
    doubled = dx2.scaled_const(2.0)
    res = dg.check_forms_compatible(halfline, dx1, doubled)
    assert not res
    assert res.witness is not None and "point" in res.witness


def test_forms_compatible_plane_axis(plane_axis):
    dy1 = coordinate_form(plane_axis.block1, 1)
    dx2 = coordinate_form(plane_axis.block2, 0)
    dy2 = coordinate_form(plane_axis.block2, 1)
    # dy pulls back to 0 along the axis; dx pulls back to dt
    assert not dg.check_forms_compatible(plane_axis, dy1, dx2)
    assert dg.check_forms_compatible(plane_axis, dy1, dy2.scaled_const(0.0))


# -- fibres ---------------------------------------------------------------------

def test_fibre_dims_cross(cross):
    p1 = dg.classify_point(cross, 1, (1.0,))
    assert dg.compute_fibre(cross, p1).dim == 1
    p0 = dg.classify_point(cross, 1, (0.0,))
    fib = dg.compute_fibre(cross, p0)
    assert fib.dim == 2
    assert fib.basis == pytest.approx(np.eye(2))


def test_fibre_halfline_diagonal(halfline):
    # relation matrix [1, -1]: nullspace spanned by (1,1)
    p = dg.classify_point(halfline, 1, (-1.0,))
    rel = relation_matrix(halfline, p.coords)
    assert rel == pytest.approx(np.array([[1.0, -1.0]]))
    fib = dg.compute_fibre(halfline, p)
    assert fib.dim == 1
    v = fib.basis[0]
    assert v[0] == pytest.approx(v[1])


def test_fibre_dim_law_plane_axis(plane_axis):
    p = dg.classify_point(plane_axis, 1, (0.3, 0.0))
    fib = dg.compute_fibre(plane_axis, p)
    rel = relation_matrix(plane_axis, p.coords)
    assert fib.dim == 4 - np.linalg.matrix_rank(rel) == 3
    assert np.max(np.abs(rel @ fib.basis.T)) < 1e-12


def test_nullspace_rank_ambiguity():
    with pytest.raises(dg.RankAmbiguous):
        nullspace_basis(np.array([[1.0, 0.0], [0.0, 1e-8]]))


def test_compatibility_subspace_is_linear(halfline):
    # sampled closure under linear combinations
    p = dg.classify_point(halfline, 1, (-0.5,))
    fib = dg.compute_fibre(halfline, p)
    rel = relation_matrix(halfline, p.coords)
    rng = np.random.default_rng(0)
    for _ in range(5):
        combo = rng.uniform(-2, 2, size=fib.dim) @ fib.basis
        assert np.max(np.abs(rel @ combo)) < 1e-12


# -- rho maps --------------------------------------------------------------------

def test_rho_cross_full_sum(cross):
    p = dg.classify_point(cross, 1, (0.0,))
    fib = dg.compute_fibre(cross, p)
    e = dg.rho_pair_inverse(fib, [3.0], [5.0])
    assert e.components == pytest.approx([3.0, 5.0])
    assert dg.rho1(e) == pytest.approx([3.0])
    assert dg.rho2(e) == pytest.approx([5.0])


def test_rho_halfline_diagonal(halfline):
    p = dg.classify_point(halfline, 1, (-1.0,))
    fib = dg.compute_fibre(halfline, p)
    e = dg.rho_pair_inverse(fib, [2.0], [2.0])
    assert dg.rho1(e) == pytest.approx([2.0])
    assert dg.rho2(e) == pytest.approx([2.0])
    with pytest.raises(dg.IncompatiblePair):
        dg.rho_pair_inverse(fib, [2.0], [3.0])


def test_rho_identity_on_block_points(cross):
    p = dg.classify_point(cross, 1, (2.0,))
    fib = dg.compute_fibre(cross, p)
    e = dg.FibreElement(fib, np.array([4.0]))
    assert dg.rho1(e) == pytest.approx([4.0])


def test_rho_consistency_roundtrip(halfline, plane_axis):
    rng = np.random.default_rng(1)
    for space, c in ((halfline, (-1.0,)), (plane_axis, (0.3, 0.0))):
        p = dg.classify_point(space, 1, c)
        fib = dg.compute_fibre(space, p)
        for _ in range(4):
            comps = rng.uniform(-1, 1, size=fib.dim)
            e = dg.FibreElement(fib, comps)
            back = dg.rho_pair_inverse(fib, dg.rho1(e), dg.rho2(e))
            assert back.components == pytest.approx(comps, abs=1e-9)


# -- sections ----------------------------------------------------------------------

def test_assemble_cross_constant(cross):
    one1 = dg.BlockForm(cross.block1, ((lambda x: 1.0),))
    one2 = dg.BlockForm(cross.block2, ((lambda x: 1.0),))
    s = dg.assemble_section(cross, one1, one2)
    p0 = dg.classify_point(cross, 1, (0.0,))
    assert s.at(p0).components == pytest.approx([1.0, 1.0])
    s1, s2 = dg.split_section(s)
    assert s1.at((0.5,)) == pytest.approx([1.0])


def test_assemble_halfline_mismatch_rejected(halfline):
    sx = dg.BlockForm(halfline.block1, ((lambda x: x[0]),))
    sx2 = dg.BlockForm(halfline.block2, ((lambda x: x[0]),))
    shifted = dg.BlockForm(halfline.block2, ((lambda x: x[0] + 1.0),))
    dg.assemble_section(halfline, sx, sx2)
    with pytest.raises(dg.IncompatibleSections):
        dg.assemble_section(halfline, sx, shifted)


def test_zero_section_splits_to_zero(halfline):
    s = dg.assemble_section(halfline, zero_block_form(halfline.block1),
                            zero_block_form(halfline.block2))
    p = dg.classify_point(halfline, 1, (-1.0,))
    assert s.at(p).components == pytest.approx([0.0])


# -- glued differential ---------------------------------------------------------------

def test_differential_glued_critical_point(cross, engine):
    h = dg.GluedFunction(cross, lambda x: x[0] ** 2, lambda z: z[0] ** 2)
    dh = dg.differential_glued(cross, h, engine)
    p0 = dg.classify_point(cross, 1, (0.0,))
    assert dh.at(p0).components == pytest.approx([0.0, 0.0])


def test_differential_glued_identity_pair(cross, engine):
    h = dg.GluedFunction(cross, lambda x: x[0], lambda z: z[0])
    dh = dg.differential_glued(cross, h, engine)
    p0 = dg.classify_point(cross, 1, (0.0,))
    assert dh.at(p0).components == pytest.approx([1.0, 1.0])


def test_differential_glued_halfline(halfline, engine):
    h = dg.GluedFunction(halfline, lambda x: x[0] ** 2, lambda z: z[0] ** 2)
    dh = dg.differential_glued(halfline, h, engine)
    p = dg.classify_point(halfline, 1, (-1.0,))
    e = dh.at(p)
    assert dg.rho1(e) == pytest.approx([-2.0])
    assert dg.rho2(e) == pytest.approx([-2.0])


def test_differential_glued_rejects_non_functions(halfline, engine):
    h = dg.GluedFunction(halfline, lambda x: x[0], lambda z: z[0] + 1.0)
    with pytest.raises(dg.NotAFunctionOnGluedSpace):
        dg.differential_glued(halfline, h, engine)


def test_differential_linearity(halfline, engine):
    h = dg.GluedFunction(halfline, lambda x: x[0] ** 2, lambda z: z[0] ** 2)
    k = dg.GluedFunction(halfline, lambda x: 2.0 * x[0], lambda z: 2.0 * z[0])
    combo = dg.GluedFunction(halfline,
                             lambda x: 3.0 * h.h1(x) - 0.5 * k.h1(x),
                             lambda z: 3.0 * h.h2(z) - 0.5 * k.h2(z))
    d_combo = dg.differential_glued(halfline, combo, engine)
    dh = dg.differential_glued(halfline, h, engine)
    dk = dg.differential_glued(halfline, k, engine)
    for c in ((-1.0,), (0.5,)):
        p = dg.classify_point(halfline, 1, c)
        expect = 3.0 * dh.at(p).components - 0.5 * dk.at(p).components
        assert d_combo.at(p).components == pytest.approx(expect, abs=1e-9)


def test_leibniz_for_differential(halfline, engine):
    h1, k1 = lambda x: x[0] ** 2, lambda x: 1.0 + x[0]
    h = dg.GluedFunction(halfline, h1, h1)
    k = dg.GluedFunction(halfline, k1, k1)
    hk = dg.GluedFunction(halfline, lambda x: h1(x) * k1(x), lambda z: h1(z) * k1(z))
    d_hk = dg.differential_glued(halfline, hk, engine)
    dh = dg.differential_glued(halfline, h, engine)
    dk = dg.differential_glued(halfline, k, engine)
    for c in ((-1.5,), (0.7,)):
        p = dg.classify_point(halfline, 1, c)
        expect = h.value(p) * dk.at(p).components + k.value(p) * dh.at(p).components
        assert d_hk.at(p).components == pytest.approx(expect, abs=1e-9)


def test_glued_form_type_validates(halfline):
    dx1 = coordinate_form(halfline.block1, 0)
    dx2 = coordinate_form(halfline.block2, 0)
    dg.GluedForm(halfline, dx1, dx2)
    with pytest.raises(dg.IncompatibleSections):
        dg.GluedForm(halfline, dx1, dx2.scaled_const(2.0))


def test_pullback_operators(halfline, plane_axis):
    from diffglue.forms import PullbackOperators

    # open locus: f_star is the transpose-Jacobian action (identity here)
    ops = PullbackOperators(halfline, (-1.0,))
    assert ops.i_star([3.0]) == pytest.approx([3.0])
    assert ops.f_star(ops.j_star([2.0])) == pytest.approx([2.0])
    # linearity of f_star on the fibre
    rng = np.random.default_rng(3)
    for space, y in ((halfline, (-1.0,)), (plane_axis, (0.3, 0.0))):
        ops = PullbackOperators(space, y)
        u = rng.uniform(-1, 1, space.block2.dim)
        v = rng.uniform(-1, 1, space.block2.dim)
        lhs = ops.f_star(ops.j_star(2.0 * u - v))
        rhs = 2.0 * ops.f_star(ops.j_star(u)) - ops.f_star(ops.j_star(v))
        assert lhs == pytest.approx(rhs)
    # the membership criterion restated through the operators: elements of
    # the compatible fibre satisfy i*_L(e) = f*_L(j*_L(e))
    for space, c in ((halfline, (-0.5,)), (plane_axis, (1.2, 0.0))):
        p = dg.classify_point(space, 1, c)
        fib = dg.compute_fibre(space, p)
        ops = PullbackOperators(space, p.coords)
        for comp in np.eye(fib.dim):
            e = dg.FibreElement(fib, comp)
            assert ops.i_star_lambda(e) == pytest.approx(ops.fj_star_lambda(e),
                                                         abs=1e-12)
