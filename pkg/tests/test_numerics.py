"""Dual-number arithmetic, gradients, and the dual/fd cross-check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffglue.errors import ModesDisagree, NonSmoothField, OutsideDomain, SingularGram
from diffglue.numerics import (DiffConfig, DiffEngine, DualScalar, SamplePlan,
                               exp, invert_matrix_generic, log, sqrt)

finite = st.floats(min_value=-10.0, max_value=10.0,
                   allow_nan=False, allow_infinity=False)


def d(v, p):
    return DualScalar(v, (p,))


@given(finite, finite, finite, finite)
def test_dual_product_rule(a, da, b, db):
    out = d(a, da) * d(b, db)
    assert out.value == pytest.approx(a * b)
    assert out.partials[0] == pytest.approx(a * db + da * b)


@given(finite, finite)
def test_dual_chain_rule_square(a, da):
    out = d(a, da) ** 2
    assert out.partials[0] == pytest.approx(2 * a * da)


@settings(max_examples=50)
@given(st.floats(min_value=0.1, max_value=5.0), finite)
def test_dual_quotient_and_log(a, da):
    out = 1.0 / d(a, da)
    assert out.partials[0] == pytest.approx(-da / a ** 2)
    out = log(d(a, da))
    assert out.partials[0] == pytest.approx(da / a)


def test_dual_exp_sqrt():
    x = d(0.7, 1.0)
    assert exp(x).value == pytest.approx(math.exp(0.7))
    assert exp(x).partials[0] == pytest.approx(math.exp(0.7))
    assert sqrt(d(4.0, 1.0)).partials[0] == pytest.approx(0.25)


def test_nested_duals_give_second_derivative():
    # f(x) = x^3: f''(2) = 12, via a dual whose partials are dual
    inner = DualScalar(2.0, (1.0,))
    outer = DualScalar(inner, (DualScalar(1.0, (0.0,)),))
    out = outer ** 3
    assert out.value.value == pytest.approx(8.0)
    assert out.partials[0].partials[0] == pytest.approx(12.0)


def test_gradient_cubic():
    eng = DiffEngine(DiffConfig())
    g = eng.gradient_array(lambda x: x[0] ** 3, [2.0])
    assert g[0] == pytest.approx(12.0)


def test_gradient_constant_is_zero():
    eng = DiffEngine(DiffConfig())
    assert np.all(eng.gradient_array(lambda x: 5.0, [1.0, 2.0]) == 0.0)


def test_gradient_two_modes_agree():
    # f(x, y) = x*y^2 at (1, 2): gradient (4, 4)
    f = lambda x: x[0] * x[1] ** 2
    dual = DiffEngine(DiffConfig("forward_dual")).gradient_array(f, [1.0, 2.0])
    fd = DiffEngine(DiffConfig("central_fd")).gradient_array(f, [1.0, 2.0])
    assert dual == pytest.approx([4.0, 4.0], abs=1e-12)
    assert np.max(np.abs(dual - fd)) < 1e-6


def test_fd_gradient_respects_domain_guard():
    eng = DiffEngine(DiffConfig("central_fd", fd_step=1e-2))
    with pytest.raises(OutsideDomain):
        eng.gradient(lambda x: x[0], [0.005], within=lambda x: x[0] > 0)


def test_fd_cross_check_passes_on_polynomials():
    eng = DiffEngine(DiffConfig())
    rep = eng.fd_cross_check(lambda x: 3 * x[0] ** 2 - x[0], [0.7])
    assert rep.max_discrepancy < 1e-8


def test_fd_cross_check_zero_field():
    eng = DiffEngine(DiffConfig())
    rep = eng.fd_cross_check(lambda x: 0.0, [0.3])
    assert rep.max_discrepancy == 0.0


def test_fd_cross_check_detects_kink():
    # |x - x0| with the kink half a step away: fd straddles it, dual does not
    eng = DiffEngine(DiffConfig())
    x0 = 0.5 + 0.5e-5
    with pytest.raises(ModesDisagree):
        eng.fd_cross_check(lambda x: abs(x[0] - x0), [0.5])


def test_nonsmooth_probe_in_fd_mode():
    eng = DiffEngine(DiffConfig("central_fd"))
    with pytest.raises(NonSmoothField):
        eng.gradient_checked(lambda x: abs(x[0] - (0.5 + 0.4e-5)), [0.5])
    out = eng.gradient_checked(lambda x: x[0] ** 2, [0.5])
    assert out[0] == pytest.approx(1.0, abs=1e-6)


def test_invert_matrix_generic_roundtrip():
    m = [[2.0, 1.0], [1.0, 2.0]]
    inv = invert_matrix_generic(m)
    assert np.asarray(inv) == pytest.approx(np.linalg.inv(m))


def test_invert_matrix_generic_dual_entries():
    # d/dx of 1/(1+x^2) at x=1 is -2x/(1+x^2)^2 = -0.5
    x = DualScalar(1.0, (1.0,))
    inv = invert_matrix_generic([[1.0 + x * x]])
    assert inv[0][0].value == pytest.approx(0.5)
    assert inv[0][0].partials[0] == pytest.approx(-0.5)


def test_invert_matrix_generic_singular():
    with pytest.raises(SingularGram):
        invert_matrix_generic([[1.0, 1.0], [1.0, 1.0]])


def test_config_validation():
    with pytest.raises(ValueError):
        DiffConfig(mode="backward")
    with pytest.raises(ValueError):
        DiffConfig(fd_step=0.0)
    with pytest.raises(ValueError):
        SamplePlan(per_axis=0)
    assert DiffConfig().suite_tol == 1e-10
    assert DiffConfig("central_fd").suite_tol == 1e-6
