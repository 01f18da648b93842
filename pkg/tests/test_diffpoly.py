from fractions import Fraction

import pytest
from hypothesis import given, settings

from drlab.diffpoly import (
    LocalFunctional, Ring, TruncationPolicy, antiderivative, functional_equal, integrate, key_degree, parse,
)
from drlab.errors import ExactnessError, IncompatibleError, ParseError, WeightResonanceError
from strategies import polys

R = Ring(1)
u, u1, u2, u3 = (R.u(1, k) for k in range(4))
eps, hbar = R.eps, R.hbar
R2 = Ring(2)
P2 = TruncationPolicy(2)


def test_dx_examples():
    assert u.dx() == u1
    assert (u * u).dx() == 2 * u * u1
    a, b = R2.u(1, 0), R2.u(2, 1)
    assert (R2.eps * a * b).dx() == R2.eps * (R2.u(1, 1) * b + a * R2.u(2, 2))


def test_dpartial_examples():
    assert (u ** 3 / 6).dpartial(1, 0) == u * u / 2
    assert (u * u1 ** 2).dpartial(1, 1) == 2 * u * u1
    assert (R2.hbar * R2.u(2, 2)).dpartial(1, 0).is_zero()


def test_var_deriv_examples():
    assert (u * u / 2).var_deriv(1) == u
    seed = u ** 3 / 6 - eps ** 2 * u1 ** 2 / 24
    assert seed.var_deriv(1) == u * u / 2 + eps ** 2 * u2 / 12
    assert (u * u1).var_deriv(1).is_zero()


def test_euler_examples():
    assert (eps ** 2 * u * u2).euler_apply(1) == 3 * eps ** 2 * u * u2
    v = R2.u(2, 0)
    res, obs = (v ** 4).euler_invert(2)
    assert res == v ** 4 / 2 and obs.is_zero()
    res, _ = (R2.hbar * R2.u(1, 0)).euler_invert(1)
    assert res == R2.hbar * R2.u(1, 0) / 2


def test_euler_resonance_is_reported():
    with pytest.raises(WeightResonanceError):
        (u * u).euler_invert(2)
    res, obs = (u * u + u ** 3).euler_invert(2, strict=False)
    assert obs == u * u and res == u ** 3


def test_antiderivative_examples():
    assert antiderivative(2 * u * u1) == u * u
    assert antiderivative(u1 * u2) == u1 ** 2 / 2
    assert antiderivative(u * u2 + u1 ** 2) == u * u1
    with pytest.raises(ExactnessError):
        antiderivative(u * u1 ** 2)


def test_functional_equality_examples():
    assert functional_equal(integrate(u * u1), integrate(R.zero()))
    assert functional_equal(integrate(u1 * u3), integrate(-u2 ** 2))
    assert not functional_equal(integrate(u * u), integrate(u ** 3))


def test_functional_keeps_constant_aside():
    F = LocalFunctional(u * u - R.i * hbar / 24)
    assert F.density == u * u
    assert F.constant == -R.i * hbar / 24


def test_truncation():
    R1 = Ring(1, TruncationPolicy(1))
    p = R1.eps ** 2 * R1.u() + R1.eps ** 3 * R1.u() + R1.hbar * R1.eps * R1.u()
    assert p == R1.eps ** 2 * R1.u()


def test_rank_mismatch():
    with pytest.raises(IncompatibleError):
        u + R2.u(1, 0)


def test_parse():
    p = parse("1/2 * u[1,0]^2 + 1/24 * eps^2 * u[1,2] - 1/24*I * hbar", 1)
    assert p == u * u / 2 + eps ** 2 * u2 / 24 - R.i * hbar / 24
    with pytest.raises(ParseError):
        parse("u[1,0] +* 2", 1)


def test_evaluate():
    p = u * u1 + 3 * u2 + eps
    assert p.evaluate({(1, 0): 2, (1, 1): Fraction(1, 2)}) == 1 + eps


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_var_deriv_kills_derivatives(f):
    for a in (1, 2):
        assert f.dx().var_deriv(a).is_zero()


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_antiderivative_inverts_dx(f):
    g = f.dx()
    assert g.antiderivative().dx() == g


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_text_round_trip(f):
    assert parse(str(f), 2, P2) == f


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_euler_round_trip(f):
    f = f.filter(lambda k: len(k[2]) + k[0] + 2 * k[1] != 3)
    assert f.euler_apply(3).euler_invert(3)[0] == f


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_dx_raises_differential_degree(f):
    degrees = {key_degree(k) for k in f.without_constant().keys()}
    assert {key_degree(k) for k in f.dx().keys()} <= {d + 1 for d in degrees}
    assert set(f.euler_apply(1).keys()) <= set(f.keys())


@settings(max_examples=60, deadline=None)
@given(polys(2, P2))
def test_dpartial_dx_commutation(f):
    for a in (1, 2):
        for k in range(4):
            lhs = f.dx().dpartial(a, k)
            rhs = f.dpartial(a, k).dx()
            if k:
                rhs = rhs + f.dpartial(a, k - 1)
            assert lhs == rhs
