import pytest
from hypothesis import given, settings, strategies as st

from drlab.diffpoly import DiffPoly, LocalFunctional, Ring, TruncationPolicy
from drlab.errors import IncompatibleError, InvalidTransformError
from drlab.operators import (
    HamiltonianOperator, Metric, MiuraTransform, hamiltonian_flow, miura_apply, miura_transform_operator,
    poisson_bracket,
)
from strategies import polys

P = TruncationPolicy(2)
R = Ring(1, P)
u, u1, u2, u3 = (R.u(1, k) for k in range(4))
eps = R.eps
K1 = HamiltonianOperator.eta_dx(Metric.identity(1), P)
F = LocalFunctional


def test_metric():
    m = Metric([[0, 1], [1, 0]])
    assert m.up(1, 2) == 1 and m.low(1, 1) == 0
    assert Metric.antidiagonal(3).low(1, 3) == 1
    with pytest.raises(ValueError):
        Metric([[1, 2], [3, 4]])


def test_bracket_examples():
    assert poisson_bracket(F(u ** 3 / 6), F(u * u / 2), K1).is_zero()
    assert poisson_bracket(F(u * u / 2), F(u * u / 2), K1).is_zero()
    assert poisson_bracket(F(u ** 3 / 6), F(u ** 4 / 24), K1).is_zero()
    assert not poisson_bracket(F(u ** 3), F(u * u2 * u2), K1).is_zero()


def test_flow_examples():
    assert hamiltonian_flow(u, F(u * u / 2), K1) == u1
    assert hamiltonian_flow(u, F(u ** 3 / 6), K1) == u * u1
    kdv = F(u ** 3 / 6 - eps ** 2 * u1 ** 2 / 24)
    assert hamiltonian_flow(u, kdv, K1) == u * u1 + eps ** 2 * u3 / 12


def test_miura_examples():
    assert miura_apply(u ** 3 + u1, MiuraTransform.identity(1, P)) == u ** 3 + u1
    P1 = TruncationPolicy(1)
    R1 = Ring(1, P1)
    c = 3
    M = MiuraTransform(1, {1: R1.u() + c * R1.eps ** 2 * R1.u(1, 2)}, P1)
    assert miura_apply(R1.u() ** 2 / 2, M) == R1.u() ** 2 / 2 + c * R1.eps ** 2 * R1.u() * R1.u(1, 2)
    M = MiuraTransform(1, {1: u + eps ** 2 * u2}, P)
    assert miura_apply(miura_apply(u ** 3, M), M, "inverse") == u ** 3


def test_miura_rejects_non_identity_leading_part():
    with pytest.raises(InvalidTransformError):
        MiuraTransform(1, {1: 2 * u}, P)


def test_miura_operator():
    M = MiuraTransform(1, {1: u + eps ** 2 * u2}, P)
    K = miura_transform_operator(K1, M)
    one = DiffPoly.const(1, 1, P)
    expected = HamiltonianOperator(1, {(1, 1): {1: one, 3: 2 * eps ** 2 * one, 5: eps ** 4 * one}}, P)
    assert K == expected
    assert miura_transform_operator(K1, MiuraTransform.identity(1, P)) == K1


def test_operator_json_round_trip():
    M = MiuraTransform(1, {1: u + eps ** 2 * u * u2}, P)
    K = miura_transform_operator(K1, M)
    assert HamiltonianOperator.from_json(K.to_json(), 1, P) == K


def test_incompatible_operands():
    K2 = HamiltonianOperator.eta_dx(Metric.identity(2), P)
    with pytest.raises(IncompatibleError):
        poisson_bracket(F(u), F(u), K2)


eta2 = Metric.antidiagonal(2)
K2 = HamiltonianOperator.eta_dx(eta2, P)
classical2 = polys(2, P, eh=False, max_terms=3)


@settings(max_examples=40, deadline=None)
@given(classical2, classical2)
def test_antisymmetry(f, g):
    assert poisson_bracket(F(f), F(g), K2) == -poisson_bracket(F(g), F(f), K2)


@settings(max_examples=25, deadline=None)
@given(polys(2, P, eh=False, max_terms=2, max_deg=2), polys(2, P, eh=False, max_terms=2, max_deg=3),
       polys(2, P, eh=False, max_terms=2, max_deg=2))
def test_jacobi(f, g, h):
    def pb(a, b):
        return poisson_bracket(a, b, K2)

    f, g, h = F(f), F(g), F(h)
    assert (pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))).is_zero()


@settings(max_examples=40, deadline=None)
@given(polys(2, P))
def test_quadratic_flow_is_translation(f):
    assert hamiltonian_flow(f, F(eta2.quadratic(P)), K2) == f.dx()


@settings(max_examples=20, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 3))
def test_miura_preserves_skew_adjointness(a, b, k):
    image = u + a * eps ** 2 * R.u(1, k) * u1 + b * eps ** 2 * u2 * u
    K = miura_transform_operator(K1, MiuraTransform(1, {1: image}, P))
    assert K.is_skew_adjoint()
