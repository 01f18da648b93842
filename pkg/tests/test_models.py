from fractions import Fraction

import pytest

from drlab.coeff import GaussianRational as GR
from drlab.diffpoly import LocalFunctional, TruncationPolicy, parse
from drlab.drtype import build_hierarchy, verify_dr_type
from drlab.errors import DrlabError
from drlab.models import (
    FrobeniusData, MODELS, genus0_densities, genus1_correction, get_model, model_from_json, rank1_coefficients,
    rank1_seed, spin_grading, _bdiv, _bmul, _badd,
)
from drlab.operators import Metric

I = GR(0, 1)


def jets(*pairs):
    return pairs


def test_spin_seed_constants():
    s3 = get_model("3spin").seed.density
    assert s3.coefficient(jets((2, 2), (2, 2)), eps=4) == Fraction(1, 432)
    s4 = get_model("4spin").seed.density
    assert s4.coefficient(jets((3, 0)), eps=2, hbar=1) == GR(0, Fraction(-1, 1280))
    expected = parse("1/2 * u[1,0]^2 * u[2,0] + 1/36 * u[2,0]^4", 2, s3.policy)
    assert s3.dispersionless() == expected


@pytest.mark.parametrize("r", [3, 4])
def test_spin_homogeneity(r):
    weight = spin_grading(r)
    m = get_model(f"{r}spin")
    assert {weight(k) for k in m.seed.density.keys()} == {2 * r + 2}


def test_spin_frobenius_data():
    for name in ("3spin", "4spin", "trivial"):
        assert get_model(name).frobenius.check()[0]


def test_rank1_undeformed():
    m = rank1_seed((), 1)
    d = m.seed.density
    expected = parse("1/6*u[1,0]^3 - 1/24*eps^2*u[1,1]^2 - 1/24*I*hbar*u[1,0]", 1, d.policy)
    assert m.seed == LocalFunctional(expected)
    assert d == expected


def test_rank1_genus_two_hbar_coefficient():
    for s1 in (Fraction(1), Fraction(-2, 3), Fraction(5)):
        d = rank1_seed((s1,), 2).seed.density
        # c (i hbar)^2 u_2^2 = -c hbar^2 u_2^2
        assert -d.coefficient(jets((1, 2), (1, 2)), hbar=2) == -Fraction(2, 5) * s1 ** 3


@pytest.mark.parametrize("s", [(), (1,), (1, 1), (2, 3, 5), (Fraction(1, 2), -1, 4)])
def test_rank1_quantum_relation(s):
    co = rank1_coefficients(s)
    A, B, C, Q = co["A"], co["B"], co["C"], co["Q"]
    lhs = _bmul({(0, 0): Fraction(7)}, _bmul(A, Q))
    rhs = _badd(_bmul({(0, 0): Fraction(10)}, _bmul(B, B)), _bmul({(0, 1): Fraction(1)}, C), -1)
    assert lhs == rhs
    d = rank1_seed(s, 3).seed.density
    got = d.coefficient(jets((1, 3), (1, 3)), hbar=3)
    assert got == GR(Q.get((0, 3), 0)) * I ** 3


def test_inexact_division_raises():
    with pytest.raises(ArithmeticError):
        _bdiv({(0, 1): Fraction(1)}, {(1, 0): Fraction(1)})


@pytest.mark.parametrize("s", [(), (1,)])
def test_rank1_wrong_q_is_rejected(s):
    # Q enters the relation 7 A Q = 10 B^2 - y C multiplied by A, so the mismatch shows at genus 4
    pol = TruncationPolicy(4)
    m = rank1_seed(s, 3)
    seed = LocalFunctional(m.seed.density.with_policy(pol))
    assert verify_dr_type(seed, m.eta, 2, pol).passed
    bad = seed + LocalFunctional(parse("eps^6 * u[1,3]^2", 1, pol) / 1000)
    report = verify_dr_type(bad, m.eta, 2, pol)
    assert not report.passed
    assert "eps^8" in report.failures()[0].witness


def test_genus1_spin3_and_trivial():
    m = get_model("3spin")
    corr = genus1_correction(m.frobenius)
    assert corr.density.euler_apply(2) == parse("-1/12*I*hbar*u[1,0]", 2, m.policy)
    m = get_model("trivial")
    assert genus1_correction(m.frobenius).density.euler_apply(2) == parse("-1/24*I*hbar*u[1,0]", 1, m.policy)


@pytest.mark.parametrize("name", ["trivial", "3spin", "4spin"])
def test_genus1_matches_each_seed(name):
    m = get_model(name)
    predicted = genus1_correction(m.frobenius).density.euler_apply(2)
    assert predicted == m.seed.density.filter(lambda k: k[0] == 0 and k[1] == 1)


def test_genus1_g_function_term():
    pol = TruncationPolicy(2)
    F = parse("1/6*u[1,0]^3", 1, pol)
    for s in (Fraction(1), Fraction(3, 7)):
        fd = FrobeniusData(F, parse(f"{s}*u[1,0]", 1, pol), Metric.identity(1))
        d = genus1_correction(fd).density
        assert d.coefficient(jets((1, 1), (1, 1)), hbar=1) == I * (s / 2)
        assert d.coefficient(jets((1, 0)), hbar=1) == I * Fraction(-1, 24)


def test_genus1_descendants_match_spin3_hierarchy():
    m = get_model("3spin")
    t = build_hierarchy(m.seed, m.eta, 2, m.policy)
    g0 = genus0_densities(m.frobenius, 2)
    for a in (1, 2):
        for d in (0, 1, 2):
            predicted = genus1_correction(m.frobenius, ("Gad", a, d), genus0=g0)
            actual = t.density(a, d).filter(lambda k: k[0] == 0 and k[1] == 1)
            assert predicted == LocalFunctional(actual), (a, d)


def test_registry_and_json():
    assert set(MODELS) == {"trivial", "3spin", "4spin", "3spin-perturbed"}
    m = get_model("rank1(1,1)")
    assert m.params["s"] == [1, 1]
    back = model_from_json(get_model("3spin").dumps(), TruncationPolicy(2))
    assert back.seed == get_model("3spin").seed and back.eta == Metric.antidiagonal(2)
    with pytest.raises(DrlabError):
        get_model("5spin")
    with pytest.raises(DrlabError):
        model_from_json({"rank": 1})


@pytest.mark.parametrize("name, p_max", [("trivial", 2), ("3spin", 2), ("4spin", 2), ("rank1(1,1)", 2)])
def test_every_shipped_model_is_dr_type(name, p_max):
    m = get_model(name)
    report = verify_dr_type(m.seed, m.eta, p_max, m.policy)
    assert report.passed, report.to_text()
