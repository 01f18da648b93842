"""Canonical densities of rank-one local functionals and the standard form of deformations
of the Riemann hierarchy.

A rank-one monomial  c * u^a * u_{l_1} ... u_{l_n}  (l_i >= 1) is filed under the partition
(l_1 >= ... >= l_n).  Every functional has a unique density in which all partitions have
l_1 = l_2 (the set P0), apart from the derivative-free part.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
import json

from .coeff import bernoulli
from .diffpoly import DiffPoly, LocalFunctional, TruncationPolicy, encode, order_of
from .errors import DrlabError
from .models import rank1_seed


@total_ordering
@dataclass(frozen=True)
class Partition:
    parts: tuple

    def __post_init__(self):
        parts = tuple(sorted((int(p) for p in self.parts), reverse=True))
        if any(p < 1 for p in parts):
            raise ValueError("parts must be positive")
        object.__setattr__(self, "parts", parts)

    def __lt__(self, other):
        return self.parts < other.parts

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    @property
    def size(self):
        return sum(self.parts)

    @property
    def in_p0(self):
        return len(self.parts) >= 2 and self.parts[0] == self.parts[1]

    @property
    def in_pprime(self):
        return self.in_p0 and self.parts[-1] >= 2

    def monomial(self, policy=TruncationPolicy()):
        out = DiffPoly.const(1, 1, policy)
        for p in self.parts:
            out = out * DiffPoly.jet(1, 1, p, policy)
        return out

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


def partitions(n, max_part=None):
    """All partitions of n in decreasing lexicographic order."""
    max_part = n if max_part is None else max_part
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


def partition_of(jets):
    return tuple(sorted((order_of(v) for v in jets if order_of(v)), reverse=True))


def _reduce_order(terms, rank, policy):
    """Reduce the terms of one (eps, hbar) order to P0-form."""
    f = DiffPoly._make(rank, policy, dict(terms))
    while True:
        bad = {}
        for key in f.keys():
            lam = partition_of(key[2])
            if lam and not (len(lam) >= 2 and lam[0] == lam[1]):
                bad.setdefault(lam, []).append(key)
        if not bad:
            return f
        lam = max(bad)
        top = lam[0]
        v_top, v_low = encode(1, top), encode(1, top - 1)
        piece = {}
        for key in bad[lam]:
            e, h, jets = key
            rest = list(jets)
            rest.remove(v_top)
            m = rest.count(v_low)
            new = (e, h, tuple(sorted(rest + [v_low])))
            add = f._terms[key] * Fraction(1, m + 1)
            piece[new] = piece[new] + add if new in piece else add
        f = f - DiffPoly._make(rank, policy, piece).dx()


def canonical_density(F):
    """The unique representative of a rank-one functional whose partitions all lie in P0.

    Derivative-free terms are kept; constants are dropped.
    """
    d = F.density if isinstance(F, LocalFunctional) else F.without_constant()
    if d.rank != 1:
        raise DrlabError("canonical densities are defined for rank one")
    groups = {}
    for key, c in d.items():
        groups.setdefault(key[:2], {})[key] = c
    total = DiffPoly.zero(1, d.policy)
    for eh in sorted(groups):
        total = total + _reduce_order(groups[eh], 1, d.policy)
    return total


def standard_check(F):
    """Both conditions dF/du = 0 and d/du_x (delta F / delta u) = 0; returns (ok, witnesses)."""
    F = F if isinstance(F, LocalFunctional) else LocalFunctional(F)
    witness = {}
    du = F.dpartial(1)
    if not du.is_zero():
        witness["dF/du"] = str(du.density)
    second = F.var_deriv(1).dpartial(1, 1)
    if second:
        witness["d/du_x delta F/delta u"] = str(second)
    return not witness, witness


@dataclass
class StandardDensity:
    a0: Fraction
    alphas: dict  # genus -> {Partition: Fraction}

    def density(self, policy=TruncationPolicy()):
        u = DiffPoly.jet(1, 1, 0, policy)
        out = u ** 3 / 6 - (DiffPoly.jet(1, 1, 1, policy) ** 2).times_eps_hbar(eps=2).scale(self.a0 / 24)
        for g, table in self.alphas.items():
            for lam, c in table.items():
                out = out + lam.monomial(policy).times_eps_hbar(eps=2 * g).scale(c)
        return out


def standard_density_of(F):
    """Read a0 and the alpha coefficients off the canonical density of a standard deformation."""
    d = canonical_density(F)
    a0 = Fraction(0)
    alphas = {}
    for (e, h, jets), c in d.items():
        if h or e % 2:
            raise DrlabError("expected a classical density with even powers of eps")
        lam = partition_of(jets)
        if e == 0:
            continue
        if e == 2 and lam == (1, 1) and len(jets) == 2:
            a0 = -24 * c.re
            continue
        if len(jets) != len(lam) or not Partition(lam).in_pprime:
            raise DrlabError(f"term {c} eps^{e} {lam} is not of standard type")
        alphas.setdefault(e // 2, {})[Partition(lam)] = c.re
    return StandardDensity(a0, alphas)


# --- alpha coefficients from Hodge integrals ---------------------------------

def hodge_top_three(g):
    """int over M_g of lambda_g lambda_{g-1} lambda_{g-2}."""
    if g < 2:
        raise ValueError("g >= 2")
    f = 1
    for k in range(2, 2 * g - 1):
        f *= k
    return Fraction(1, 2 * f) * abs(bernoulli(2 * g - 2)) / (2 * g - 2) * abs(bernoulli(2 * g)) / (2 * g)


LAMBDA_5421 = Fraction(1, 766402560)


def alpha_dr(g, s):
    """The coefficient of eps^(2g) u_xx^g in the standard density of the rank-one hierarchy."""
    s = [Fraction(x) for x in s] + [Fraction(0)] * 4
    s1, s2, s3, s4 = s[:4]
    if g == 2:
        return -48 * s1 * hodge_top_three(2)
    if g == 3:
        return (-4032 * s1 ** 3 - 840 * s2) * hodge_top_three(3)
    if g == 4:
        return (-331776 * s1 ** 5 - 172800 * s1 ** 2 * s2 - 2520 * s3) * hodge_top_three(4)
    if g == 5:
        l3, l21 = hodge_top_three(5), LAMBDA_5421
        return (
            s1 ** 7 * (Fraction(207028224, 35) * l3 - Fraction(51757056, 5) * l21)
            + s1 ** 4 * s2 * (10782720 * l3 - 10782720 * l21)
            + s1 ** 2 * s3 * (943488 * l3 - 471744 * l21)
            - s4 * 3120 * l3
            + s1 * s2 ** 2 * (2246400 * l21 - 8985600 * l3)
        )
    raise DrlabError(f"alpha coefficients are available for 2 <= g <= 5, got {g}")


# --- reference standard density -----------------------------------------------
# genus -> partition -> {exponents of (s1, s2, s3, s4): coefficient}

_F = Fraction
THETA1_TABLE = {
    2: {(2, 2): {(1, 0, 0, 0): _F(-1, 120)}},
    3: {
        (2, 2, 2): {(3, 0, 0, 0): _F(-1, 360), (0, 1, 0, 0): _F(-1, 1728)},
        (3, 3): {(2, 0, 0, 0): _F(-1, 420)},
    },
    4: {
        (2, 2, 2, 2): {(5, 0, 0, 0): _F(-2, 525), (2, 1, 0, 0): _F(-1, 504), (0, 0, 1, 0): _F(-1, 34560)},
        (3, 3, 2): {(4, 0, 0, 0): _F(-11, 1400), (1, 1, 0, 0): _F(-11, 6720)},
        (4, 4): {(3, 0, 0, 0): _F(-1, 1260), (0, 1, 0, 0): _F(-1, 60480)},
    },
    5: {
        (2, 2, 2, 2, 2): {
            (7, 0, 0, 0): _F(-754, 67375), (4, 1, 0, 0): _F(-13, 1320), (2, 0, 1, 0): _F(-13, 52800),
            (1, 2, 0, 0): _F(-13, 22176), (0, 0, 0, 1): _F(-13, 10644480),
        },
        (3, 3, 2, 2): {
            (6, 0, 0, 0): _F(-58, 1375), (3, 1, 0, 0): _F(-7, 330), (1, 0, 1, 0): _F(-7, 26400),
            (0, 2, 0, 0): _F(-1, 3168),
        },
        (4, 4, 2): {(5, 0, 0, 0): _F(-71, 12600), (2, 1, 0, 0): _F(-1, 756), (0, 0, 1, 0): _F(-1, 276480)},
        (5, 5): {(4, 0, 0, 0): _F(-1, 3465), (1, 1, 0, 0): _F(-1, 66528)},
    },
}

THETA1_SOURCE = {
    1: "reference table, genus 1 (a0 = 1)",
    2: "reference table, genus 2",
    3: "reference table, genus 3",
    4: "reference table, genus 4",
    5: "reference table, genus 5 (line produced by an external computation)",
}


def theta1_coefficient(g, lam, s):
    s = [Fraction(x) for x in s] + [Fraction(0)] * 4
    poly = THETA1_TABLE.get(g, {}).get(tuple(lam), {})
    total = Fraction(0)
    for exps, c in poly.items():
        term = c
        for x, k in zip(s, exps):
            term *= x ** k
        total += term
    return total


@dataclass
class DiffReport:
    rows: list

    @property
    def passed(self):
        return all(r["expected"] == r["got"] for r in self.rows)

    def to_json(self):
        return {"passed": self.passed, "rows": self.rows}

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)

    def to_text(self):
        out = []
        for r in self.rows:
            flag = "ok " if r["expected"] == r["got"] else "BAD"
            out.append(f"{flag} {r['monomial']}: expected {r['expected']}, got {r['got']}  [{r['source']}]")
        return "\n".join(out)


def compare_dz_standard(s, g_max):
    """Compare the standard density of the rank-one hierarchy with the reference table.

    Part one canonicalizes the classical seed through genus min(g_max, 3) and compares
    every coefficient; part two compares alpha_dr(g, s) with the u_xx^g entries up to g_max.
    """
    if not 1 <= g_max <= 5:
        raise DrlabError(f"g_max must lie in 1..5, got {g_max}")
    s = tuple(Fraction(x) for x in s)
    depth = min(g_max, 3)
    seed = rank1_seed(s, depth).seed.density.classical()
    sd = standard_density_of(LocalFunctional(seed))
    rows = [{"monomial": "eps^2 u_x^2", "expected": str(Fraction(-1, 24)), "got": str(-sd.a0 / 24),
             "source": THETA1_SOURCE[1]}]
    for g in range(2, depth + 1):
        lams = set(THETA1_TABLE[g]) | {lam.parts for lam in sd.alphas.get(g, {})}
        for lam in sorted(lams, reverse=True):
            got = sd.alphas.get(g, {}).get(Partition(lam), Fraction(0))
            rows.append({"monomial": f"eps^{2 * g} u{list(lam)}", "expected": str(theta1_coefficient(g, lam, s)),
                         "got": str(got), "source": THETA1_SOURCE[g]})
    for g in range(2, g_max + 1):
        lam = (2,) * g
        rows.append({"monomial": f"alpha{list(lam)}", "expected": str(theta1_coefficient(g, lam, s)),
                     "got": str(alpha_dr(g, s)), "source": THETA1_SOURCE[g] + " vs Hodge-integral formula"})
    return DiffReport(rows)
