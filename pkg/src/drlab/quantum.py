"""Quantum commutator of a differential polynomial with a local functional.

For a density f and a functional g-bar,

    [f, g-bar] = sum_{n>=1} (-i)^(n-1) hbar^n / n!  sum  d^n f / du^{a_1}_{s_1}..du^{a_n}_{s_n}
                 * (-1)^(sum r) * prod eta^{a_k b_k}
                 * sum_j C_j^{(s_k + r_k + 1)_k} d_x^j  d^n g / du^{b_1}_{r_1}..du^{b_n}_{r_n}

with C_j obtained from the decomposition of a product of polylogarithms
Li_{-d}(z) = sum_k k^d z^k in the basis Li_{-j}(z).
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial
import threading

from .coeff import GaussianRational
from .diffpoly import DiffPoly, LocalFunctional, alpha_of, order_of, key_genus_weight

_NEG_I_POWERS = [GaussianRational(1), GaussianRational(0, -1), GaussianRational(-1), GaussianRational(0, 1)]


@dataclass(frozen=True)
class PolylogDecomposition:
    inputs: tuple
    coeffs: dict

    def value(self, n):
        return sum(c * n ** j for j, c in self.coeffs.items())


@dataclass(frozen=True)
class CCoefficients:
    inputs: tuple
    coeffs: dict


def convolution_series(d, nmax):
    """Coefficients z^0..z^nmax of prod_i Li_{-d_i}(z), by direct convolution."""
    series = [Fraction(int(n == 0)) for n in range(nmax + 1)]
    for di in d:
        factor = [Fraction(k ** di) for k in range(nmax + 1)]
        series = [sum(series[i] * factor[n - i] for i in range(n + 1)) for n in range(nmax + 1)]
    return series


def solve_exact(matrix, rhs):
    """Solve a square linear system over Q by Gauss-Jordan elimination."""
    n = len(matrix)
    a = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ValueError("singular system")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


_lock = threading.Lock()


@lru_cache(maxsize=None)
def _decompose(d):
    top = len(d) - 1 + sum(d)
    series = convolution_series(d, top)
    matrix = [[Fraction(n) ** j for j in range(1, top + 1)] for n in range(1, top + 1)]
    sol = solve_exact(matrix, series[1:])
    return {j: c for j, c in zip(range(1, top + 1), sol) if c}


def polylog_decompose(d):
    d = tuple(sorted(d))
    if not d or any(x < 1 for x in d):
        raise ValueError("inputs must be positive integers")
    with _lock:
        coeffs = _decompose(d)
    return PolylogDecomposition(d, dict(coeffs))


@lru_cache(maxsize=None)
def _c_table(a):
    n = len(a)
    total = n - 1 + sum(a)
    out = {}
    for j, c in _decompose(a).items():
        if (total - j) % 2 == 0:
            out[j] = c if ((total - j) // 2) % 2 == 0 else -c
    return out


def c_coeffs(a):
    a = tuple(sorted(a))
    if not a or any(x < 1 for x in a):
        raise ValueError("inputs must be positive integers")
    with _lock:
        table = _c_table(a)
    return CCoefficients(a, {j: GaussianRational(c) for j, c in table.items()})


def _falling(e, m):
    out = 1
    for i in range(m):
        out *= e - i
    return out


def _derivative_table(p, n, max_weight):
    """Map each size-n multiset V of jet variables to d^n p / dV (as a term dict)."""
    table = defaultdict(dict)
    for (e, h, jets), c in p.items():
        if len(jets) < n or (max_weight is not None and e + 2 * h > max_weight):
            continue
        for V in set(combinations(jets, n)):
            factor = 1
            rest = list(jets)
            for v in set(V):
                factor *= _falling(jets.count(v), V.count(v))
            for v in V:
                rest.remove(v)
            key = (e, h, tuple(rest))
            bucket = table[V]
            add = c * factor
            bucket[key] = bucket[key] + add if key in bucket else add
    return table


def _distinct_permutations(items):
    items = sorted(items)
    n = len(items)
    if n <= 1:
        yield tuple(items)
        return
    seen = set()
    for i, x in enumerate(items):
        if x in seen:
            continue
        seen.add(x)
        for rest in _distinct_permutations(items[:i] + items[i + 1:]):
            yield (x,) + rest


def _min_weight(p):
    return min((key_genus_weight(k) for k in p.keys()), default=0)


def _max_udeg(p):
    return max((len(k[2]) for k in p.keys()), default=0)


def bracket_term(f, g, eta, n, weight_room=None):
    """The n-th coefficient T_n with [f, g-bar] = sum (-i)^(n-1) hbar^n T_n.

    ``weight_room`` bounds eps_pow + 2*hbar_pow of the result (None: no bound).
    """
    rank, pol = f.rank, f.policy
    zero = DiffPoly.zero(rank, pol)
    if weight_room is not None and weight_room < 0:
        return zero
    fmax = gmax = None
    if weight_room is not None:
        fmax = weight_room - _min_weight(g)
        gmax = weight_room - _min_weight(f)
    DF = _derivative_table(f, n, fmax)
    DG = _derivative_table(g, n, gmax)
    if not DF or not DG:
        return zero
    Fpolys = {V: DiffPoly._make(rank, pol, {k: c for k, c in t.items() if c}) for V, t in DF.items()}
    mult_f = {}
    for V in DF:
        m = 1
        for v in set(V):
            m *= factorial(V.count(v))
        mult_f[V] = m
    total = zero
    for W, gterms in DG.items():
        gpoly = DiffPoly._make(rank, pol, {k: c for k, c in gterms.items() if c})
        if not gpoly:
            continue
        by_j = defaultdict(dict)
        arrangements = list(_distinct_permutations(W))
        for V, fpoly in Fpolys.items():
            if not fpoly:
                continue
            acc = defaultdict(Fraction)
            for sigma in arrangements:
                weight = Fraction(1, mult_f[V])
                a = []
                for v, w in zip(V, sigma):
                    up = eta.up(alpha_of(v), alpha_of(w))
                    if not up:
                        weight = 0
                        break
                    r = order_of(w)
                    weight *= up if r % 2 == 0 else -up
                    a.append(order_of(v) + r + 1)
                if not weight:
                    continue
                for j, c in _c_table(tuple(sorted(a))).items():
                    acc[j] += weight * c
            for j, c in acc.items():
                if c:
                    by_j[j][V] = c
        dg = gpoly
        done = 0
        for j in sorted(by_j):
            while done < j:
                dg = dg.dx()
                done += 1
            left = zero
            for V, c in by_j[j].items():
                left = left + Fpolys[V].scale(c)
            if left:
                total = total + left * dg
    return total


def _n_limit(f, g, pol, extra):
    n_max = min(_max_udeg(f), _max_udeg(g))
    cap = pol.max_weight
    if cap is not None:
        n_max = min(n_max, cap // 2 + extra)
    return n_max


def qcommutator_density(f, G, eta):
    """[f, G-bar] as a density (divisible by hbar).

    Terms hbar^n with 2n beyond the genus cap are dropped.
    """
    g = G.density if isinstance(G, LocalFunctional) else G
    pol = f.policy
    cap = pol.max_weight
    total = DiffPoly.zero(f.rank, pol)
    for n in range(1, _n_limit(f, g, pol, 0) + 1):
        room = None if cap is None else cap - 2 * n
        t = bracket_term(f, g, eta, n, room)
        if t:
            total = total + t.times_eps_hbar(hbar=n).scale(_NEG_I_POWERS[(n - 1) % 4])
    return total


def hbar_bracket(f, G, eta, mode="quantum"):
    """(1/hbar)[f, G-bar] in quantum mode, the Poisson bracket density {f, G-bar} in classical mode.

    Dividing by hbar before truncating keeps the top genus level intact.
    """
    g = G.density if isinstance(G, LocalFunctional) else G
    pol = f.policy
    cap = pol.max_weight
    if mode == "classical":
        return bracket_term(f, g, eta, 1, cap)
    if mode != "quantum":
        raise ValueError(f"unknown mode {mode!r}")
    total = DiffPoly.zero(f.rank, pol)
    for n in range(1, _n_limit(f, g, pol, 1) + 1):
        room = None if cap is None else cap - 2 * (n - 1)
        t = bracket_term(f, g, eta, n, room)
        if t:
            total = total + t.times_eps_hbar(hbar=n - 1).scale(_NEG_I_POWERS[(n - 1) % 4])
    return total


def qcommutator(F, G, eta):
    return LocalFunctional(qcommutator_density(F.density, G, eta))
