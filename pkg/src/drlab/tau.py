"""Tau-structures, two-point functions and correlators of the string solution."""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product
import json

from .coeff import GaussianRational
from .diffpoly import DiffPoly, LocalFunctional, TruncationPolicy, functional_equal
from .drtype import Check, HierarchyTable, build_hierarchy
from .errors import CapExceededError, ExactnessError, NotTauCompatibleError
from .models import trivial_model
from .operators import HamiltonianOperator, hamiltonian_flow
from .parallel import parallel_map
from .quantum import hbar_bracket


@dataclass
class TauStructure:
    hierarchy: HierarchyTable
    densities: dict

    @property
    def p_max(self):
        return max(p for _, p in self.densities)

    @property
    def mode(self):
        return self.hierarchy.mode

    def density(self, alpha, p):
        return self.densities[(alpha, p)]


@dataclass
class TwoPoint:
    indices: tuple
    omega: DiffPoly


@dataclass
class TauReport:
    checks: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.status for c in self.checks)

    def to_json(self):
        return {
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "omegaConstants": [
                {"alpha": a, "p": p, "constant": str(c)} for (a, p), c in sorted(self.constants.items())
            ],
        }

    def to_text(self):
        lines = [f"[{'PASS' if c.status else 'FAIL'}] {c.name}" + (f"  witness: {c.witness}" if c.witness else "")
                 for c in self.checks]
        for (a, p), c in sorted(self.constants.items()):
            lines.append(f"Omega[{a},{p};1,0] - H[{a},{p - 1}] = {c}")
        return "\n".join(lines)


def tau_densities(h):
    """H_{b,q} = delta G_{b,q+1} / delta u^1 for -1 <= q < h.p_max."""
    N = h.rank
    for (b, q) in sorted(h.densities):
        if q < 0:
            continue
        lhs = h.functional(b, q).dpartial(1)
        if not functional_equal(lhs, h.functional(b, q - 1)):
            raise NotTauCompatibleError(f"dG[{b},{q}]/du^1 differs from G[{b},{q - 1}]", (b, q))
    dens = {}
    for b in range(1, N + 1):
        for q in range(-1, h.p_max):
            dens[(b, q)] = h.density(b, q + 1).var_deriv(1)
    return TauStructure(h, dens)


def _bracket(t, f, beta, q):
    h = t.hierarchy
    return hbar_bracket(f, h.functional(beta, q), h.eta, h.mode)


def tau_symmetry_check(t, p_max=None):
    """[H_{a,p-1}, G_{b,q}] = [H_{b,q-1}, G_{a,p}] for 0 <= p, q <= p_max."""
    p_max = t.p_max + 1 if p_max is None else p_max
    if p_max > t.p_max + 1:
        raise CapExceededError(f"tau densities are available up to p = {t.p_max + 1}")
    N = t.hierarchy.rank
    idx = [(a, p) for a in range(1, N + 1) for p in range(p_max + 1)]
    report = TauReport()

    bad = []
    for (b, q), H in sorted(t.densities.items()):
        if not functional_equal(LocalFunctional(H), t.hierarchy.functional(b, q)):
            bad.append(f"int H[{b},{q}] != G[{b},{q}]")
    report.checks.append(Check("tau densities integrate to the Hamiltonians", not bad, bad[0] if bad else None))

    def sym(pair):
        (a, p), (b, q) = pair
        lhs = _bracket(t, t.density(a, p - 1), b, q)
        rhs = _bracket(t, t.density(b, q - 1), a, p)
        return None if lhs == rhs else f"(a,p;b,q)=({a},{p};{b},{q}): {lhs - rhs}"

    pairs = list(combinations_with_replacement(idx, 2))
    failures = [w for w in parallel_map(sym, pairs) if w]
    report.checks.append(Check("tau symmetry", not failures, failures[0] if failures else None))
    if failures:
        return report

    omegas = {}
    bad = []
    for pair in pairs:
        try:
            omegas[pair] = two_point(t, *pair[0], *pair[1]).omega
        except NotTauCompatibleError as exc:
            bad.append(str(exc))
    report.checks.append(Check("two-point functions exist", not bad, bad[0] if bad else None))

    bad = []
    for a, p in idx:
        key = tuple(sorted([(a, p), (1, 0)]))
        if key not in omegas:
            continue
        diff = omegas[key] - t.density(a, p - 1)
        if diff.without_constant():
            bad.append(f"Omega[{a},{p};1,0] - H[{a},{p - 1}] = {diff}")
        report.constants[(a, p)] = diff.constant_term()
    report.checks.append(Check("Omega[a,p;1,0] - H[a,p-1] is constant", not bad, bad[0] if bad else None))

    bad = []
    for (a, p), (b, q) in pairs:
        if (a, p) == (b, q):
            continue
        other = _omega_raw(t, b, q, a, p)
        if other != omegas[((a, p), (b, q))]:
            bad.append(f"Omega[{a},{p};{b},{q}] != Omega[{b},{q};{a},{p}]")
    report.checks.append(Check("Omega symmetry", not bad, bad[0] if bad else None))
    return report


def _omega_raw(t, a, p, b, q):
    rhs = _bracket(t, t.density(a, p - 1), b, q)
    try:
        if rhs.constant_term():
            raise ExactnessError("constant term", {0: rhs.constant_term()})
        return rhs.antiderivative()
    except ExactnessError as exc:
        err = NotTauCompatibleError(f"[H[{a},{p - 1}], G[{b},{q}]] is not a total derivative", (a, p, b, q))
        err.witness = exc.witness
        raise err from exc


def two_point(t, alpha, p, beta, q):
    """Omega with d_x Omega = (1/hbar)[H_{a,p-1}, G_{b,q}] (Poisson bracket classically), Omega(0) = 0."""
    if p - 1 > t.p_max or q > t.hierarchy.p_max:
        raise CapExceededError(f"Omega[{alpha},{p};{beta},{q}] needs a deeper hierarchy")
    return TwoPoint((alpha, p, beta, q), _omega_raw(t, alpha, p, beta, q))


@dataclass
class QuantumTaylor:
    coefficients: dict
    checks: list
    initial_data: str = "c^a_k = 0 (convention)"

    @property
    def passed(self):
        return all(c.status for c in self.checks)


def quantum_taylor(t, targets, t_deg_max, times=None):
    """Nested-commutator Taylor coefficients of the evolved two-point functions.

    ``targets`` is a list of (a, p, c, r); ``coefficients[(target, times)]`` is the
    coefficient of the derivative along the listed times (sorted tuple of (b, q)).
    Also checks, at each order, the symmetry of d Omega_{a,p;b,q} / d t^c_r under
    permutations of the three pairs and dH_{a,p-1}/dt^b_q = d_x Omega_{a,p;b,q}.
    """
    h = t.hierarchy
    N = h.rank
    if times is None:
        times = [(b, q) for b in range(1, N + 1) for q in range(0, min(h.p_max, t.p_max + 1) + 1)]
    times = sorted(times)

    def evolve(f, seq):
        for b, q in seq:
            f = _bracket(t, f, b, q)
        return f

    coeffs = {}
    for target in targets:
        a, p, c, r = target
        base = two_point(t, a, p, c, r).omega
        for k in range(t_deg_max + 1):
            for seq in combinations_with_replacement(times, k):
                coeffs[(target, seq)] = evolve(base, seq)

    checks = []
    bad = []
    pairs = [(a, p) for a in range(1, N + 1) for p in range(0, t.p_max + 1)]
    for x, y, z in combinations_with_replacement(pairs, 3):
        if z not in times:
            continue
        values = set()
        for (a, p), (b, q), (c, r) in set(permutations((x, y, z))):
            if (c, r) not in times:
                continue
            values.add(_bracket(t, two_point(t, a, p, b, q).omega, c, r))
        if len(values) > 1:
            bad.append(f"pairs {x}, {y}, {z}")
    checks.append(Check("degree-1 derivatives symmetric in the three pairs", not bad, bad[0] if bad else None))

    bad = []
    for (a, p), (b, q) in product(pairs, repeat=2):
        if (b, q) not in times:
            continue
        om = two_point(t, a, p, b, q).omega
        H = t.density(a, p - 1)
        for k in range(t_deg_max):
            for seq in combinations_with_replacement(times, k):
                lhs = _bracket(t, evolve(H, seq), b, q)
                if lhs != evolve(om, seq).dx():
                    bad.append(f"(a,p;b,q)=({a},{p};{b},{q}) times {seq}")
    checks.append(Check("dH[a,p-1]/dt[b,q] = d_x Omega[a,p;b,q]", not bad, bad[0] if bad else None))
    return QuantumTaylor(coeffs, checks)


# --- classical correlators -----------------------------------------------------

@dataclass
class CorrelatorTable:
    g_max: int
    t_deg_max: int
    d_sum_max: int
    entries: dict
    checks: list = field(default_factory=list)

    def value(self, g, insertions):
        """Correlator for insertions given as (alpha, d) pairs (or bare d for alpha = 1)."""
        ins = tuple(sorted((x, 1)[::-1] if isinstance(x, int) else tuple(x) for x in insertions))
        return self.entries[(g, ins)]

    @property
    def passed(self):
        return all(c.status for c in self.checks)

    def to_json(self):
        return [
            {"g": g, "insertions": [list(x) for x in ins], "value": str(v)}
            for (g, ins), v in sorted(self.entries.items())
        ]

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)


def _in_window(g, ins):
    n = len(ins)
    s = sum(d for _, d in ins)
    return 2 * g - 2 + n > 0 and 2 * g - 1 <= s <= 3 * g - 3 + n


def dr_correlators(model, g_max, t_deg_max, d_sum_max=None, p_limit=8):
    """Correlators <tau_{d_1}(e_{a_1}) ... tau_{d_n}(e_{a_n})>_g for g <= g_max, n <= t_deg_max,
    sum d_i <= d_sum_max, from the classical hierarchy of ``model`` and its string solution.
    """
    if d_sum_max is None:
        d_sum_max = 3 * g_max - 2 + t_deg_max
    need = d_sum_max + 1
    if need > p_limit:
        raise CapExceededError(f"entries with sum d = {d_sum_max} need hierarchy depth {need} > {p_limit}")
    policy = TruncationPolicy(g_max)
    eta, N = model.eta, model.rank
    seed = model.seed_for(policy, mode="classical")
    h = build_hierarchy(seed, eta, need, policy, mode="classical")
    t = tau_densities(h)
    K = HamiltonianOperator.eta_dx(eta, policy)
    point = {(1, 1): 1}

    omegas = {}

    def omega(a, p, b, q):
        key = (a, p, b, q)
        if key not in omegas:
            omegas[key] = _omega_raw(t, a, p, b, q)
        return omegas[key]

    def flow(f, b, q):
        return hamiltonian_flow(f, h.functional(b, q), K)

    def coefficient(value, g):
        return value.coefficient((), eps=2 * g)

    labels = [(a, d) for a in range(1, N + 1) for d in range(d_sum_max + 1)]
    entries = {}

    multi = []
    for n in range(2, t_deg_max + 1):
        for ins in combinations_with_replacement(labels, n):
            if sum(d for _, d in ins) <= d_sum_max:
                multi.append(ins)

    def compute(ins):
        order = sorted(ins, key=lambda x: (x[1], x[0]), reverse=True)
        (a, p), (b, q) = order[0], order[1]
        f = omega(a, p, b, q)
        for c, r in order[2:]:
            f = flow(f, c, r)
        value = f.evaluate(point)
        return [coefficient(value, g) for g in range(g_max + 1)]

    # two-point functions first so the cache is filled before any threading
    for ins in multi:
        order = sorted(ins, key=lambda x: (x[1], x[0]), reverse=True)
        omega(*order[0], *order[1])
    for ins, vals in zip(multi, parallel_map(compute, multi)):
        for g, v in enumerate(vals):
            entries[(g, ins)] = v

    # one insertion: string equation <tau_0(e_1) tau_{d+1}(e_a)> = <tau_d(e_a)>
    for a, d in labels:
        value = omega(a, d + 1, 1, 0).evaluate(point)
        for g in range(g_max + 1):
            entries[(g, ((a, d),))] = coefficient(value, g)
    # no insertions: dilaton <tau_1(e_1)>_g = (2g-2) <>_g, and <>_1 = 0
    for g in range(g_max + 1):
        if g in (0, 1):
            entries[(g, ())] = GaussianRational(0)
        else:
            entries[(g, ())] = entries[(g, ((1, 1),))] * Fraction(1, 2 * g - 2)

    table = CorrelatorTable(g_max, t_deg_max, d_sum_max, entries)
    _correlator_checks(table, eta)
    return table


def _correlator_checks(table, eta):
    N = eta.rank
    bad = [f"g={g} {list(ins)}: {v}" for (g, ins), v in sorted(table.entries.items()) if v and not _in_window(g, ins)]
    table.checks.append(Check("vanishing outside 2g-1 <= sum d <= 3g-3+n", not bad, bad[0] if bad else None))

    bad = []
    for (g, ins), v in table.entries.items():
        if (1, 0) not in ins or len(ins) < 2:
            continue
        rest = list(ins)
        rest.remove((1, 0))
        total = GaussianRational(0)
        for i, (a, d) in enumerate(rest):
            if d:
                total = total + table.entries[(g, tuple(sorted(rest[:i] + [(a, d - 1)] + rest[i + 1:])))]
        if g == 0 and len(rest) == 2 and rest[0][1] == rest[1][1] == 0:
            total = total + eta.low(rest[0][0], rest[1][0])
        if v != total:
            bad.append(f"g={g} {list(ins)}: {v} != {total}")
    table.checks.append(Check("string equation", not bad, bad[0] if bad else None))

    bad = []
    for (g, ins), v in table.entries.items():
        if (1, 1) not in ins:
            continue
        rest = list(ins)
        rest.remove((1, 1))
        key = (g, tuple(sorted(rest)))
        if key not in table.entries:
            continue
        expected = table.entries[key] * (2 * g - 2 + len(rest))
        if g == 1 and not rest:
            expected = expected + Fraction(N, 24)
        if v != expected:
            bad.append(f"g={g} {list(ins)}: {v} != {expected}")
    table.checks.append(Check("dilaton equation", not bad, bad[0] if bad else None))


def tampered_tau_structure(genus_cap=1):
    """Trivial-model tau-structure with H[1,0] replaced by u^2/2 alone (a falsification fixture).

    The replacement integrates to the right Hamiltonian, so only the tau-symmetry check can catch it.
    """
    m = trivial_model(TruncationPolicy(genus_cap))
    t = tau_densities(build_hierarchy(m.seed, m.eta, 2, m.policy))
    u = DiffPoly.jet(1, 1, 0, m.policy)
    dens = dict(t.densities)
    dens[(1, 0)] = u * u / 2
    return TauStructure(t.hierarchy, dens)
