"""Recursion for Hamiltonian densities from a single seed, and the DR-type verifier.

Quantum mode solves  d_x (D - 1) G_{a,p+1} = (1/hbar) [G_{a,p}, seed]  starting
from G_{a,-1} = eta_{a mu} u^mu.  Classical mode uses the Poisson bracket of
eta d_x instead.  The ambiguity of each step (linear terms and constants) is
fixed by the string equation dG_{a,p+1}/du^1 = G_{a,p} with no added constants.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from typing import Optional
import json

from .diffpoly import DiffPoly, LocalFunctional, key_degree, key_d_weight
from .errors import ExactnessError, NotDrTypeError, StringObstructionError, WeightResonanceError
from .operators import Metric
from .parallel import parallel_map
from .quantum import bracket_term, hbar_bracket, _NEG_I_POWERS


def _as_functional(seed):
    return seed if isinstance(seed, LocalFunctional) else LocalFunctional(seed)


def _check_mode(seed, mode):
    if mode not in ("quantum", "classical"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "classical" and seed.density.filter(lambda k: k[1] > 0):
        raise ValueError("classical mode needs a seed without hbar")


def _pure_number_constant(p):
    return p.filter(lambda k: not k[2] and not k[0] and not k[1])


def _integrate_step(rhs, where):
    try:
        primitive = rhs.antiderivative()
    except ExactnessError as exc:
        raise NotDrTypeError(f"right-hand side is not a total derivative at {where}", exc.witness, where) from exc
    resonant = primitive.filter(lambda k: key_d_weight(k) == 1)
    if resonant:
        raise WeightResonanceError(f"weight-1 terms in the primitive at {where}: {resonant}", resonant)
    return primitive.euler_invert(1)[0]


def recurse_step(G_prev, seed, eta, mode="quantum", where=None):
    """One step of the recursion; returns G_next.

    The weight-1 ambiguity is fixed so that dG_next/du^1 agrees with G_prev;
    a mismatch in non-constant terms raises StringObstructionError.  The
    constant term of G_prev is left to the caller (it is read off G_next).
    """
    seed = _as_functional(seed)
    rhs = hbar_bracket(G_prev, seed, eta, mode)
    G_next = _integrate_step(rhs, where)
    c1 = _pure_number_constant(G_prev)
    if c1:
        G_next = G_next + c1 * DiffPoly.jet(G_prev.rank, 1, 0, G_prev.policy)
    mismatch = (G_prev - G_next.dpartial(1, 0)).without_constant()
    if mismatch:
        raise StringObstructionError(f"string equation fails at {where}", mismatch, where)
    return G_next


def _linear_part_of_next(G_prev, seed, eta, mode):
    """The part of G_next that is linear in u, computed without the full bracket.

    A linear output term of the bracket pairs the degree-n part of G_prev with
    the degree-(n+1) part of the seed density.
    """
    g = seed.density
    pol = G_prev.policy
    cap = pol.max_weight
    total = DiffPoly.zero(G_prev.rank, pol)
    top = max((len(k[2]) for k in G_prev.keys()), default=0)
    for n in range(1, top + 1):
        if mode == "classical" and n > 1:
            break
        fn = G_prev.homogeneous_part(n)
        gn = g.homogeneous_part(n + 1)
        if not fn or not gn:
            continue
        shift = 0 if mode == "classical" else n - 1
        room = None if cap is None else cap - 2 * shift
        t = bracket_term(fn, gn, eta, n, room)
        if t and shift:
            t = t.times_eps_hbar(hbar=shift).scale(_NEG_I_POWERS[shift % 4])
        total = total + t
    total = total.homogeneous_part(1)
    return _integrate_step(total, "linear part") if total else total


def _with_string_constant(G, G_next):
    """Replace the constant term of G by the one the string equation dictates."""
    return G - G.constant_term() + G_next.dpartial(1, 0).constant_term()


@dataclass
class HierarchyTable:
    rank: int
    eta: Metric
    seed: LocalFunctional
    densities: dict
    policy: object
    mode: str
    p_max: int

    def density(self, alpha, p):
        return self.densities[(alpha, p)]

    def functional(self, alpha, p):
        return LocalFunctional(self.densities[(alpha, p)])

    def to_json(self):
        return {
            "rank": self.rank,
            "mode": self.mode,
            "genusCap": self.policy.genus_cap,
            "pMax": self.p_max,
            "densities": [
                {"alpha": a, "p": p, "density": str(self.densities[(a, p)])}
                for (a, p) in sorted(self.densities)
            ],
        }


def build_hierarchy(seed, eta, p_max, policy=None, mode="quantum"):
    """Densities G_{a,p} for every component a and -1 <= p <= p_max."""
    seed = _as_functional(seed)
    _check_mode(seed, mode)
    policy = policy or seed.policy
    if seed.policy != policy:
        seed = LocalFunctional(seed.density.with_policy(policy))
    N = eta.rank
    dens = {(a, -1): eta.lower_index(a, policy) for a in range(1, N + 1)}

    def step(args):
        a, p = args
        return recurse_step(dens[(a, p)], seed, eta, mode, where=(a, p + 1))

    for p in range(-1, p_max):
        nxt = parallel_map(step, [(a, p) for a in range(1, N + 1)])
        for a, G in zip(range(1, N + 1), nxt):
            if p >= 0:
                dens[(a, p)] = _with_string_constant(dens[(a, p)], G)
            dens[(a, p + 1)] = G
    if p_max >= -1:
        for a in range(1, N + 1):
            if p_max >= 0:
                lin = _linear_part_of_next(dens[(a, p_max)], seed, eta, mode)
                dens[(a, p_max)] = _with_string_constant(dens[(a, p_max)], lin)
    return HierarchyTable(N, eta, seed, dens, policy, mode, p_max)


@dataclass
class Check:
    name: str
    status: bool
    witness: Optional[str] = None

    def to_json(self):
        out = {"name": self.name, "status": "pass" if self.status else "fail"}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class DrTypeReport:
    mode: str
    genus_cap: Optional[int]
    p_max: int
    checks: list = field(default_factory=list)
    normalization: str = "string equation imposed, no added constants"
    table: Optional[HierarchyTable] = None

    @property
    def passed(self):
        return all(c.status for c in self.checks)

    def flag(self, prefix):
        relevant = [c for c in self.checks if c.name.startswith(prefix)]
        return bool(relevant) and all(c.status for c in relevant)

    def failures(self):
        return [c for c in self.checks if not c.status]

    def to_json(self):
        return {
            "mode": self.mode,
            "genusCap": self.genus_cap,
            "pMax": self.p_max,
            "normalization": self.normalization,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
        }

    def to_text(self):
        lines = [f"mode={self.mode} genusCap={self.genus_cap} pMax={self.p_max} ({self.normalization})"]
        for c in self.checks:
            line = f"[{'PASS' if c.status else 'FAIL'}] {c.name}"
            if c.witness:
                line += f"  witness: {c.witness}"
            lines.append(line)
        return "\n".join(lines)


def _witness_text(w):
    if isinstance(w, dict):
        return "; ".join(f"{k}: {v}" for k, v in sorted(w.items(), key=lambda kv: str(kv[0])))
    return str(w)


def check_hypothesis_b(seed, eta, mode):
    """delta H/delta u^1 = 1/2 eta u u + d_x R + c  (quantum, deg R <= -1)
    or  = 1/2 eta u u + d_x^2 r  (classical, deg r = -2)."""
    seed = _as_functional(seed)
    rest = seed.var_deriv(1) - eta.quadratic(seed.policy)
    if mode == "quantum":
        rest = rest.without_constant()
        try:
            R = rest.antiderivative()
        except ExactnessError as exc:
            return Check("hypothesis b", False, _witness_text(exc.witness))
        bad = R.filter(lambda k: key_degree(k) > -1)
        return Check("hypothesis b", not bad, str(bad) if bad else None)
    if rest.constant_term():
        return Check("hypothesis b", False, f"constant term {rest.constant_term()}")
    try:
        r = rest.antiderivative().antiderivative()
    except ExactnessError as exc:
        return Check("hypothesis b", False, _witness_text(exc.witness))
    bad = r.filter(lambda k: key_degree(k) != -2)
    return Check("hypothesis b", not bad, str(bad) if bad else None)


def verify_dr_type(seed, eta, p_max, policy=None, mode="quantum"):
    seed = _as_functional(seed)
    policy = policy or seed.policy
    if seed.policy != policy:
        seed = LocalFunctional(seed.density.with_policy(policy))
    report = DrTypeReport(mode, policy.genus_cap, p_max)
    report.checks.append(check_hypothesis_b(seed, eta, mode))
    try:
        table = build_hierarchy(seed, eta, max(p_max, 1), policy, mode)
    except (NotDrTypeError, WeightResonanceError) as exc:
        witness = getattr(exc, "witness", None) or getattr(exc, "monomials", None)
        report.checks.append(Check("hypothesis a: recursion solvable", False, f"{exc}; {_witness_text(witness)}"))
        return report
    report.table = table
    report.checks.append(Check("hypothesis a: recursion solvable", True))
    N = eta.rank
    bad = [f"G[{a},{p}]" for (a, p), G in table.densities.items() if not G.is_hierarchy_admissible()]
    report.checks.append(Check("hypothesis a: densities have degree <= 0", not bad, ", ".join(bad) or None))

    diff = (table.functional(1, 1) - seed)
    report.checks.append(Check("hypothesis c: int G[1,1] = seed", diff.is_zero(), None if diff.is_zero() else str(diff.density)))
    diff = table.functional(1, 0) - LocalFunctional(eta.quadratic(policy))
    report.checks.append(Check("claim i: int G[1,0] = 1/2 eta u u", diff.is_zero(), None if diff.is_zero() else str(diff.density)))

    idx = [(a, p) for p in range(-1, p_max + 1) for a in range(1, N + 1)]
    pairs = list(combinations_with_replacement(idx, 2))

    def commute(pair):
        (a, p), (b, q) = pair
        c = hbar_bracket(table.density(a, p), table.functional(b, q), eta, mode)
        wit = {k: w for k in range(1, N + 1) if (w := c.var_deriv(k))}
        return None if not wit else f"[G[{a},{p}], G[{b},{q}]]: {_witness_text(wit)}"

    failures = [w for w in parallel_map(commute, pairs) if w]
    report.checks.append(Check("claim ii: Hamiltonians commute", not failures, failures[0] if failures else None))

    def second(args):
        (a, p), b = args
        lhs = hbar_bracket(table.density(a, p), table.functional(b, 0), eta, mode)
        rhs = table.density(a, p + 1).dpartial(b, 0).dx()
        return None if lhs == rhs else f"(a,p,b)=({a},{p},{b}): {lhs - rhs}"

    jobs = [((a, p), b) for p in range(-1, p_max) for a in range(1, N + 1) for b in range(1, N + 1)]
    failures = [w for w in parallel_map(second, jobs) if w]
    report.checks.append(Check("claim iii: second recursion", not failures, failures[0] if failures else None))

    failures = []
    for (a, p), G in sorted(table.densities.items()):
        if p >= 0 and G.dpartial(1, 0) != table.density(a, p - 1):
            failures.append(f"G[{a},{p}]: {G.dpartial(1, 0) - table.density(a, p - 1)}")
    report.checks.append(Check("claim iv: string equation", not failures, failures[0] if failures else None))
    return report


def wdvv_check(F, eta):
    """Check associativity and the unit normalization d^3F/du^1 du^a du^b = eta_ab.

    Returns (ok, witness) where witness names the first failing identity.
    """
    N = eta.rank
    if F.filter(lambda k: k[0] or k[1] or any(v & 1023 for v in k[2])):
        raise ValueError("F must depend on u^a_0 only")
    third = {}
    for t in combinations_with_replacement(range(1, N + 1), 3):
        d = F
        for x in t:
            d = d.dpartial(x, 0)
        third[t] = d

    def c(a, b, m):
        return third[tuple(sorted((a, b, m)))]

    for a, b in product(range(1, N + 1), repeat=2):
        if c(1, a, b) != DiffPoly.const(F.rank, eta.low(a, b), F.policy):
            return False, {"identity": "unit", "indices": [1, a, b], "value": str(c(1, a, b))}
    for a, b, g, d in product(range(1, N + 1), repeat=4):
        lhs = DiffPoly.zero(F.rank, F.policy)
        rhs = DiffPoly.zero(F.rank, F.policy)
        for m, n in product(range(1, N + 1), repeat=2):
            up = eta.up(m, n)
            if up:
                lhs = lhs + c(a, b, m) * c(n, g, d) * up
                rhs = rhs + c(a, d, m) * c(n, g, b) * up
        if lhs != rhs:
            return False, {"identity": "associativity", "indices": [a, b, g, d], "value": str(lhs - rhs)}
    return True, None


def report_json(report):
    return json.dumps(report.to_json(), indent=1, sort_keys=False)
