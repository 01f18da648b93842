"""Seed Hamiltonians for concrete hierarchies and the genus-one correction formulas."""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
import json

from .coeff import GaussianRational
from .diffpoly import DiffPoly, LocalFunctional, TruncationPolicy, parse
from .drtype import build_hierarchy, wdvv_check
from .errors import DrlabError
from .operators import Metric

SPIN3_SEED = (
    "1/2 * u[1,0]^2 * u[2,0] + 1/36 * u[2,0]^4"
    " - 1/12 * eps^2 * u[1,1]^2 - 1/24 * eps^2 * u[2,0] * u[2,1]^2"
    " + 1/432 * eps^4 * u[2,2]^2"
    " - 1/12*I * hbar * u[1,0]"
)

SPIN4_SEED = (
    "1/2 * u[1,0] * u[2,0]^2 + 1/2 * u[1,0]^2 * u[3,0] + 1/8 * u[2,0]^2 * u[3,0]^2 + 1/320 * u[3,0]^5"
    " - 1/8 * eps^2 * u[1,1]^2 - 1/16 * eps^2 * u[3,0] * u[2,1]^2 - 1/32 * eps^2 * u[3,0] * u[1,1] * u[3,1]"
    " + 3/64 * eps^2 * u[2,0]^2 * u[3,2] + 1/192 * eps^2 * u[3,0]^3 * u[3,2]"
    " + 1/160 * eps^4 * u[2,2]^2 + 3/640 * eps^4 * u[1,2] * u[3,2] + 5/4096 * eps^4 * u[3,0]^2 * u[3,4]"
    " - 1/8192 * eps^6 * u[3,3]^2"
    " + 1/96*I * hbar * u[3,1]^2 - 1/96*I * hbar * u[3,0]^2 - 1/8*I * hbar * u[1,0]"
    " - 1/1280*I * eps^2 * hbar * u[3,0]"
)

SPIN3_F = "1/2 * u[1,0]^2 * u[2,0] + 1/72 * u[2,0]^4"
SPIN4_F = "1/2 * u[1,0] * u[2,0]^2 + 1/2 * u[1,0]^2 * u[3,0] + 1/16 * u[2,0]^2 * u[3,0]^2 + 1/960 * u[3,0]^5"

# same as the 3-spin seed with the eps^4 coefficient 1/432 replaced by 1/400
SPIN3_PERTURBED_SEED = SPIN3_SEED.replace("1/432", "1/400")

# a rank-3 potential violating associativity (1/960 replaced by 1/480)
NON_WDVV_F = SPIN4_F.replace("1/960", "1/480")


@dataclass
class FrobeniusData:
    F: DiffPoly
    Gfun: DiffPoly
    eta: Metric

    def check(self):
        return wdvv_check(self.F, self.eta)


@dataclass
class ModelSpec:
    name: str
    rank: int
    eta: Metric
    seed: LocalFunctional
    policy: TruncationPolicy
    params: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    frobenius: FrobeniusData = None

    def seed_for(self, policy=None, mode="quantum"):
        """The seed truncated to ``policy``; in classical mode only its hbar^0 part."""
        policy = policy or self.policy
        d = self.seed.density.with_policy(policy)
        if mode == "classical":
            d = d.classical()
        return LocalFunctional(d)

    def to_json(self):
        return {
            "name": self.name,
            "rank": self.rank,
            "eta": self.eta.rows(),
            "seed": str(self.seed.density),
            "params": {k: str(v) if not isinstance(v, (list, tuple)) else [str(x) for x in v] for k, v in self.params.items()},
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=1)


def model_from_json(data, policy=None):
    if isinstance(data, str):
        data = json.loads(data)
    try:
        rank = int(data["rank"])
        eta = Metric([[Fraction(x) for x in row] for row in data["eta"]])
        text = data["seed"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DrlabError(f"malformed model description: {exc}") from exc
    policy = policy or TruncationPolicy(2)
    seed = LocalFunctional(parse(text, rank, policy))
    return ModelSpec(data.get("name", "inline"), rank, eta, seed, policy, dict(data.get("params", {})))


def _spin_eta(r):
    return Metric.antidiagonal(r - 1)


def spin_model(r, policy=None):
    if r == 3:
        policy = policy or TruncationPolicy(2)
        seed = parse(SPIN3_SEED, 2, policy)
        F = parse(SPIN3_F, 2, policy)
        prov = {"hbar u^1": "genus-one correction formula with vanishing G-function"}
    elif r == 4:
        policy = policy or TruncationPolicy(2)
        seed = parse(SPIN4_SEED, 3, policy)
        F = parse(SPIN4_F, 3, policy)
        prov = {
            "hbar terms": "genus-one correction formula with vanishing G-function",
            "hbar eps^2 u^3": "-3 * (1/5760) * 2 * (genus-0 three- and four-point numbers); lambda_2 lambda_1 = 1/5760",
        }
    else:
        raise DrlabError(f"spin models are available for r = 3, 4 only, got {r}")
    N = r - 1
    eta = _spin_eta(r)
    fd = FrobeniusData(F, DiffPoly.zero(N, policy), eta)
    return ModelSpec(f"{r}spin", N, eta, LocalFunctional(seed), policy, {"r": r}, prov, fd)


def spin_grading(r):
    """Weights |u^(a+1)_k| = r - a, |eps| = 1, |hbar| = r + 2 under which the r-spin seed is homogeneous."""

    def weight(key):
        e, h, jets = key
        return e + (r + 2) * h + sum(r - ((v >> 10) - 1) for v in jets)

    return weight


def perturbed_spin3(policy=None):
    policy = policy or TruncationPolicy(2)
    m = spin_model(3, policy)
    m.name = "3spin-perturbed"
    m.seed = LocalFunctional(parse(SPIN3_PERTURBED_SEED, 2, policy))
    m.provenance = {"eps^4 (u^2_2)^2": "altered from 1/432 to 1/400"}
    return m


def trivial_model(policy=None):
    policy = policy or TruncationPolicy(2)
    seed = parse("1/6 * u[1,0]^3 - 1/24 * eps^2 * u[1,1]^2 - 1/24*I * hbar * u[1,0]", 1, policy)
    fd = FrobeniusData(parse("1/6 * u[1,0]^3", 1, policy), DiffPoly.zero(1, policy), Metric.identity(1))
    return ModelSpec("trivial", 1, Metric.identity(1), LocalFunctional(seed), policy, {}, {}, fd)


# --- rank one -------------------------------------------------------------
# Homogeneous polynomials in x = eps^2 and y = i hbar are dicts (i, j) -> Fraction.

def _bmul(p, q):
    out = {}
    for (a, b), c in p.items():
        for (d, e), f in q.items():
            k = (a + d, b + e)
            out[k] = out.get(k, 0) + c * f
    return {k: v for k, v in out.items() if v}


def _badd(p, q, scale=1):
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + scale * v
    return {k: v for k, v in out.items() if v}


def _bdiv(num, den):
    """Exact division of homogeneous polynomials in (x, y); raises if not exact."""
    num = dict(num)
    dtop = max(den)
    out = {}
    while num:
        top = max(num)
        c = num[top] / den[dtop]
        k = (top[0] - dtop[0], top[1] - dtop[1])
        if k[0] < 0 or k[1] < 0:
            raise ArithmeticError("inexact division")
        out[k] = c
        num = _badd(num, _bmul({k: c}, den), -1)
    return out


def rank1_coefficients(s):
    """The coefficients A, B, C, Q of u_1^2, u_2^2, u_2^3, u_3^2 as polynomials in (eps^2, i hbar)."""
    s = [Fraction(x) for x in s] + [Fraction(0)] * 3
    s1, s2, s3 = s[:3]
    A = {(1, 0): Fraction(-1, 24), (0, 1): -s1 / 2}
    B = {(2, 0): -s1 / 120, (1, 1): -s1 ** 2 / 10, (0, 2): -(Fraction(2, 5) * s1 ** 3 + s2 / 12)}
    C = {
        (3, 0): -s1 ** 3 / 360 - s2 / 1728,
        (2, 1): -(24 * s1 ** 4 + 5 * s1 * s2) / 720,
        (1, 2): -(4608 * s1 ** 5 + 2400 * s2 * s1 ** 2 + 35 * s3) / 28800,
        (0, 3): -(2304 * s1 ** 6 + 2400 * s2 * s1 ** 3 + 105 * s3 * s1 - 500 * s2 ** 2) / 7200,
    }
    A, B, C = ({k: v for k, v in P.items() if v} for P in (A, B, C))
    # u_3^2 coefficient (10 b^2 - c)/(7 a) with a = A/y, b = B/y^2, c = C/y^3
    num = _badd(_bmul({(0, 0): Fraction(10)}, _bmul(B, B)), _bmul({(0, 1): Fraction(1)}, C), -1)
    Q = _bdiv(num, _bmul({(0, 0): Fraction(7)}, A))
    return {"A": A, "B": B, "C": C, "Q": Q}


def _bpoly_to_diffpoly(P, monomial, policy):
    total = DiffPoly.zero(1, policy)
    for (i, j), c in P.items():
        coef = GaussianRational(c) * GaussianRational(0, 1) ** j
        total = total + monomial.times_eps_hbar(eps=2 * i, hbar=j).scale(coef)
    return total


def rank1_seed(s=(), g_max=3):
    if not 0 <= g_max <= 3:
        raise DrlabError(f"rank-one seeds are available up to genus 3, got {g_max}")
    s = tuple(Fraction(x) for x in s)
    policy = TruncationPolicy(g_max)
    u = [DiffPoly.jet(1, 1, k, policy) for k in range(4)]
    co = rank1_coefficients(s)
    seed = u[0] ** 3 / 6
    if g_max >= 1:
        seed = seed + _bpoly_to_diffpoly(co["A"], u[1] ** 2, policy)
        seed = seed + u[0].times_eps_hbar(hbar=1).scale(GaussianRational(0, Fraction(-1, 24)))
    if g_max >= 2:
        seed = seed + _bpoly_to_diffpoly(co["B"], u[2] ** 2, policy)
    if g_max >= 3:
        seed = seed + _bpoly_to_diffpoly(co["C"], u[2] ** 3, policy)
        seed = seed + _bpoly_to_diffpoly(co["Q"], u[3] ** 2, policy)
    fd = FrobeniusData(u[0] ** 3 / 6, DiffPoly.zero(1, policy), Metric.identity(1))
    name = "rank1" if not any(s) else "rank1(" + ",".join(str(x) for x in s) + ")"
    return ModelSpec(name, 1, Metric.identity(1), LocalFunctional(seed), policy, {"s": list(s)}, {}, fd)


# --- genus one --------------------------------------------------------------

def genus0_densities(fd, d_max):
    """g^[0]_{a,d} for -1 <= d <= d_max, from the classical dispersionless recursion."""
    policy = TruncationPolicy(0)
    F = fd.F.with_policy(policy)
    seed = F.euler_apply(2)
    table = build_hierarchy(LocalFunctional(seed), fd.eta, d_max, policy, mode="classical")
    return {k: v.with_policy(fd.F.policy) for k, v in table.densities.items()}


def _d(p, *alphas):
    for a in alphas:
        p = p.dpartial(a, 0)
    return p


def genus1_correction(fd, target="G", genus0=None, classical_part=None):
    """The i*hbar correction of the Hamiltonian (D-2)^(-1) G_{1,1} (target "G")
    or of G_{a,d} (target ("Gad", a, d)).

    For d = 0 the term involving g^[0]_{a,d-1} is taken to be absent.
    """
    eta, N, pol = fd.eta, fd.eta.rank, fd.F.policy
    F, Gf = fd.F, fd.Gfun
    up = [(m, n, eta.up(m, n)) for m in range(1, N + 1) for n in range(1, N + 1) if eta.up(m, n)]
    dG = {m: _d(Gf, m) for m in range(1, N + 1)}
    ux = {a: DiffPoly.jet(N, a, 1, pol) for a in range(1, N + 1)}
    zero = DiffPoly.zero(N, pol)

    def raised(p, *idx):
        # d^3 F / du_idx du_m  eta^{m mu}, as a dict mu -> poly
        out = {}
        for m, mu, c in up:
            out[mu] = out.get(mu, zero) + _d(p, *idx, m).scale(c)
        return out

    if target == "G":
        total = zero
        for a, b in product(range(1, N + 1), repeat=2):
            coef = zero
            for m, n, c in up:
                coef = coef + _d(F, a, b, m, n).scale(c / 48)
            for mu, p in raised(F, a, b).items():
                coef = coef + p * dG[mu] / 2
            if coef:
                total = total + coef * ux[a] * ux[b]
        for m, n, c in up:
            total = total - _d(F, m, n).scale(c / 24)
    else:
        try:
            _, alpha, d = target
        except (TypeError, ValueError):
            raise DrlabError(f"unknown target {target!r}") from None
        if genus0 is None:
            genus0 = genus0_densities(fd, d)
        if (alpha, d) not in genus0 or (d >= 1 and (alpha, d - 1) not in genus0):
            raise DrlabError(f"missing genus-0 density for ({alpha}, {d})")
        g = genus0[(alpha, d)]
        inner = zero
        if d >= 1:
            h = genus0[(alpha, d - 1)]
            for m, n, c in up:
                inner = inner + _d(h, m, n).scale(c / 24) + _d(h, m) * dG[n].scale(c)
        total = zero
        for a, b in product(range(1, N + 1), repeat=2):
            coef = zero
            for m, n, c in up:
                coef = coef + _d(g, a, b, m, n).scale(c / 48) + _d(g, a, b, m) * dG[n].scale(c / 2)
            if inner:
                for mu, p in raised(F, a, b).items():
                    coef = coef + p * _d(inner, mu) / 2
            if coef:
                total = total + coef * ux[a] * ux[b]
        for m, n, c in up:
            total = total - _d(g, m, n).scale(c / 24)
    corr = total.times_eps_hbar(hbar=1).scale(GaussianRational(0, 1))
    if classical_part is not None:
        base = classical_part.density if isinstance(classical_part, LocalFunctional) else classical_part
        corr = corr + base
    return LocalFunctional(corr)


MODELS = {
    "trivial": trivial_model,
    "3spin": lambda policy=None: spin_model(3, policy),
    "4spin": lambda policy=None: spin_model(4, policy),
    "3spin-perturbed": perturbed_spin3,
}


def get_model(name, policy=None):
    if name in MODELS:
        return MODELS[name](policy)
    if name.startswith("rank1"):
        inside = name[5:].strip("()")
        s = [Fraction(x) for x in inside.split(",") if x.strip()] if inside else []
        m = rank1_seed(s, 3 if policy is None or policy.genus_cap is None else min(policy.genus_cap, 3))
        if policy is not None:
            m.seed = LocalFunctional(m.seed.density.with_policy(policy))
            m.policy = policy
        return m
    raise DrlabError(f"unknown model {name!r}; known: {', '.join(sorted(MODELS))}, rank1(s1,...)")
