"""Metrics, Hamiltonian operators, Poisson brackets, flows and polynomial Miura maps."""

from fractions import Fraction
from math import comb
import json

from .diffpoly import DiffPoly, LocalFunctional, key_genus_weight, parse
from .errors import IncompatibleError, InvalidTransformError


def _invert(matrix):
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ValueError("metric is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


class Metric:
    """Symmetric invertible rational matrix eta_{ab}; ``inv`` holds eta^{ab}.

    Indices are 1-based in the accessors ``low`` and ``up``.
    """

    def __init__(self, eta):
        self.eta = tuple(tuple(Fraction(x) for x in row) for row in eta)
        n = len(self.eta)
        if any(len(row) != n for row in self.eta):
            raise ValueError("metric must be square")
        if any(self.eta[i][j] != self.eta[j][i] for i in range(n) for j in range(n)):
            raise ValueError("metric must be symmetric")
        self.inv = tuple(tuple(row) for row in _invert(self.eta))

    @classmethod
    def antidiagonal(cls, n):
        return cls([[int(i + j == n - 1) for j in range(n)] for i in range(n)])

    @classmethod
    def identity(cls, n=1):
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def rank(self):
        return len(self.eta)

    def low(self, a, b):
        return self.eta[a - 1][b - 1]

    def up(self, a, b):
        return self.inv[a - 1][b - 1]

    def quadratic(self, policy):
        """The density 1/2 eta_{mn} u^m u^n."""
        n = self.rank
        total = DiffPoly.zero(n, policy)
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                if self.low(a, b):
                    total = total + DiffPoly.jet(n, a, 0, policy) * DiffPoly.jet(n, b, 0, policy) * (self.low(a, b) / 2)
        return total

    def lower_index(self, alpha, policy):
        """The density eta_{alpha mu} u^mu."""
        n = self.rank
        total = DiffPoly.zero(n, policy)
        for m in range(1, n + 1):
            if self.low(alpha, m):
                total = total + DiffPoly.jet(n, m, 0, policy).scale(self.low(alpha, m))
        return total

    def rows(self):
        return [[str(x) for x in row] for row in self.eta]

    def __eq__(self, other):
        return isinstance(other, Metric) and self.eta == other.eta

    def __hash__(self):
        return hash(self.eta)


# scalar differential operators: dict j -> DiffPoly, meaning sum_j coef_j * d^j

def op_apply(op, p):
    total = DiffPoly.zero(p.rank, p.policy)
    for j in sorted(op):
        total = total + op[j] * p.dx_n(j)
    return total


def op_compose(a, b):
    out = {}
    for i, ai in a.items():
        for j, bj in b.items():
            d = bj
            for k in range(i + 1):
                term = ai * d.scale(comb(i, k))
                if term:
                    p = i - k + j
                    out[p] = out[p] + term if p in out else term
                d = d.dx()
    return {k: v for k, v in out.items() if v}


def op_adjoint(a):
    out = {}
    for j, aj in a.items():
        d = aj
        for k in range(j + 1):
            term = d.scale((-1) ** j * comb(j, k))
            if term:
                p = j - k
                out[p] = out[p] + term if p in out else term
            d = d.dx()
    return {k: v for k, v in out.items() if v}


def op_add(a, b):
    out = dict(a)
    for j, bj in b.items():
        out[j] = out[j] + bj if j in out else bj
    return {k: v for k, v in out.items() if v}


class HamiltonianOperator:
    """Matrix of differential operators K^{ab} = sum_j K^{ab}_j d_x^j."""

    def __init__(self, rank, entries, policy):
        self.rank = rank
        self.policy = policy
        self.entries = {}
        for (a, b), op in entries.items():
            clean = {j: c for j, c in op.items() if c}
            if clean:
                self.entries[(a, b)] = clean

    @classmethod
    def eta_dx(cls, metric, policy):
        n = metric.rank
        entries = {}
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                if metric.up(a, b):
                    entries[(a, b)] = {1: DiffPoly.const(n, metric.up(a, b), policy)}
        return cls(n, entries, policy)

    def entry(self, a, b):
        return self.entries.get((a, b), {})

    def apply_row(self, alpha, vector):
        """sum_mu K^{alpha mu}(vector[mu])."""
        total = DiffPoly.zero(self.rank, self.policy)
        for mu in range(1, self.rank + 1):
            op = self.entry(alpha, mu)
            if op:
                total = total + op_apply(op, vector[mu])
        return total

    def adjoint(self):
        return HamiltonianOperator(self.rank, {(b, a): op_adjoint(op) for (a, b), op in self.entries.items()}, self.policy)

    def is_skew_adjoint(self):
        adj = self.adjoint()
        keys = set(self.entries) | set(adj.entries)
        return all(not op_add(self.entry(*k), adj.entry(*k)) for k in keys)

    def __eq__(self, other):
        if not isinstance(other, HamiltonianOperator) or self.rank != other.rank:
            return False
        keys = set(self.entries) | set(other.entries)
        return all(self.entry(*k) == other.entry(*k) for k in keys)

    def to_json(self):
        rows = []
        for (a, b) in sorted(self.entries):
            for j in sorted(self.entries[(a, b)]):
                rows.append({"alpha": a, "beta": b, "dxPower": j, "coefficient": str(self.entries[(a, b)][j])})
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, text, rank, policy):
        entries = {}
        for row in json.loads(text):
            op = entries.setdefault((row["alpha"], row["beta"]), {})
            op[row["dxPower"]] = parse(row["coefficient"], rank, policy)
        return cls(rank, entries, policy)


def _check_compatible(*items):
    ranks = {x.rank for x in items}
    policies = {x.policy for x in items}
    if len(ranks) > 1:
        raise IncompatibleError(f"rank mismatch: {sorted(ranks)}")
    if len(policies) > 1:
        raise IncompatibleError("policy mismatch")


def poisson_bracket(F, G, K):
    """{F, G}_K = int dF/du^mu K^{mu nu} dG/du^nu dx."""
    _check_compatible(F, G, K)
    dG = {nu: G.var_deriv(nu) for nu in range(1, K.rank + 1)}
    total = DiffPoly.zero(K.rank, K.policy)
    for mu in range(1, K.rank + 1):
        dF = F.var_deriv(mu)
        if dF:
            total = total + dF * K.apply_row(mu, dG)
    return LocalFunctional(total)


def hamiltonian_flow(f, G, K):
    """d f / d tau = sum (df/du^a_k) d_x^k (K^{a mu} dG/du^mu)."""
    _check_compatible(f, G, K)
    dG = {nu: G.var_deriv(nu) for nu in range(1, K.rank + 1)}
    total = DiffPoly.zero(K.rank, K.policy)
    for alpha in range(1, K.rank + 1):
        top = f.max_order(alpha)
        if top < 0:
            continue
        flow = K.apply_row(alpha, dG)
        for k in range(top + 1):
            part = f.dpartial(alpha, k)
            if part:
                total = total + part * flow
            flow = flow.dx()
    return total


class MiuraTransform:
    """Polynomial change of variables u~^alpha = images[alpha](u), identity at leading order."""

    def __init__(self, rank, images, policy):
        self.rank = rank
        self.policy = policy
        self.images = {}
        for a in range(1, rank + 1):
            img = images.get(a, DiffPoly.jet(rank, a, 0, policy))
            if img.rank != rank or img.policy != policy:
                raise IncompatibleError("Miura image has wrong rank or policy")
            rest = img - DiffPoly.jet(rank, a, 0, policy)
            bad = rest.filter(lambda k: key_genus_weight(k) == 0)
            if bad:
                raise InvalidTransformError(f"leading part of component {a} is not the identity: {bad}")
            self.images[a] = img
        self._inverse = None

    @classmethod
    def identity(cls, rank, policy):
        return cls(rank, {}, policy)

    def inverse_images(self):
        if self._inverse is None:
            cap = self.policy.genus_cap
            if cap is None:
                raise InvalidTransformError("inverting a Miura map needs a finite genus cap")
            ident = {a: DiffPoly.jet(self.rank, a, 0, self.policy) for a in range(1, self.rank + 1)}
            corr = {a: self.images[a] - ident[a] for a in ident}
            current = dict(ident)
            for _ in range(2 * cap + 1):
                nxt = {a: ident[a] - corr[a].substitute(current) for a in ident}
                if nxt == current:
                    break
                current = nxt
            self._inverse = current
        return self._inverse

    def apply(self, f, direction="forward"):
        if direction == "forward":
            return f.substitute(self.images)
        if direction == "inverse":
            return f.substitute(self.inverse_images())
        raise ValueError(f"unknown direction {direction!r}")


def miura_apply(f, M, direction="forward"):
    return M.apply(f, direction)


def miura_transform_operator(K, M):
    """K'^{ab} = sum (du~^a/du^m_p) d^p o K^{mn} o (-d)^q o (du~^b/du^n_q), normal ordered.

    Coefficients of the result are expressed in the original variables.
    """
    _check_compatible(K, M)
    n, pol = K.rank, K.policy
    left = {}
    for a in range(1, n + 1):
        img = M.images[a]
        for m in range(1, n + 1):
            top = img.max_order(m)
            op = {}
            for p in range(top + 1):
                c = img.dpartial(m, p)
                if c:
                    op[p] = c
            if op:
                left[(a, m)] = op
    right = {(m, b): op_adjoint(op) for (b, m), op in left.items()}
    entries = {}
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            total = {}
            for m in range(1, n + 1):
                lam = left.get((a, m))
                if not lam:
                    continue
                for nu in range(1, n + 1):
                    k = K.entry(m, nu)
                    rho = right.get((nu, b))
                    if k and rho:
                        total = op_add(total, op_compose(op_compose(lam, k), rho))
            if total:
                entries[(a, b)] = total
    return HamiltonianOperator(n, entries, pol)
