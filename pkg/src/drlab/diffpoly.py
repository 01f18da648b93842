"""Graded differential polynomials in u^alpha_k, eps and hbar, and local functionals.

A monomial is stored as a key ``(eps_pow, hbar_pow, jets)`` where ``jets`` is
a sorted tuple of encoded jet variables with repetition.  A jet variable
u^alpha_k is encoded as the integer ``(alpha << 10) | k``.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional
import re

from .coeff import GaussianRational, as_gr, ONE, ZERO
from .errors import ExactnessError, IncompatibleError, ParseError, WeightResonanceError

_SHIFT = 10
_MASK = (1 << _SHIFT) - 1


def encode(alpha, k):
    if alpha < 1 or k < 0 or k > _MASK:
        raise ValueError(f"invalid jet variable u[{alpha},{k}]")
    return (alpha << _SHIFT) | k


def alpha_of(v):
    return v >> _SHIFT


def order_of(v):
    return v & _MASK


class JetVariable(NamedTuple):
    alpha: int
    order: int


class Monomial(NamedTuple):
    jets: tuple
    eps_pow: int
    hbar_pow: int

    @property
    def degree(self):
        return sum(j.order for j in self.jets) - self.eps_pow - 2 * self.hbar_pow

    @property
    def d_weight(self):
        return len(self.jets) + self.eps_pow + 2 * self.hbar_pow


@dataclass(frozen=True)
class TruncationPolicy:
    """Keep monomials with eps_pow + 2*hbar_pow <= 2*genus_cap (and |jets| <= u_degree_cap).

    ``None`` means no cap.
    """

    genus_cap: Optional[int] = None
    u_degree_cap: Optional[int] = None

    @property
    def max_weight(self):
        return None if self.genus_cap is None else 2 * self.genus_cap

    def admits(self, eps, hbar, njets):
        if self.genus_cap is not None and eps + 2 * hbar > 2 * self.genus_cap:
            return False
        if self.u_degree_cap is not None and njets > self.u_degree_cap:
            return False
        return True


NO_CAP = TruncationPolicy()


def key_degree(key):
    eps, hbar, jets = key
    return sum(v & _MASK for v in jets) - eps - 2 * hbar


def key_d_weight(key):
    return len(key[2]) + key[0] + 2 * key[1]


def key_genus_weight(key):
    return key[0] + 2 * key[1]


@lru_cache(maxsize=200_000)
def _dx_jets(jets):
    out = []
    prev = None
    for idx, v in enumerate(jets):
        if v == prev:
            continue
        prev = v
        e = jets.count(v)
        rest = jets[:idx] + jets[idx + 1:]
        out.append((tuple(sorted(rest + (v + 1,))), e))
    return tuple(out)


def _mul_jets(a, b):
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def _remove_one(jets, v):
    i = jets.index(v)
    return jets[:i] + jets[i + 1:]


class DiffPoly:
    """Sparse differential polynomial with coefficients in Q(i).

    Values are immutable; every operation returns a new polynomial under the
    same rank and truncation policy.
    """

    __slots__ = ("rank", "policy", "_terms")

    def __init__(self, rank, terms=None, policy=NO_CAP):
        self.rank = rank
        self.policy = policy
        clean = {}
        if terms:
            for key, c in terms.items():
                c = as_gr(c)
                if not c:
                    continue
                eps, hbar, jets = key
                jets = tuple(sorted(jets))
                for v in jets:
                    if not 1 <= alpha_of(v) <= rank:
                        raise IncompatibleError(f"component {alpha_of(v)} outside rank {rank}")
                if not policy.admits(eps, hbar, len(jets)):
                    continue
                k = (eps, hbar, jets)
                clean[k] = clean[k] + c if k in clean else c
            clean = {k: c for k, c in clean.items() if c}
        self._terms = clean

    @classmethod
    def _make(cls, rank, policy, terms):
        obj = object.__new__(cls)
        obj.rank = rank
        obj.policy = policy
        obj._terms = terms
        return obj

    def _new(self, terms):
        return DiffPoly._make(self.rank, self.policy, terms)

    # constructors
    @classmethod
    def zero(cls, rank, policy=NO_CAP):
        return cls._make(rank, policy, {})

    @classmethod
    def const(cls, rank, c, policy=NO_CAP, eps=0, hbar=0):
        return cls(rank, {(eps, hbar, ()): c}, policy)

    @classmethod
    def jet(cls, rank, alpha, k=0, policy=NO_CAP):
        return cls(rank, {(0, 0, (encode(alpha, k),)): ONE}, policy)

    # basic protocol
    def __reduce__(self):
        return (DiffPoly._make, (self.rank, self.policy, self._terms))

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def items(self):
        return self._terms.items()

    def keys(self):
        return self._terms.keys()

    def terms(self):
        """Yield (Monomial, coefficient) pairs in printing order."""
        for key in sorted(self._terms, key=_print_order):
            eps, hbar, jets = key
            mono = Monomial(tuple(JetVariable(alpha_of(v), order_of(v)) for v in jets), eps, hbar)
            yield mono, self._terms[key]

    def coefficient(self, jets=(), eps=0, hbar=0):
        """Coefficient of a monomial given as an iterable of (alpha, k) pairs."""
        key = (eps, hbar, tuple(sorted(encode(a, k) for a, k in jets)))
        return self._terms.get(key, ZERO)

    def __eq__(self, other):
        if isinstance(other, DiffPoly):
            return self.rank == other.rank and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self._terms == ({(0, 0, ()): as_gr(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        return hash((self.rank, frozenset(self._terms.items())))

    def _check(self, other):
        if self.rank != other.rank:
            raise IncompatibleError(f"rank mismatch: {self.rank} vs {other.rank}")
        if self.policy != other.policy:
            raise IncompatibleError(f"policy mismatch: {self.policy} vs {other.policy}")

    def _coerce(self, other):
        if isinstance(other, DiffPoly):
            self._check(other)
            return other
        return DiffPoly.const(self.rank, other, self.policy)

    # ring operations
    def __add__(self, other):
        other = self._coerce(other)
        res = dict(self._terms)
        for k, c in other._terms.items():
            if k in res:
                s = res[k] + c
                if s:
                    res[k] = s
                else:
                    del res[k]
            else:
                res[k] = c
        return self._new(res)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c):
        c = as_gr(c)
        if not c:
            return self._new({})
        return self._new({k: v * c for k, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            return self.scale(other)
        self._check(other)
        cap = self.policy.max_weight
        ucap = self.policy.u_degree_cap
        res = {}
        right = sorted(other._terms.items(), key=lambda kv: kv[0][0] + 2 * kv[0][1])
        for (e1, h1, j1), c1 in self._terms.items():
            w1 = e1 + 2 * h1
            for (e2, h2, j2), c2 in right:
                if cap is not None and w1 + e2 + 2 * h2 > cap:
                    break
                if ucap is not None and len(j1) + len(j2) > ucap:
                    continue
                key = (e1 + e2, h1 + h2, _mul_jets(j1, j2))
                c = c1 * c2
                if key in res:
                    res[key] = res[key] + c
                else:
                    res[key] = c
        return self._new({k: c for k, c in res.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(ONE / as_gr(other))

    def __pow__(self, n):
        result = DiffPoly.const(self.rank, 1, self.policy)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def times_eps_hbar(self, eps=0, hbar=0):
        """Multiply by eps^eps * hbar^hbar (truncating)."""
        res = {}
        for (e, h, j), c in self._terms.items():
            if self.policy.admits(e + eps, h + hbar, len(j)):
                res[(e + eps, h + hbar, j)] = c
        return self._new(res)

    # structure
    def with_policy(self, policy):
        return DiffPoly(self.rank, self._terms, policy)

    def filter(self, pred):
        """Keep the terms whose key (eps, hbar, jets) satisfies ``pred``."""
        return self._new({k: c for k, c in self._terms.items() if pred(k)})

    def part(self, eps=None, hbar=None):
        """Terms with the given eps and/or hbar exponents (exponents kept)."""
        return self.filter(lambda k: (eps is None or k[0] == eps) and (hbar is None or k[1] == hbar))

    def classical(self):
        return self.part(hbar=0)

    def dispersionless(self):
        return self.part(eps=0, hbar=0)

    def constant_term(self):
        return self.filter(lambda k: not k[2])

    def without_constant(self):
        return self.filter(lambda k: bool(k[2]))

    def homogeneous_part(self, udeg):
        return self.filter(lambda k: len(k[2]) == udeg)

    def max_order(self, alpha=None):
        best = -1
        for _, _, jets in self._terms:
            for v in jets:
                if alpha is None or alpha_of(v) == alpha:
                    best = max(best, v & _MASK)
        return best

    def variables(self):
        out = set()
        for _, _, jets in self._terms:
            out.update(jets)
        return sorted(out)

    def is_hierarchy_admissible(self):
        return all(key_degree(k) <= 0 for k in self._terms)

    def degrees(self):
        return sorted({key_degree(k) for k in self._terms})

    # derivations
    def dx(self):
        res = {}
        for (e, h, jets), c in self._terms.items():
            for nj, m in _dx_jets(jets):
                key = (e, h, nj)
                add = c * m if m != 1 else c
                if key in res:
                    res[key] = res[key] + add
                else:
                    res[key] = add
        return self._new({k: c for k, c in res.items() if c})

    def dx_n(self, n):
        f = self
        for _ in range(n):
            f = f.dx()
        return f

    def dpartial(self, alpha, k=0):
        return self.dpartial_var(encode(alpha, k))

    def dpartial_var(self, v):
        res = {}
        for (e, h, jets), c in self._terms.items():
            m = jets.count(v)
            if m:
                key = (e, h, _remove_one(jets, v))
                res[key] = res[key] + c * m if key in res else c * m
        return self._new({k: c for k, c in res.items() if c})

    def var_deriv(self, alpha):
        top = self.max_order(alpha)
        if top < 0:
            return self._new({})
        result = self.dpartial(alpha, top)
        for k in range(top - 1, -1, -1):
            result = self.dpartial(alpha, k) - result.dx()
        return result

    def euler_apply(self, shift):
        """Apply (D - shift) monomial-wise, D the Euler operator of the D-weight."""
        res = {}
        for key, c in self._terms.items():
            w = key_d_weight(key) - shift
            if w:
                res[key] = c * w
        return self._new(res)

    def euler_invert(self, shift, strict=True):
        """Apply (D - shift)^-1; returns (result, obstruction part)."""
        res, obstruction = {}, {}
        for key, c in self._terms.items():
            w = key_d_weight(key) - shift
            if w:
                res[key] = c * Fraction(1, w)
            else:
                obstruction[key] = c
        obs = self._new(obstruction)
        if strict and obstruction:
            raise WeightResonanceError(f"monomials of D-weight {shift}: {obs}", obs)
        return self._new(res), obs

    def antiderivative(self, check=True):
        """Return g with dx(g) = self - constant term and g(0) = 0."""
        if check:
            witness = {a: self.var_deriv(a) for a in range(1, self.rank + 1)}
            witness = {a: w for a, w in witness.items() if w}
            if witness:
                raise ExactnessError("polynomial is not a total x-derivative", witness)
        f = self.without_constant()
        g = self._new({})
        while f:
            top = f.max_order()
            if top == 0:
                raise ExactnessError("nonzero remainder without derivatives", {0: f})
            step = {}
            for (e, h, jets), c in f._terms.items():
                tops = [v for v in jets if v & _MASK == top]
                if not tops:
                    continue
                if len(tops) > 1:
                    raise ExactnessError("top-order variables appear nonlinearly", {0: f})
                v = tops[0]
                rest = _remove_one(jets, v)
                d = sum(1 for w in rest if w & _MASK == top - 1)
                key = (e, h, tuple(sorted(rest + (v - 1,))))
                add = c * Fraction(1, d + 1)
                step[key] = step[key] + add if key in step else add
            piece = self._new({k: c for k, c in step.items() if c})
            f = f - piece.dx()
            g = g + piece
            if f and f.max_order() >= top:
                raise ExactnessError("integration by parts did not reduce the order", {0: f})
        return g

    def evaluate(self, values):
        """Substitute numbers for jet variables.

        ``values`` maps (alpha, k) to a coefficient; unlisted variables are 0.
        The result keeps its eps/hbar dependence.
        """
        enc = {encode(a, k): as_gr(c) for (a, k), c in values.items()}
        res = {}
        for (e, h, jets), c in self._terms.items():
            val = c
            for v in jets:
                x = enc.get(v)
                if x is None:
                    val = ZERO
                    break
                val = val * x
            if val:
                key = (e, h, ())
                res[key] = res[key] + val if key in res else val
        return self._new({k: c for k, c in res.items() if c})

    def substitute(self, images):
        """Replace every u^alpha_k by dx^k(images[alpha]) (components not listed are kept)."""
        cache = {}

        def image(v):
            if v not in cache:
                a, k = alpha_of(v), order_of(v)
                base = images.get(a)
                cache[v] = DiffPoly.jet(self.rank, a, k, self.policy) if base is None else base.dx_n(k)
            return cache[v]

        one = DiffPoly.const(self.rank, 1, self.policy)
        total = self._new({})
        for (e, h, jets), c in self._terms.items():
            term = one.times_eps_hbar(e, h).scale(c)
            for v in jets:
                if not term:
                    break
                term = term * image(v)
            total = total + term
        return total

    # text
    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"DiffPoly({to_text(self)!r}, rank={self.rank})"


def _print_order(key):
    eps, hbar, jets = key
    return (hbar, eps, len(jets), jets)


def _factor_text(key):
    eps, hbar, jets = key
    parts = []
    if eps:
        parts.append("eps" if eps == 1 else f"eps^{eps}")
    if hbar:
        parts.append("hbar" if hbar == 1 else f"hbar^{hbar}")
    i = 0
    while i < len(jets):
        v = jets[i]
        m = jets.count(v)
        name = f"u[{alpha_of(v)},{order_of(v)}]"
        parts.append(name if m == 1 else f"{name}^{m}")
        i += m
    return parts


def to_text(p):
    """Render a polynomial in the grammar ``coef * eps^a * hbar^b * u[alpha,k]^m``."""
    if not p._terms:
        return "0"
    out = []
    for key in sorted(p._terms, key=_print_order):
        c = p._terms[key]
        factors = _factor_text(key)
        negative = False
        if c.im and c.re:
            ctext = f"({c})"
        else:
            negative = (c.re if c.re else c.im) < 0
            ctext = str(-c if negative else c)
        if factors and ctext == "1":
            body = " * ".join(factors)
        else:
            body = " * ".join([ctext] + factors)
        if not out:
            out.append(("-" if negative else "") + body)
        else:
            out.append((" - " if negative else " + ") + body)
    return "".join(out)


_TOKEN = re.compile(r"\s*(?:(\d+)|(eps|hbar|u|I)|(.))")


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        num, name, sym = m.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif name is not None:
            tokens.append(("name", name))
        elif sym is not None:
            if sym.isspace():
                pos = m.end()
                continue
            if sym not in "+-*/^()[],":
                raise ParseError(f"unexpected character {sym!r} in {text!r}")
            tokens.append(("sym", sym))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text, rank, policy):
        self.tokens = _tokenize(text)
        self.i = 0
        self.rank = rank
        self.policy = policy
        self.text = text

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or kind} at token {self.i} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise ParseError("empty polynomial text")
        result = self.expr()
        if self.i != len(self.tokens):
            raise ParseError(f"trailing input at token {self.i} in {self.text!r}")
        return result

    def expr(self):
        sign = 1
        if self.peek() in (("sym", "+"), ("sym", "-")):
            sign = -1 if self.take()[1] == "-" else 1
        total = self.term().scale(sign)
        while self.peek() in (("sym", "+"), ("sym", "-")):
            op = self.take()[1]
            t = self.term()
            total = total + t if op == "+" else total - t
        return total

    def term(self):
        value = self.factor()
        while self.peek() in (("sym", "*"), ("sym", "/")):
            op = self.take()[1]
            if op == "*":
                value = value * self.factor()
            else:
                den = self.take("num")[1]
                if den == 0:
                    raise ParseError("division by zero")
                value = value.scale(Fraction(1, den))
        return value

    def factor(self):
        base = self.atom()
        if self.peek() == ("sym", "^"):
            self.take()
            base = base ** self.take("num")[1]
        return base

    def atom(self):
        kind, val = self.peek()
        r, pol = self.rank, self.policy
        if kind == "num":
            self.take()
            return DiffPoly.const(r, val, pol)
        if kind == "name":
            self.take()
            if val == "I":
                return DiffPoly.const(r, GaussianRational(0, 1), pol)
            if val == "eps":
                return DiffPoly.const(r, 1, pol, eps=1)
            if val == "hbar":
                return DiffPoly.const(r, 1, pol, hbar=1)
            self.take("sym", "[")
            alpha = self.take("num")[1]
            self.take("sym", ",")
            k = self.take("num")[1]
            self.take("sym", "]")
            if not 1 <= alpha <= r:
                raise ParseError(f"component u[{alpha},{k}] outside rank {r}")
            return DiffPoly.jet(r, alpha, k, pol)
        if (kind, val) == ("sym", "("):
            self.take()
            inner = self.expr()
            self.take("sym", ")")
            return inner
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")


def parse(text, rank=None, policy=NO_CAP):
    """Parse polynomial text; ``rank`` defaults to the largest component index seen."""
    if rank is None:
        found = [int(a) for a in re.findall(r"u\s*\[\s*(\d+)", text)]
        rank = max(found, default=1)
    return _Parser(text, rank, policy).parse()


class Ring:
    """Convenience factory for polynomials of a fixed rank and policy."""

    def __init__(self, rank, policy=NO_CAP):
        self.rank = rank
        self.policy = policy

    def u(self, alpha=1, k=0):
        return DiffPoly.jet(self.rank, alpha, k, self.policy)

    def const(self, c):
        return DiffPoly.const(self.rank, c, self.policy)

    @property
    def eps(self):
        return DiffPoly.const(self.rank, 1, self.policy, eps=1)

    @property
    def hbar(self):
        return DiffPoly.const(self.rank, 1, self.policy, hbar=1)

    @property
    def i(self):
        return DiffPoly.const(self.rank, GaussianRational(0, 1), self.policy)

    def zero(self):
        return DiffPoly.zero(self.rank, self.policy)

    def parse(self, text):
        return parse(text, self.rank, self.policy)

    def integrate(self, f):
        return LocalFunctional(f)


class LocalFunctional:
    """The class of a density modulo total x-derivatives and constants.

    The u-free part of the density is dropped from ``density`` and kept in
    ``constant`` for callers that need it.
    """

    __slots__ = ("density", "constant")

    def __init__(self, density):
        self.density = density.without_constant()
        self.constant = density.constant_term()

    @property
    def rank(self):
        return self.density.rank

    @property
    def policy(self):
        return self.density.policy

    def var_deriv(self, alpha):
        return self.density.var_deriv(alpha)

    def dpartial(self, alpha):
        """The functional of d(density)/du^alpha_0, which is well defined on classes."""
        return LocalFunctional(self.density.dpartial(alpha, 0))

    def __add__(self, other):
        return LocalFunctional(self.density + other.density)

    def __sub__(self, other):
        return LocalFunctional(self.density - other.density)

    def __neg__(self):
        return LocalFunctional(-self.density)

    def scale(self, c):
        return LocalFunctional(self.density.scale(c))

    def is_zero(self):
        return all(not self.density.var_deriv(a) for a in range(1, self.rank + 1))

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        return functional_equal(self, other)

    __hash__ = None

    def __str__(self):
        return f"int({self.density}) dx"

    def __repr__(self):
        return f"LocalFunctional({self.density!s})"


def integrate(f):
    return LocalFunctional(f)


def functional_equal(F, G):
    if F.rank != G.rank:
        raise IncompatibleError("rank mismatch")
    if F.policy != G.policy:
        raise IncompatibleError("policy mismatch")
    return (F - G).is_zero()


def dx(f):
    return f.dx()


def dpartial(f, v):
    alpha, k = v
    return f.dpartial(alpha, k)


def var_deriv(f, alpha):
    return f.var_deriv(alpha)


def euler_apply(f, shift, invert=False):
    if invert:
        return f.euler_invert(shift, strict=True)[0]
    return f.euler_apply(shift)


def antiderivative(f):
    return f.antiderivative()
