"""Stable rooted trees with marked legs, the coefficient C, splitting and contraction.

A tree is stored through half-edges: ``hv[h]`` is the vertex of half-edge h and
``iota[h]`` its partner (legs are fixed points carrying a marking in ``marks``).
The root is the vertex of the leg marked 0.  Isomorphism classes fixing the
markings are compared through the nested form (genus, legs, children).
"""

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
import json

from .errors import InvalidMoveError
from .parallel import parallel_map


class StableTree:
    def __init__(self, genus, hv, iota, marks):
        self.genus = list(genus)
        self.hv = list(hv)
        self.iota = list(iota)
        self.marks = dict(marks)
        self._check()

    def _check(self):
        n_v = len(self.genus)
        if sorted(self.marks.values()) != list(range(len(self.marks))):
            raise ValueError("legs must be marked 0..n")
        edges = [h for h in range(len(self.hv)) if h not in self.marks]
        if any(self.iota[self.iota[h]] != h or self.iota[h] == h for h in edges):
            raise ValueError("iota must pair the non-leg half-edges")
        if len(edges) != 2 * (n_v - 1):
            raise ValueError("a tree on m vertices has m - 1 edges")
        seen = {self.root}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for h in self.edges_at(v):
                w = self.hv[self.iota[h]]
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n_v:
            raise ValueError("graph is not connected")
        bad = [v for v in range(n_v) if self.r(v) <= 0]
        if bad:
            raise ValueError(f"unstable vertex {bad[0]}")

    # structure
    @property
    def root(self):
        leg0 = next(h for h, i in self.marks.items() if i == 0)
        return self.hv[leg0]

    @property
    def m(self):
        return len(self.genus)

    @property
    def n(self):
        return len(self.marks) - 1

    @property
    def total_genus(self):
        return sum(self.genus)

    def half_edges_at(self, v):
        return [h for h, w in enumerate(self.hv) if w == v]

    def legs_at(self, v):
        return sorted(self.marks[h] for h in self.half_edges_at(v) if h in self.marks)

    def edges_at(self, v):
        return [h for h in self.half_edges_at(v) if h not in self.marks]

    def parent_half(self, v):
        """The half-edge at v pointing towards the root (None at the root)."""
        if v == self.root:
            return None
        return self._parents()[v]

    def _parents(self):
        par = {}
        stack = [self.root]
        seen = {self.root}
        while stack:
            v = stack.pop()
            for h in self.edges_at(v):
                w = self.hv[self.iota[h]]
                if w not in seen:
                    seen.add(w)
                    par[w] = self.iota[h]
                    stack.append(w)
        return par

    def out_edges(self, v):
        """Non-leg half-edges at v directed away from the root."""
        p = self.parent_half(v)
        return [h for h in self.edges_at(v) if h != p]

    def out_half_edges(self, v):
        """H'_+[v]: half-edges at v directed away from the root, leg 0 excluded."""
        p = self.parent_half(v)
        return [h for h in self.half_edges_at(v) if h != p and self.marks.get(h) != 0]

    def children(self, v):
        return [self.hv[self.iota[h]] for h in self.out_edges(v)]

    def valence(self, v):
        return len(self.half_edges_at(v))

    def r(self, v):
        return 2 * self.genus[v] - 2 + self.valence(v)

    def descendants(self, v):
        out = [v]
        for c in self.children(v):
            out.extend(self.descendants(c))
        return out

    def desc_sum(self, v):
        return sum(self.r(w) for w in self.descendants(v))

    # forms
    def nested(self, v=None):
        v = self.root if v is None else v
        return (self.genus[v], tuple(self.legs_at(v)), tuple(sorted(self.nested(c) for c in self.children(v))))

    def canonical(self):
        return self.nested()

    def __eq__(self, other):
        return isinstance(other, StableTree) and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        return f"StableTree({self.canonical()})"

    @classmethod
    def from_nested(cls, form):
        genus, hv, iota, marks = [], [], [], {}

        def build(node, parent_half):
            g, legs, kids = node
            v = len(genus)
            genus.append(g)
            if parent_half is not None:
                h = len(hv)
                hv.append(v)
                iota.append(parent_half)
                iota[parent_half] = h
            for mark in legs:
                h = len(hv)
                hv.append(v)
                iota.append(h)
                marks[h] = mark
            for kid in kids:
                h = len(hv)
                hv.append(v)
                iota.append(None)
                build(kid, h)

        build(form, None)
        return cls(genus, hv, iota, marks)

    def to_json(self, v=None):
        v = self.root if v is None else v
        return {"genus": self.genus[v], "legs": self.legs_at(v), "children": [self.to_json(c) for c in sorted(self.children(v), key=lambda c: self.nested(c))]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)

        def conv(d):
            return (int(d["genus"]), tuple(sorted(d.get("legs", []))), tuple(sorted(conv(c) for c in d.get("children", []))))

        return cls.from_nested(conv(data))

    def dumps(self):
        return json.dumps(self.to_json())

    def is_admissible(self):
        mins = {}
        for v in range(self.m):
            legs = [i for i in self.legs_at(v) if i != 0]
            if not legs:
                return False
            mins[v] = min(legs)
        return all(mins[v] < mins[w] for v in range(self.m) for w in self.descendants(v) if w != v)


def _stable(g, valence):
    return 2 * g - 2 + valence > 0


@lru_cache(maxsize=None)
def _rooted(g, legs, m, has_parent):
    """Nested forms of rooted trees with m vertices, total genus g and the given legs."""
    out = set()
    legs_list = sorted(legs)
    for g0 in range(g + 1):
        for k in range(len(legs_list) + 1):
            for L0 in combinations(legs_list, k):
                rest = legs - frozenset(L0)
                for forest in _forests(g - g0, rest, m - 1):
                    if _stable(g0, len(L0) + len(forest) + int(has_parent)):
                        out.add((g0, L0, forest))
    return frozenset(out)


@lru_cache(maxsize=None)
def _forests(g, legs, m):
    """Sorted tuples of child forms using exactly genus g, the given legs and m vertices."""
    if m == 0:
        return frozenset({()}) if g == 0 and not legs else frozenset()
    out = set()
    legs_list = sorted(legs)
    for m1 in range(1, m + 1):
        for g1 in range(g + 1):
            for k in range(len(legs_list) + 1):
                for L1 in combinations(legs_list, k):
                    first = _rooted(g1, frozenset(L1), m1, True)
                    if not first:
                        continue
                    others = _forests(g - g1, legs - frozenset(L1), m - m1)
                    for a in first:
                        for rest in others:
                            out.add(tuple(sorted((a,) + rest)))
    return frozenset(out)


def enumerate_trees(g, n, m, admissible=False):
    """ST^m_{g,n+1}: stable trees of genus g with m vertices and legs 0..n, rooted at leg 0."""
    if 2 * g - 2 + n + 1 <= 0 or m < 1:
        return []
    legs = frozenset(range(1, n + 1))
    forms = set()
    for form in _rooted(g, legs | {0}, m, False):
        if 0 in form[1]:
            forms.add(form)
    trees = [StableTree.from_nested(f) for f in sorted(forms)]
    if admissible:
        trees = [t for t in trees if t.is_admissible()]
    return trees


def relabel(t, perm):
    """Apply a permutation of the markings (dict old -> new, 0 fixed)."""
    return StableTree(t.genus, t.hv, t.iota, {h: perm.get(i, i) for h, i in t.marks.items()})


def coefficient_C(t):
    out = Fraction(1)
    for v in range(t.m):
        out *= Fraction(t.r(v), t.desc_sum(v))
    return out


def coefficient_C_leaves_first(t):
    """Same product, accumulating descendant sums bottom-up in one pass."""
    out = Fraction(1)

    def visit(v):
        nonlocal out
        s = t.r(v) + sum(visit(c) for c in t.children(v))
        out *= Fraction(t.r(v), s)
        return s

    visit(t.root)
    return out


def split(t, v, g1, I):
    """Spl(t, v, g1, I); I is a subset of the outgoing half-edges of v (leg 0 excluded).

    The first vertex (genus g1) keeps the half-edge towards the root and I; the second
    gets the rest of the outgoing half-edges.  The returned tree has ``new_edge`` set to
    the half-edge at v of the new edge.
    """
    out = set(t.out_half_edges(v))
    I = set(I)
    if not I <= out:
        raise InvalidMoveError("I must consist of outgoing half-edges at v")
    g2 = t.genus[v] - g1
    Ic = out - I
    if not 0 <= g1 <= t.genus[v]:
        raise InvalidMoveError("g1 out of range")
    if not (2 * g1 + len(I) > 0 and 2 * g2 + len(Ic) - 1 > 0):
        raise InvalidMoveError("split violates stability")
    genus = t.genus + [g2]
    genus[v] = g1
    w = len(t.genus)
    hv = [w if h in Ic else x for h, x in enumerate(t.hv)]
    iota = list(t.iota)
    a, b = len(hv), len(hv) + 1
    hv += [v, w]
    iota += [b, a]
    res = StableTree(genus, hv, iota, t.marks)
    res.new_edge = a
    return res


def contract(t, v, h):
    """Con(t, v, h): contract the edge of the non-leg half-edge h at v."""
    if t.m < 2:
        raise InvalidMoveError("contraction needs at least two vertices")
    if h in t.marks or t.hv[h] != v:
        raise InvalidMoveError("h must be an edge half-edge at v")
    w = t.hv[t.iota[h]]
    keep = [x for x in range(len(t.hv)) if x not in (h, t.iota[h])]
    new_index = {x: i for i, x in enumerate(keep)}
    vertices = [x for x in range(t.m) if x != w]
    vmap = {x: i for i, x in enumerate(vertices)}
    vmap[w] = vmap[v]
    genus = [t.genus[x] for x in vertices]
    genus[vmap[v]] += t.genus[w]
    hv = [vmap[t.hv[x]] for x in keep]
    iota = [new_index[t.iota[x]] for x in keep]
    marks = {new_index[x]: i for x, i in t.marks.items()}
    return StableTree(genus, hv, iota, marks)


def identity_closed_form(t):
    """Both sides of B * r(v~)/R~ * prod r(c_h)/R_h * (1 - sum R_h/R) = C, with v the vertex of leg 1."""
    leg1 = next(h for h, i in t.marks.items() if i == 1)
    v = t.hv[leg1]
    R = t.desc_sum(v)
    kids = t.children(v)
    Rh = {c: t.desc_sum(c) for c in kids}
    skip = {v, *kids}
    head = Fraction(1)
    if v != t.root:
        vt = t.hv[t.iota[t.parent_half(v)]]
        skip.add(vt)
        head = Fraction(t.r(vt), t.desc_sum(vt))
    B = Fraction(1)
    for x in range(t.m):
        if x not in skip:
            B *= Fraction(t.r(x), t.desc_sum(x))
    prod = Fraction(1)
    for c in kids:
        prod *= Fraction(t.r(c), Rh[c])
    lhs = B * head * prod * (1 - sum(Fraction(Rh[c], R) for c in kids))
    return lhs, coefficient_C(t)


def identity_by_contraction(t):
    """Sum of the contributions of the contracted trees that split back to t, against C(t)."""
    leg1 = next(h for h, i in t.marks.items() if i == 1)
    v = t.hv[leg1]
    total = Fraction(0)
    if v != t.root:
        hm = t.parent_half(v)
        vt = t.hv[t.iota[hm]]
        merged = contract(t, v, hm)
        total += Fraction(t.r(vt), t.r(vt) + t.r(v)) * coefficient_C(merged)
    else:
        tilde = Fraction(1)
        for x in range(t.m):
            if x != t.root:
                tilde *= Fraction(t.r(x), t.desc_sum(x))
        total += tilde
    for h in t.out_edges(v):
        c = t.hv[t.iota[h]]
        total -= Fraction(t.r(c), t.r(c) + t.r(v)) * coefficient_C(contract(t, v, h))
    return total, coefficient_C(t)


def coefficient_identity_check(t):
    if t.n < 1:
        raise InvalidMoveError("the identity needs a leg marked 1")
    a, b = identity_closed_form(t)
    c, d = identity_by_contraction(t)
    return a == b and c == d


def coefficient_sums(g, n, m_max):
    """Sum of C over ST^m_{g,n+1} for m = 1..m_max (exploratory)."""
    return {m: sum((coefficient_C(t) for t in enumerate_trees(g, n, m)), Fraction(0)) for m in range(1, m_max + 1)}


def check_range(g_max, n_max, m_max):
    """Exhaustive checks over g <= g_max, n <= n_max, m <= m_max; returns a list of failures."""
    jobs = [(g, n, m) for g in range(g_max + 1) for n in range(1, n_max + 1) for m in range(1, m_max + 1)
            if 2 * g - 2 + n + 1 > 0]

    def run(job):
        g, n, m = job
        bad = []
        trees = enumerate_trees(g, n, m)
        forms = {t.canonical() for t in trees}
        perm = {i: n + 1 - i for i in range(1, n + 1)}
        if {relabel(t, perm).canonical() for t in trees} != forms:
            bad.append(f"relabeling changes ST^{m}_{g},{n + 1}")
        for t in trees:
            if not coefficient_identity_check(t):
                bad.append(f"identity fails for {t.canonical()}")
            if t.desc_sum(t.root) != 2 * g - 2 + n + 1:
                bad.append(f"descendant sum wrong for {t.canonical()}")
        return bad

    return [x for part in parallel_map(run, jobs) for x in part]
