"""DL-Lite_A knowledge bases.

Vocabulary, TBox/ABox representation, negative-inclusion closure, and the
violation scans that back consistency checking and repair computation.

Concepts and roles follow the DL-Lite_A grammar: a basic role is a role name
or its inverse, a basic concept is a concept name or an unqualified
existential over a basic role.  ABoxes are frozensets of ground facts.

A small reserved "marker" vocabulary (``__state``, ``__flag``, ``__noop``)
is kept outside every TBox vocabulary; the translations use it to sequence
their bookkeeping steps and the query layer hides it from user queries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .errors import SaturationDerivedUnsat, ValidationError

MARKER_STATE = "__state"
MARKER_FLAG = "__flag"
MARKER_NOOP = "__noop"
MARKER_PREDICATES = frozenset({MARKER_STATE, MARKER_FLAG, MARKER_NOOP})

REP_CONST = "rep"
TEMP_CONST = "temp"
RESERVED_PREFIX = "__"


@dataclass(frozen=True, order=True)
class Role:
    """A role name or its inverse; double inversion is collapsed by inverse()."""

    name: str
    inv: bool = False

    def inverse(self) -> "Role":
        return Role(self.name, not self.inv)

    def __str__(self):
        return self.name + ("-" if self.inv else "")


@dataclass(frozen=True, order=True)
class ConceptName:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, order=True)
class SomeRole:
    """Unqualified existential restriction over a basic role."""

    role: Role

    def __str__(self):
        return f"exists {self.role}"


BasicConcept = Union[ConceptName, SomeRole]


@dataclass(frozen=True)
class ConceptFact:
    pred: str
    arg: str

    @property
    def args(self):
        return (self.arg,)

    def sort_key(self):
        return (self.pred, 0, self.arg, "")

    def __str__(self):
        return f"{self.pred}({self.arg})"


@dataclass(frozen=True)
class RoleFact:
    pred: str
    arg1: str
    arg2: str

    @property
    def args(self):
        return (self.arg1, self.arg2)

    def sort_key(self):
        return (self.pred, 1, self.arg1, self.arg2)

    def __str__(self):
        return f"{self.pred}({self.arg1},{self.arg2})"


Fact = Union[ConceptFact, RoleFact]
ABox = frozenset


def is_marker(fact: Fact) -> bool:
    return fact.pred in MARKER_PREDICATES


def abox(facts: Iterable[Fact]) -> ABox:
    return frozenset(facts)


def abox_key(a: ABox):
    """Canonical (sorted, deduplicated) form; hashable and totally ordered."""
    return tuple(sorted(f.sort_key() for f in a))


def adom(a: ABox) -> frozenset:
    """All constants occurring in A, marker facts included."""
    out = set()
    for f in a:
        out.update(f.args)
    return frozenset(out)


def user_adom(a: ABox) -> frozenset:
    """Constants of the non-marker facts; the active domain for user queries."""
    out = set()
    for f in a:
        if not is_marker(f):
            out.update(f.args)
    return frozenset(out)


def strip_markers(a: ABox) -> ABox:
    return frozenset(f for f in a if not is_marker(f))


def role_fact(role: Role, a: str, b: str) -> RoleFact:
    """R(a,b) with R possibly inverse: P-(a,b) denotes P(b,a)."""
    if role.inv:
        return RoleFact(role.name, b, a)
    return RoleFact(role.name, a, b)


class TBox:
    """A DL-Lite_A TBox: positive/negative inclusions and functionality.

    The declared vocabulary is explicit; every assertion must stay inside it
    and reserved marker names may not be declared.  The DL-Lite_A side
    condition that functional roles are not specialized is enforced unless
    ``allow_funct_specialization`` is set.
    """

    def __init__(self, concepts=(), roles=(), pos_c=(), pos_r=(), neg_c=(),
                 neg_r=(), functs=(), allow_funct_specialization=False):
        self.concepts = frozenset(concepts)
        self.roles = frozenset(roles)
        self.pos_c = frozenset(pos_c)
        self.pos_r = frozenset(pos_r)
        self.neg_c = frozenset(neg_c)
        self.neg_r = frozenset(neg_r)
        self.functs = frozenset(functs)
        self._closure = None
        self._qunsat = None
        self._rewrite_cache = {}
        self._validate(allow_funct_specialization)

    # -- validation -------------------------------------------------------

    def _check_concept(self, b: BasicConcept, ctx: str):
        if isinstance(b, ConceptName):
            if b.name not in self.concepts:
                raise ValidationError(f"{ctx}: undeclared concept name {b.name!r}")
        elif isinstance(b, SomeRole):
            if b.role.name not in self.roles:
                raise ValidationError(f"{ctx}: undeclared role name {b.role.name!r}")
        else:
            raise ValidationError(f"{ctx}: not a basic concept: {b!r}")

    def _check_role(self, r: Role, ctx: str):
        if r.name not in self.roles:
            raise ValidationError(f"{ctx}: undeclared role name {r.name!r}")

    def _validate(self, allow_funct_specialization):
        for n in self.concepts | self.roles:
            if n.startswith(RESERVED_PREFIX):
                raise ValidationError(f"reserved name {n!r} may not be declared")
        if self.concepts & self.roles:
            clash = sorted(self.concepts & self.roles)
            raise ValidationError(f"names declared both concept and role: {clash}")
        for b1, b2 in self.pos_c | self.neg_c:
            self._check_concept(b1, "inclusion")
            self._check_concept(b2, "inclusion")
        for r1, r2 in self.pos_r | self.neg_r:
            self._check_role(r1, "role inclusion")
            self._check_role(r2, "role inclusion")
        for r in self.functs:
            self._check_role(r, "funct")
        if not allow_funct_specialization:
            for r1, r2 in self.pos_r:
                if r2 in self.functs or r2.inverse() in self.functs:
                    raise ValidationError(
                        f"DL-Lite_A forbids specializing the functional role {r2}"
                        f" (got {r1} <= {r2}); pass allow_funct_specialization to override")

    # -- derived views ----------------------------------------------------

    def declares(self, pred: str) -> bool:
        return pred in self.concepts or pred in self.roles

    def positive_only(self) -> "TBox":
        """The TBox with all negative inclusions and functionality dropped."""
        return TBox(self.concepts, self.roles, self.pos_c, self.pos_r)

    def renamed(self, rename) -> "TBox":
        """Apply a name-renaming function to every declared name and assertion."""
        rc = lambda b: (ConceptName(rename(b.name)) if isinstance(b, ConceptName)
                        else SomeRole(Role(rename(b.role.name), b.role.inv)))
        rr = lambda r: Role(rename(r.name), r.inv)
        t = TBox.__new__(TBox)
        t.concepts = frozenset(rename(n) for n in self.concepts)
        t.roles = frozenset(rename(n) for n in self.roles)
        t.pos_c = frozenset((rc(a), rc(b)) for a, b in self.pos_c)
        t.pos_r = frozenset((rr(a), rr(b)) for a, b in self.pos_r)
        t.neg_c = frozenset((rc(a), rc(b)) for a, b in self.neg_c)
        t.neg_r = frozenset((rr(a), rr(b)) for a, b in self.neg_r)
        t.functs = frozenset(rr(r) for r in self.functs)
        t._closure = None
        t._qunsat = None
        t._rewrite_cache = {}
        return t

    def merged(self, other: "TBox") -> "TBox":
        t = TBox.__new__(TBox)
        t.concepts = self.concepts | other.concepts
        t.roles = self.roles | other.roles
        t.pos_c = self.pos_c | other.pos_c
        t.pos_r = self.pos_r | other.pos_r
        t.neg_c = self.neg_c | other.neg_c
        t.neg_r = self.neg_r | other.neg_r
        t.functs = self.functs | other.functs
        t._closure = None
        t._qunsat = None
        t._rewrite_cache = {}
        return t

    def concept_universe(self):
        for n in sorted(self.concepts):
            yield ConceptName(n)
        for p in sorted(self.roles):
            yield SomeRole(Role(p, False))
            yield SomeRole(Role(p, True))

    def role_universe(self):
        for p in sorted(self.roles):
            yield Role(p, False)
            yield Role(p, True)


@dataclass(frozen=True)
class NegativeClosure:
    """All entailed negative inclusions, as ordered pairs (B1 disjoint-from B2)."""

    concept_pairs: frozenset
    role_pairs: frozenset


def _sup_map(nodes, edges):
    """Reflexive-transitive superset map over an edge relation."""
    adj = {n: set() for n in nodes}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
    sup = {}
    for n in adj:
        seen = {n}
        todo = [n]
        while todo:
            cur = todo.pop()
            for nxt in adj.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        sup[n] = seen
    return sup


def positive_concept_closure(t: TBox):
    """B1 -> set of super-concepts, with role inclusions lifted to exists-concepts."""
    edges = set(t.pos_c)
    for r1, r2 in t.pos_r:
        edges.add((SomeRole(r1), SomeRole(r2)))
        edges.add((SomeRole(r1.inverse()), SomeRole(r2.inverse())))
    return _sup_map(list(t.concept_universe()), edges)


def positive_role_closure(t: TBox):
    edges = set()
    for r1, r2 in t.pos_r:
        edges.add((r1, r2))
        edges.add((r1.inverse(), r2.inverse()))
    return _sup_map(list(t.role_universe()), edges)


def saturate_negatives(t: TBox) -> NegativeClosure:
    """Close T_n under symmetry and left-weakening by the positive inclusions.

    Raises SaturationDerivedUnsat when some B <= not B (or R <= not R) is
    derived, since then a declared name would be unsatisfiable.
    """
    if t._closure is not None:
        return t._closure
    sup_c = positive_concept_closure(t)
    sub_c = {b: set() for b in sup_c}
    for x, sups in sup_c.items():
        for b in sups:
            sub_c[b].add(x)
    seeds_c = set(t.neg_c) | {(b, a) for a, b in t.neg_c}
    closure_c = set()
    for b1, b2 in seeds_c:
        for x in sub_c[b1]:
            for y in sub_c[b2]:
                closure_c.add((x, y))

    sup_r = positive_role_closure(t)
    sub_r = {r: set() for r in sup_r}
    for x, sups in sup_r.items():
        for r in sups:
            sub_r[r].add(x)
    seeds_r = set(t.neg_r) | {(b, a) for a, b in t.neg_r}
    closure_r = set()
    for r1, r2 in seeds_r:
        for x in sub_r[r1]:
            for y in sub_r[r2]:
                closure_r.add((x, y))

    for b1, b2 in closure_c:
        if b1 == b2:
            raise SaturationDerivedUnsat(f"derived {b1} <= not {b2}")
    for r1, r2 in closure_r:
        if r1 == r2:
            raise SaturationDerivedUnsat(f"derived {r1} <= not {r2}")
    t._closure = NegativeClosure(frozenset(closure_c), frozenset(closure_r))
    return t._closure


# -- violation scans -------------------------------------------------------

def _concept_support(b: BasicConcept, a: ABox):
    """Map constant -> facts of A witnessing membership in the basic concept."""
    out = {}
    if isinstance(b, ConceptName):
        for f in a:
            if isinstance(f, ConceptFact) and f.pred == b.name:
                out.setdefault(f.arg, []).append(f)
    else:
        r = b.role
        for f in a:
            if isinstance(f, RoleFact) and f.pred == r.name:
                c = f.arg2 if r.inv else f.arg1
                out.setdefault(c, []).append(f)
    return out


def _role_instances(r: Role, a: ABox):
    """Map (x,y) -> fact for R(x,y), normalizing inverse orientation."""
    out = {}
    for f in a:
        if isinstance(f, RoleFact) and f.pred == r.name:
            pair = (f.arg2, f.arg1) if r.inv else (f.arg1, f.arg2)
            out[pair] = f
    return out


def _funct_clusters(r: Role, a: ABox):
    """Map subject -> {object -> fact} for the functionality of R."""
    out = {}
    for f in a:
        if isinstance(f, RoleFact) and f.pred == r.name:
            subj, obj = ((f.arg2, f.arg1) if r.inv else (f.arg1, f.arg2))
            out.setdefault(subj, {})[obj] = f
    return out


def is_consistent(t: TBox, a: ABox) -> bool:
    """True iff <T, A> admits a model (markers ignored).

    Equivalent to evaluating q_unsat over A as a database; implemented as a
    direct violation scan over the saturated negative inclusions.
    """
    cl = saturate_negatives(t)
    facts = strip_markers(a)
    for b1, b2 in cl.concept_pairs:
        s1 = _concept_support(b1, facts)
        if not s1:
            continue
        s2 = _concept_support(b2, facts)
        if any(c in s2 for c in s1):
            return False
    for r1, r2 in cl.role_pairs:
        i1 = _role_instances(r1, facts)
        if not i1:
            continue
        i2 = _role_instances(r2, facts)
        if any(p in i2 for p in i1):
            return False
    for r in t.functs:
        for objs in _funct_clusters(r, facts).values():
            if len(objs) > 1:
                return False
    return True


def inc_set(t: TBox, a: ABox) -> frozenset:
    """All facts participating in some inconsistency w.r.t. T.

    Empty iff A is T-consistent.
    """
    cl = saturate_negatives(t)
    facts = strip_markers(a)
    out = set()
    for b1, b2 in cl.concept_pairs:
        s1 = _concept_support(b1, facts)
        if not s1:
            continue
        s2 = _concept_support(b2, facts)
        for c, witnesses in s1.items():
            if c in s2:
                out.update(witnesses)
    for r1, r2 in cl.role_pairs:
        i1 = _role_instances(r1, facts)
        if not i1:
            continue
        i2 = _role_instances(r2, facts)
        for p, f in i1.items():
            if p in i2:
                out.add(f)
    for r in t.functs:
        for objs in _funct_clusters(r, facts).values():
            if len(objs) > 1:
                out.update(objs.values())
    return frozenset(out)


def conflict_pairs(t: TBox, a: ABox) -> set:
    """Conflicting fact pairs as frozensets (singletons for self-conflicts).

    A subset of A is T-consistent iff it contains no conflict entirely; this
    is exactly the binary-conflict structure of DL-Lite_A.
    """
    cl = saturate_negatives(t)
    facts = strip_markers(a)
    out = set()
    for b1, b2 in cl.concept_pairs:
        s1 = _concept_support(b1, facts)
        if not s1:
            continue
        s2 = _concept_support(b2, facts)
        for c, ws1 in s1.items():
            for f2 in s2.get(c, ()):
                for f1 in ws1:
                    out.add(frozenset((f1, f2)))
    for r1, r2 in cl.role_pairs:
        i1 = _role_instances(r1, facts)
        if not i1:
            continue
        i2 = _role_instances(r2, facts)
        for p, f1 in i1.items():
            if p in i2:
                out.add(frozenset((f1, i2[p])))
    for r in t.functs:
        for objs in _funct_clusters(r, facts).values():
            if len(objs) > 1:
                items = sorted(objs.items())
                for i in range(len(items)):
                    for j in range(i + 1, len(items)):
                        out.add(frozenset((items[i][1], items[j][1])))
    return out
