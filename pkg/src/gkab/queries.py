"""UCQ / ECQ query language over DL-Lite_A knowledge bases.

Certain answers of a UCQ are computed by rewriting it with the positive
inclusions (PerfectRef-style atom rewriting plus atom unification) and then
evaluating the result over the ABox as a plain database.  ECQs compose
embedded UCQs with negation, conjunction and active-domain quantification;
negation complements w.r.t. tuples over the (marker-free) active domain.

Variables whose name starts with ``_`` are anonymous existentials local to a
conjunctive query; all other variables of an embedded UCQ are free in it and
must be bound by an enclosing quantifier, an action parameter, or count as
answer variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from . import kb
from .errors import NonDomainIndependent, RewriteBlowup, UnsafeQuery

REWRITE_CAP = 10_000


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, str]  # constants are plain strings


def is_anon(v: Var) -> bool:
    return v.name.startswith("_")


def term_str(t: Term) -> str:
    return t.name if isinstance(t, Var) else t


@dataclass(frozen=True)
class CAtom:
    pred: str
    t: Term

    @property
    def terms(self):
        return (self.t,)

    def __str__(self):
        return f"{self.pred}({term_str(self.t)})"


@dataclass(frozen=True)
class RAtom:
    pred: str
    t1: Term
    t2: Term

    @property
    def terms(self):
        return (self.t1, self.t2)

    def __str__(self):
        return f"{self.pred}({term_str(self.t1)},{term_str(self.t2)})"


@dataclass(frozen=True)
class EqAtom:
    t1: Term
    t2: Term

    @property
    def terms(self):
        return (self.t1, self.t2)

    def __str__(self):
        return f"{term_str(self.t1)} = {term_str(self.t2)}"


Atom = Union[CAtom, RAtom, EqAtom]


@dataclass(frozen=True)
class CQ:
    atoms: tuple

    def __str__(self):
        return " & ".join(str(a) for a in self.atoms) if self.atoms else "true"


@dataclass(frozen=True)
class UCQ:
    frees: tuple
    cqs: tuple

    def __str__(self):
        return " | ".join(str(c) for c in self.cqs) if self.cqs else "false"


def _atom_vars(atom):
    return [t for t in atom.terms if isinstance(t, Var)]


def cq_vars(cq: CQ):
    out = []
    for a in cq.atoms:
        out.extend(_atom_vars(a))
    return out


def ucq(cqs, frees=None) -> UCQ:
    """Build a UCQ; free variables default to all non-anonymous variables."""
    cqs = tuple(CQ(tuple(c)) if not isinstance(c, CQ) else c for c in cqs)
    if frees is None:
        names = set()
        for c in cqs:
            names.update(v.name for v in cq_vars(c) if not is_anon(v))
        frees = tuple(sorted(names))
    return UCQ(tuple(frees), cqs)


# -- ECQ AST ----------------------------------------------------------------

@dataclass(frozen=True)
class Embedded:
    u: UCQ

    def __str__(self):
        return f"[{self.u}]"


@dataclass(frozen=True)
class NotQ:
    q: "ECQ"

    def __str__(self):
        return f"!({self.q})"


@dataclass(frozen=True)
class AndQ:
    a: "ECQ"
    b: "ECQ"

    def __str__(self):
        return f"({self.a} & {self.b})"


@dataclass(frozen=True)
class ExistsQ:
    var: str
    q: "ECQ"

    def __str__(self):
        return f"exists {self.var}. ({self.q})"


ECQ = Union[Embedded, NotQ, AndQ, ExistsQ]

TRUE = Embedded(UCQ((), (CQ(()),)))
FALSE = Embedded(UCQ((), ()))


def or_q(a: ECQ, b: ECQ) -> ECQ:
    return NotQ(AndQ(NotQ(a), NotQ(b)))


def forall_q(var: str, q: ECQ) -> ECQ:
    return NotQ(ExistsQ(var, NotQ(q)))


def big_or(items) -> ECQ:
    items = list(items)
    if not items:
        return FALSE
    out = items[0]
    for q in items[1:]:
        out = or_q(out, q)
    return out


def big_and(items) -> ECQ:
    items = list(items)
    if not items:
        return TRUE
    out = items[0]
    for q in items[1:]:
        out = AndQ(out, q)
    return out


def embed_atoms(atoms) -> ECQ:
    return Embedded(ucq([CQ(tuple(atoms))]))


@lru_cache(maxsize=None)
def free_vars(q: ECQ) -> frozenset:
    if isinstance(q, Embedded):
        return frozenset(q.u.frees)
    if isinstance(q, NotQ):
        return free_vars(q.q)
    if isinstance(q, AndQ):
        return free_vars(q.a) | free_vars(q.b)
    if isinstance(q, ExistsQ):
        return free_vars(q.q) - {q.var}
    raise TypeError(f"not an ECQ: {q!r}")


def uses_marker_predicates(q: ECQ) -> bool:
    if isinstance(q, Embedded):
        return any(getattr(a, "pred", None) in kb.MARKER_PREDICATES
                   for c in q.u.cqs for a in c.atoms)
    if isinstance(q, NotQ):
        return uses_marker_predicates(q.q)
    if isinstance(q, AndQ):
        return uses_marker_predicates(q.a) or uses_marker_predicates(q.b)
    if isinstance(q, ExistsQ):
        return uses_marker_predicates(q.q)
    return False


def _positively_guarded(q: ECQ, x: str) -> bool:
    if isinstance(q, Embedded):
        if x not in q.u.frees:
            return False
        return all(any(x in (v.name for v in _atom_vars(a))
                       for a in c.atoms if not isinstance(a, EqAtom))
                   for c in q.u.cqs) and bool(q.u.cqs)
    if isinstance(q, AndQ):
        return _positively_guarded(q.a, x) or _positively_guarded(q.b, x)
    if isinstance(q, ExistsQ):
        return q.var != x and _positively_guarded(q.q, x)
    return False


def validate_domain_independent(q: ECQ, assume_bound=frozenset()):
    """Syntactic domain-independence: every variable is positively guarded.

    Variables in ``assume_bound`` (action parameters, outer binders) are
    exempt; they are substituted by constants before evaluation.
    """
    for x in free_vars(q):
        if x not in assume_bound and not _positively_guarded(q, x):
            raise NonDomainIndependent(f"variable {x!r} is not positively guarded")

    def walk(node, bound):
        if isinstance(node, ExistsQ):
            if node.var in bound:
                raise NonDomainIndependent(f"variable {node.var!r} rebound in nested scope")
            if not _positively_guarded(node.q, node.var):
                raise NonDomainIndependent(f"variable {node.var!r} is not positively guarded")
            walk(node.q, bound | {node.var})
        elif isinstance(node, NotQ):
            walk(node.q, bound)
        elif isinstance(node, AndQ):
            walk(node.a, bound)
            walk(node.b, bound)

    walk(q, set(free_vars(q)) | set(assume_bound))


def subst_ecq(q: ECQ, env: dict) -> ECQ:
    """Substitute constants for free variables (binders shadow as usual)."""
    if not env:
        return q

    def sub_term(t):
        if isinstance(t, Var) and t.name in env:
            return env[t.name]
        return t

    def sub_atom(a):
        if isinstance(a, CAtom):
            return CAtom(a.pred, sub_term(a.t))
        if isinstance(a, RAtom):
            return RAtom(a.pred, sub_term(a.t1), sub_term(a.t2))
        return EqAtom(sub_term(a.t1), sub_term(a.t2))

    if isinstance(q, Embedded):
        frees = tuple(v for v in q.u.frees if v not in env)
        cqs = tuple(CQ(tuple(sub_atom(a) for a in c.atoms)) for c in q.u.cqs)
        return Embedded(UCQ(frees, cqs))
    if isinstance(q, NotQ):
        return NotQ(subst_ecq(q.q, env))
    if isinstance(q, AndQ):
        return AndQ(subst_ecq(q.a, env), subst_ecq(q.b, env))
    if isinstance(q, ExistsQ):
        inner = {k: v for k, v in env.items() if k != q.var}
        return ExistsQ(q.var, subst_ecq(q.q, inner))
    raise TypeError(f"not an ECQ: {q!r}")


# -- UCQ rewriting (PerfectRef over the positive inclusions) -----------------

def _concept_atom_of(b, x, fresh):
    if isinstance(b, kb.ConceptName):
        return CAtom(b.name, x)
    r = b.role
    v = Var(f"_r{next(fresh)}")
    return RAtom(r.name, x, v) if not r.inv else RAtom(r.name, v, x)


def _role_atom_of(r, t1, t2):
    return RAtom(r.name, t1, t2) if not r.inv else RAtom(r.name, t2, t1)


def _occurrences(cq):
    count = {}
    for a in cq.atoms:
        for v in _atom_vars(a):
            count[v.name] = count.get(v.name, 0) + 1
    return count


def _canon_cq(cq: CQ, frees) -> CQ:
    """Canonically rename existential variables and sort atoms."""
    rigid = set(frees)

    def tkey(t):
        if isinstance(t, Var) and t.name not in rigid:
            return "?"
        return "c:" + term_str(t)

    def akey(a):
        return (a.__class__.__name__, getattr(a, "pred", "="),
                tuple(tkey(t) for t in a.terms))

    ordered = sorted(cq.atoms, key=akey)
    ren = {}

    def rename(t):
        if isinstance(t, Var) and t.name not in rigid:
            if t.name not in ren:
                ren[t.name] = Var(f"_c{len(ren)}")
            return ren[t.name]
        return t

    renamed = []
    for a in ordered:
        if isinstance(a, CAtom):
            renamed.append(CAtom(a.pred, rename(a.t)))
        elif isinstance(a, RAtom):
            renamed.append(RAtom(a.pred, rename(a.t1), rename(a.t2)))
        else:
            renamed.append(EqAtom(rename(a.t1), rename(a.t2)))
    renamed = sorted(set(renamed), key=lambda a: (a.__class__.__name__,
                                                  getattr(a, "pred", "="),
                                                  tuple(term_str(t) for t in a.terms)))
    return CQ(tuple(renamed))


def _atom_rewritings(cq: CQ, t: kb.TBox, frees, fresh):
    occ = _occurrences(cq)

    def unbound(term):
        return (isinstance(term, Var) and term.name not in frees
                and occ.get(term.name, 0) == 1)

    for i, atom in enumerate(cq.atoms):
        if isinstance(atom, EqAtom):
            continue
        rest = cq.atoms[:i] + cq.atoms[i + 1:]
        if isinstance(atom, CAtom):
            target = kb.ConceptName(atom.pred)
            for b1, b2 in t.pos_c:
                if b2 == target:
                    yield CQ(rest + (_concept_atom_of(b1, atom.t, fresh),))
        else:
            for b1, b2 in t.pos_c:
                if isinstance(b2, kb.SomeRole) and b2.role.name == atom.pred:
                    if not b2.role.inv and unbound(atom.t2):
                        yield CQ(rest + (_concept_atom_of(b1, atom.t1, fresh),))
                    if b2.role.inv and unbound(atom.t1):
                        yield CQ(rest + (_concept_atom_of(b1, atom.t2, fresh),))
            for r1, r2 in t.pos_r:
                if r2.name == atom.pred:
                    if not r2.inv:
                        yield CQ(rest + (_role_atom_of(r1, atom.t1, atom.t2),))
                    else:
                        yield CQ(rest + (_role_atom_of(r1, atom.t2, atom.t1),))


def _unify(a1, a2, frees):
    """Most general unifier mapping existential variables only."""
    if a1.__class__ is not a2.__class__ or getattr(a1, "pred", None) != getattr(a2, "pred", None):
        return None
    sub = {}

    def resolve(t):
        while isinstance(t, Var) and t.name in sub:
            t = sub[t.name]
        return t

    for s, u in zip(a1.terms, a2.terms):
        s, u = resolve(s), resolve(u)
        if s == u:
            continue
        if isinstance(s, Var) and s.name not in frees:
            sub[s.name] = u
        elif isinstance(u, Var) and u.name not in frees:
            sub[u.name] = s
        else:
            return None
    return sub


def _apply_sub_cq(cq: CQ, sub):
    def rt(t):
        while isinstance(t, Var) and t.name in sub:
            t = sub[t.name]
        return t

    atoms = []
    for a in cq.atoms:
        if isinstance(a, CAtom):
            atoms.append(CAtom(a.pred, rt(a.t)))
        elif isinstance(a, RAtom):
            atoms.append(RAtom(a.pred, rt(a.t1), rt(a.t2)))
        else:
            atoms.append(EqAtom(rt(a.t1), rt(a.t2)))
    seen, out = set(), []
    for a in atoms:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return CQ(tuple(out))


def _reductions(cq: CQ, frees):
    rel = [a for a in cq.atoms if not isinstance(a, EqAtom)]
    for i in range(len(rel)):
        for j in range(i + 1, len(rel)):
            sub = _unify(rel[i], rel[j], frees)
            if sub is not None and sub:
                yield _apply_sub_cq(cq, sub)


def rewrite_ucq(u: UCQ, t: kb.TBox) -> UCQ:
    """Perfect reformulation of u over T_p: evaluating the result over A as a
    database gives exactly the certain answers of u over <T, A>."""
    cached = t._rewrite_cache.get(u)
    if cached is not None:
        return cached
    fresh = itertools.count()
    frees = set(u.frees)
    result = {}
    frontier = []
    for cq in u.cqs:
        c = _canon_cq(cq, frees)
        if c not in result:
            result[c] = None
            frontier.append(c)
    while frontier:
        nxt = []
        for cq in frontier:
            for cq2 in itertools.chain(_atom_rewritings(cq, t, frees, fresh),
                                       _reductions(cq, frees)):
                c = _canon_cq(cq2, frees)
                if c not in result:
                    result[c] = None
                    nxt.append(c)
                    if len(result) > REWRITE_CAP:
                        raise RewriteBlowup(f"more than {REWRITE_CAP} disjuncts")
        frontier = nxt
    out = UCQ(u.frees, tuple(result.keys()))
    t._rewrite_cache[u] = out
    return out


# -- evaluation ---------------------------------------------------------------

def _fact_index(a):
    cidx, ridx = {}, {}
    for f in a:
        if isinstance(f, kb.ConceptFact):
            cidx.setdefault(f.pred, []).append((f.arg,))
        else:
            ridx.setdefault(f.pred, []).append((f.arg1, f.arg2))
    return cidx, ridx


def _eval_cq(cq: CQ, index, env):
    """All extensions of env satisfying the CQ over the indexed facts."""
    cidx, ridx = index
    rel = [a for a in cq.atoms if not isinstance(a, EqAtom)]
    eqs = [a for a in cq.atoms if isinstance(a, EqAtom)]
    sols = [dict(env)]
    for atom in rel:
        rows = (cidx if isinstance(atom, CAtom) else ridx).get(atom.pred, ())
        new = []
        for s in sols:
            for row in rows:
                ext = dict(s)
                ok = True
                for t, val in zip(atom.terms, row):
                    if isinstance(t, Var):
                        if ext.get(t.name, val) != val:
                            ok = False
                            break
                        ext[t.name] = val
                    elif t != val:
                        ok = False
                        break
                if ok:
                    new.append(ext)
        sols = new
        if not sols:
            return []
    if not eqs:
        return sols
    out = []
    for s in sols:
        pending = list(eqs)
        ok = True
        progress = True
        while pending and progress and ok:
            progress = False
            rest = []
            for eq in pending:
                vals = []
                for t in eq.terms:
                    if isinstance(t, Var):
                        vals.append(s.get(t.name))
                    else:
                        vals.append(t)
                if vals[0] is not None and vals[1] is not None:
                    if vals[0] != vals[1]:
                        ok = False
                    progress = True
                elif vals[0] is not None:
                    s[eq.t2.name] = vals[0]
                    progress = True
                elif vals[1] is not None:
                    s[eq.t1.name] = vals[1]
                    progress = True
                else:
                    rest.append(eq)
            pending = rest
        if pending and ok:
            raise UnsafeQuery(f"unresolvable equality in {cq}")
        if ok:
            out.append(s)
    return out


def _freeze(sub: dict):
    return tuple(sorted(sub.items()))


def certain_answers_ucq(u: UCQ, t, a, env=None, rewrite=True):
    """Substitutions for the unbound free variables of u making it certain.

    Boolean queries return {()} for true and set() for false.
    """
    env = env or {}
    if rewrite and t is not None:
        u = rewrite_ucq(u, t)
    index = _fact_index(a)
    unbound = [v for v in u.frees if v not in env]
    rows = set()
    for cq in u.cqs:
        for s in _eval_cq(cq, index, env):
            rows.add(_freeze({v: s[v] for v in unbound}))
    return rows


def eval_ecq(q: ECQ, t, a, env=None, rewrite=True):
    """Active-domain FO evaluation of an ECQ under certain-answer semantics.

    Returns the set of substitutions (frozen as sorted item tuples) for the
    free variables of q not already bound by env.  Quantifiers and negation
    range over the marker-free active domain of A; embedded UCQs are answered
    with certain-answer semantics w.r.t. t (set rewrite=False, or t=None, for
    plain database evaluation).
    """
    env = env or {}
    dom = sorted(kb.user_adom(a))
    index = _fact_index(a)

    def ev(node, env):
        if isinstance(node, Embedded):
            u = node.u
            if rewrite and t is not None:
                u = rewrite_ucq(u, t)
            unbound = [v for v in u.frees if v not in env]
            rows = set()
            for cq in u.cqs:
                for s in _eval_cq(cq, index, env):
                    rows.add(_freeze({v: s[v] for v in unbound}))
            return rows
        if isinstance(node, AndQ):
            out = set()
            for sa in ev(node.a, env):
                env2 = dict(env)
                env2.update(sa)
                for sb in ev(node.b, env2):
                    out.add(tuple(sorted(dict(sa, **dict(sb)).items())))
            return out
        if isinstance(node, NotQ):
            unbound = sorted(v for v in free_vars(node.q) if v not in env)
            out = set()
            for combo in itertools.product(dom, repeat=len(unbound)):
                env2 = dict(env)
                env2.update(zip(unbound, combo))
                if not ev(node.q, env2):
                    out.add(_freeze(dict(zip(unbound, combo))))
            return out
        if isinstance(node, ExistsQ):
            x = node.var
            inner = ev(node.q, env)
            if x not in free_vars(node.q):
                return inner if dom else set()
            out = set()
            for row in inner:
                out.add(tuple(kv for kv in row if kv[0] != x))
            return out
        raise TypeError(f"not an ECQ: {node!r}")

    return ev(q, env)


def ask(q: ECQ, t, a, env=None, rewrite=True) -> bool:
    """Boolean ECQ evaluation (true iff the answer set is non-empty)."""
    return bool(eval_ecq(q, t, a, env=env, rewrite=rewrite))


# -- q_unsat ------------------------------------------------------------------

def concept_query_atoms(b, x: Var, fresh):
    """Atoms asserting membership of x in basic concept b (fresh anon vars)."""
    if isinstance(b, kb.ConceptName):
        return [CAtom(b.name, x)]
    r = b.role
    v = Var(f"_q{next(fresh)}")
    return [RAtom(r.name, x, v) if not r.inv else RAtom(r.name, v, x)]


def role_query_atom(r, x: Var, y: Var):
    return RAtom(r.name, x, y) if not r.inv else RAtom(r.name, y, x)


def funct_violation_guard(r) -> ECQ:
    """q^f_unsat(funct R, x, y, z) = R(x,y) and R(x,z) and not [y = z]."""
    x, y, z = Var("x"), Var("y"), Var("z")
    return AndQ(embed_atoms([role_query_atom(r, x, y), role_query_atom(r, x, z)]),
                NotQ(embed_atoms([EqAtom(y, z)])))


def build_qunsat(t: kb.TBox) -> ECQ:
    """The boolean query that is true over A iff <T, A> is inconsistent.

    One existential clause per functionality assertion, per entailed negative
    concept inclusion, and per entailed negative role inclusion; an empty
    disjunction is the constant-false query.
    """
    if t._qunsat is not None:
        return t._qunsat
    cl = kb.saturate_negatives(t)
    fresh = itertools.count()
    clauses = []
    for r in sorted(t.functs):
        clauses.append(ExistsQ("x", ExistsQ("y", ExistsQ("z", funct_violation_guard(r)))))
    seen = set()
    for b1, b2 in sorted(cl.concept_pairs, key=lambda p: (str(p[0]), str(p[1]))):
        if frozenset((b1, b2)) in seen:
            continue
        seen.add(frozenset((b1, b2)))
        x = Var("x")
        atoms = concept_query_atoms(b1, x, fresh) + concept_query_atoms(b2, x, fresh)
        clauses.append(ExistsQ("x", embed_atoms(atoms)))
    seen = set()
    for r1, r2 in sorted(cl.role_pairs, key=lambda p: (str(p[0]), str(p[1]))):
        if frozenset((r1, r2)) in seen:
            continue
        seen.add(frozenset((r1, r2)))
        x, y = Var("x"), Var("y")
        atoms = [role_query_atom(r1, x, y), role_query_atom(r2, x, y)]
        clauses.append(ExistsQ("x", ExistsQ("y", embed_atoms(atoms))))
    out = big_or(clauses)
    t._qunsat = out
    return out
