"""First-order mu-calculus over ECQs, checked by explicit fixpoint iteration.

Formulas combine (possibly open) ECQ queries with boolean connectives,
active-domain individual quantifiers that persist across states, next-state
modalities, and least/greatest fixpoints over 0-ary predicate variables.

The extension function maps a formula, an individual valuation and a
predicate valuation to the set of states where it holds; quantified
individuals range over the marker-free active domain of the current state
and then travel as constants.  Fixpoints use naive Kleene iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import kb
from .errors import NonMonotoneFixpoint, ValidationError
from .queries import TRUE, eval_ecq, free_vars as ecq_free_vars, uses_marker_predicates


@dataclass(frozen=True)
class QueryF:
    q: object  # ECQ

    def __str__(self):
        return str(self.q)


@dataclass(frozen=True)
class NotF:
    f: object

    def __str__(self):
        return f"!({self.f})"


@dataclass(frozen=True)
class AndF:
    a: object
    b: object

    def __str__(self):
        return f"({self.a} & {self.b})"


@dataclass(frozen=True)
class OrF:
    a: object
    b: object

    def __str__(self):
        return f"({self.a} | {self.b})"


@dataclass(frozen=True)
class ExistsF:
    var: str
    f: object

    def __str__(self):
        return f"exists {self.var}. ({self.f})"


@dataclass(frozen=True)
class ForallF:
    var: str
    f: object

    def __str__(self):
        return f"forall {self.var}. ({self.f})"


@dataclass(frozen=True)
class DiamondF:
    f: object

    def __str__(self):
        return f"<> ({self.f})"


@dataclass(frozen=True)
class BoxF:
    f: object

    def __str__(self):
        return f"[] ({self.f})"


@dataclass(frozen=True)
class PredVar:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class MuF:
    var: str
    body: object

    def __str__(self):
        return f"mu {self.var}. ({self.body})"


@dataclass(frozen=True)
class NuF:
    var: str
    body: object

    def __str__(self):
        return f"nu {self.var}. ({self.body})"


TRUE_F = QueryF(TRUE)
FALSE_F = NotF(TRUE_F)


@lru_cache(maxsize=None)
def free_ind_vars(f) -> frozenset:
    if isinstance(f, QueryF):
        return frozenset(ecq_free_vars(f.q))
    if isinstance(f, (NotF, DiamondF, BoxF)):
        return free_ind_vars(f.f)
    if isinstance(f, (AndF, OrF)):
        return free_ind_vars(f.a) | free_ind_vars(f.b)
    if isinstance(f, (ExistsF, ForallF)):
        return free_ind_vars(f.f) - {f.var}
    if isinstance(f, PredVar):
        return frozenset()
    if isinstance(f, (MuF, NuF)):
        return free_ind_vars(f.body)
    raise ValidationError(f"not a formula node: {f!r}")


@lru_cache(maxsize=None)
def free_pred_vars(f) -> frozenset:
    if isinstance(f, QueryF):
        return frozenset()
    if isinstance(f, (NotF, DiamondF, BoxF)):
        return free_pred_vars(f.f)
    if isinstance(f, (AndF, OrF)):
        return free_pred_vars(f.a) | free_pred_vars(f.b)
    if isinstance(f, (ExistsF, ForallF)):
        return free_pred_vars(f.f)
    if isinstance(f, PredVar):
        return frozenset({f.name})
    if isinstance(f, (MuF, NuF)):
        return free_pred_vars(f.body) - {f.var}
    raise ValidationError(f"not a formula node: {f!r}")


def validate_monotone(f, polarity=None):
    """Every predicate variable must sit under an even number of negations."""
    polarity = polarity if polarity is not None else {}

    def walk(node, pos, scope):
        if isinstance(node, QueryF):
            return
        if isinstance(node, PredVar):
            if node.name in scope and not pos:
                raise NonMonotoneFixpoint(
                    f"predicate variable {node.name} occurs under negation")
            return
        if isinstance(node, NotF):
            walk(node.f, not pos, scope)
        elif isinstance(node, (AndF, OrF)):
            walk(node.a, pos, scope)
            walk(node.b, pos, scope)
        elif isinstance(node, (ExistsF, ForallF, DiamondF, BoxF)):
            walk(node.f, pos, scope)
        elif isinstance(node, (MuF, NuF)):
            walk(node.body, pos, scope | {node.var})
        else:
            raise ValidationError(f"not a formula node: {node!r}")

    walk(f, True, frozenset())


def formula_uses_markers(f) -> bool:
    if isinstance(f, QueryF):
        return uses_marker_predicates(f.q)
    if isinstance(f, (NotF, DiamondF, BoxF)):
        return formula_uses_markers(f.f)
    if isinstance(f, (AndF, OrF)):
        return formula_uses_markers(f.a) or formula_uses_markers(f.b)
    if isinstance(f, (ExistsF, ForallF)):
        return formula_uses_markers(f.f)
    if isinstance(f, PredVar):
        return False
    if isinstance(f, (MuF, NuF)):
        return formula_uses_markers(f.body)
    return False


class Checker:
    """Extension computation over one fixed finite transition system."""

    def __init__(self, ts):
        self.ts = ts
        self.all_states = frozenset(ts.all_sids())
        self.preds = ts.predecessor_map()
        self.succs = {sid: ts.successors(sid) for sid in ts.all_sids()}
        self.adoms = {sid: frozenset(kb.user_adom(ts.abox(sid))) for sid in ts.all_sids()}
        self.domain = sorted(set().union(*self.adoms.values()) if self.adoms else set())
        self._memo = {}

    def _key(self, f, v, V):
        vi = tuple(sorted((x, v[x]) for x in free_ind_vars(f) if x in v))
        vp = tuple(sorted((z, V[z]) for z in free_pred_vars(f) if z in V))
        return (id(f), vi, vp)

    def extension(self, f, v=None, V=None) -> frozenset:
        v = v or {}
        V = V or {}
        key = self._key(f, v, V)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._compute(f, v, V)
        self._memo[key] = out
        return out

    def _compute(self, f, v, V):
        ts = self.ts
        if isinstance(f, QueryF):
            return frozenset(s for s in self.all_states
                             if eval_ecq(f.q, ts.tbox, ts.abox(s), env=v))
        if isinstance(f, NotF):
            return self.all_states - self.extension(f.f, v, V)
        if isinstance(f, AndF):
            return self.extension(f.a, v, V) & self.extension(f.b, v, V)
        if isinstance(f, OrF):
            return self.extension(f.a, v, V) | self.extension(f.b, v, V)
        if isinstance(f, ExistsF):
            out = set()
            for d in self.domain:
                holds = None
                for s in self.all_states:
                    if s in out or d not in self.adoms[s]:
                        continue
                    if holds is None:
                        holds = self.extension(f.f, {**v, f.var: d}, V)
                    if s in holds:
                        out.add(s)
            return frozenset(out)
        if isinstance(f, ForallF):
            out = set()
            for s in self.all_states:
                ok = True
                for d in sorted(self.adoms[s]):
                    if s not in self.extension(f.f, {**v, f.var: d}, V):
                        ok = False
                        break
                if ok:
                    out.add(s)
            return frozenset(out)
        if isinstance(f, DiamondF):
            target = self.extension(f.f, v, V)
            return frozenset(s for s in self.all_states
                             if any(d in target for d in self.succs[s]))
        if isinstance(f, BoxF):
            target = self.extension(f.f, v, V)
            return frozenset(s for s in self.all_states
                             if all(d in target for d in self.succs[s]))
        if isinstance(f, PredVar):
            return V.get(f.name, frozenset())
        if isinstance(f, MuF):
            cur = frozenset()
            while True:
                nxt = self.extension(f.body, v, {**V, f.var: cur})
                if nxt == cur:
                    return cur
                cur = nxt
        if isinstance(f, NuF):
            cur = self.all_states
            while True:
                nxt = self.extension(f.body, v, {**V, f.var: cur})
                if nxt == cur:
                    return cur
                cur = nxt
        raise ValidationError(f"not a formula node: {f!r}")


def extension(ts, f, v=None, V=None) -> frozenset:
    """The set of states satisfying f under the given valuations."""
    validate_monotone(f)
    return Checker(ts).extension(f, v, V)


def model_check(ts, f, allow_markers=False) -> bool:
    """Does the initial state of ts satisfy the closed formula f?"""
    if free_ind_vars(f):
        raise ValidationError(f"formula has free individual variables: {sorted(free_ind_vars(f))}")
    if free_pred_vars(f):
        raise ValidationError(f"formula has free predicate variables: {sorted(free_pred_vars(f))}")
    if not allow_markers and formula_uses_markers(f):
        raise ValidationError("marker predicates are not allowed in user formulas")
    validate_monotone(f)
    return ts.initial in Checker(ts).extension(f)
