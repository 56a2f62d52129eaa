"""KAB actions: effects, service calls, the update function, and tell.

An action grounds its effects with all certain answers of their guards,
issues the service calls appearing in the additions, substitutes results for
them (deterministically, via the state's service-call map), and the chosen
filter turns the induced update into zero or more successor ABoxes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import kb, queries, repairs
from .errors import (OracleIncomplete, PreconditionViolated, RunBoundExceeded,
                     StateLimitExceeded, UngroundedDeletion, ValidationError)
from .queries import CAtom, EqAtom, RAtom, Var, eval_ecq
from .ts import Limits, TransitionSystem


@dataclass(frozen=True)
class SvcTerm:
    """Flat Skolem term f(t1,...,tn); arguments are variables or constants."""

    fname: str
    args: tuple

    def __str__(self):
        return f"{self.fname}({','.join(queries.term_str(t) for t in self.args)})"


@dataclass(frozen=True)
class Effect:
    guard: object  # ECQ
    add: tuple = ()
    dele: tuple = ()


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple
    effects: tuple

    def __str__(self):
        return f"{self.name}({','.join(self.params)})"


@dataclass(frozen=True)
class ProcessRule:
    guard: object  # ECQ with free variables = args
    action: str
    args: tuple


@dataclass(frozen=True)
class ServiceConfig:
    """Finitization of service-call results.

    In enumerate mode every total map from the issued calls into the value
    domain (that agrees with the current map) is a successor branch; in
    oracle mode the table plus per-function defaults fix a single result.
    """

    mode: str = "enumerate"  # "enumerate" | "oracle"
    values: tuple = ()
    table: tuple = ()    # ((fname, args...), value) pairs
    defaults: tuple = ()  # (fname, value) pairs

    def lookup(self, call):
        for k, v in self.table:
            if k == call:
                return v
        for f, v in self.defaults:
            if f == call[0]:
                return v
        raise OracleIncomplete(f"no oracle value or default for {call}")


NO_SERVICES = ServiceConfig(mode="enumerate", values=())


@dataclass(frozen=True)
class KAB:
    tbox: kb.TBox
    constants: frozenset
    distinguished: frozenset
    abox0: frozenset
    actions: tuple  # of Action
    process: tuple  # of ProcessRule

    def action(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise ValidationError(f"unknown action {name!r}")


def _resolve(term, env):
    if isinstance(term, Var):
        try:
            return env[term.name]
        except KeyError:
            raise UngroundedDeletion(f"unbound variable {term.name!r} in effect head")
    return term


def _ground_atom(atom, env):
    """Instantiate an effect-head atom; service terms stay symbolic but ground."""
    def g(t):
        if isinstance(t, SvcTerm):
            return SvcTerm(t.fname, tuple(_resolve(x, env) for x in t.args))
        return _resolve(t, env)

    if isinstance(atom, CAtom):
        return CAtom(atom.pred, g(atom.t))
    if isinstance(atom, RAtom):
        return RAtom(atom.pred, g(atom.t1), g(atom.t2))
    raise ValidationError(f"bad effect head atom {atom!r}")


def _atom_to_fact(atom):
    if isinstance(atom, CAtom):
        return kb.ConceptFact(atom.pred, atom.t)
    return kb.RoleFact(atom.pred, atom.t1, atom.t2)


def _is_ground(atom) -> bool:
    return all(isinstance(t, str) for t in atom.terms)


def add_del_facts(t: kb.TBox, a, action: Action, sigma: dict):
    """ADD (atoms, possibly with ground service terms) and DEL (ground facts)."""
    adds, dels = set(), set()
    for eff in action.effects:
        for row in eval_ecq(eff.guard, t, a, env=sigma):
            env = dict(sigma)
            env.update(row)
            for atom in eff.add:
                adds.add(_ground_atom(atom, env))
            for atom in eff.dele:
                g = _ground_atom(atom, env)
                if not _is_ground(g):
                    raise UngroundedDeletion(f"service term in deletion: {g}")
                dels.add(_atom_to_fact(g))
    return adds, dels


def ground_calls(adds) -> set:
    """The ground service calls occurring in a set of addition atoms."""
    out = set()
    for atom in adds:
        for term in atom.terms:
            if isinstance(term, SvcTerm):
                out.add((term.fname, *term.args))
    return out


def eval_thetas(calls, scmap: dict, cfg: ServiceConfig):
    """All admissible call evaluations, each agreeing with the current map."""
    calls = sorted(calls)
    if cfg.mode == "oracle":
        theta = {}
        for c in calls:
            v = cfg.lookup(c)
            if c in scmap and scmap[c] != v:
                return []
            theta[c] = v
        return [theta]
    fixed = {c: scmap[c] for c in calls if c in scmap}
    free = [c for c in calls if c not in scmap]
    if free and not cfg.values:
        raise ValidationError("enumerate-mode service config has an empty value domain")
    out = []
    for combo in itertools.product(sorted(cfg.values), repeat=len(free)):
        theta = dict(fixed)
        theta.update(zip(free, combo))
        out.append(theta)
    return out


def apply_theta(atom, theta):
    def g(t):
        if isinstance(t, SvcTerm):
            return theta[(t.fname, *t.args)]
        return t

    if isinstance(atom, CAtom):
        return kb.ConceptFact(atom.pred, g(atom.t))
    return kb.RoleFact(atom.pred, g(atom.t1), g(atom.t2))


def do(t: kb.TBox, a, action: Action, sigma: dict, theta: dict) -> frozenset:
    """(A minus deletions) union additions; additions win on overlap."""
    adds, dels = add_del_facts(t, a, action, sigma)
    grounded = {apply_theta(atom, theta) for atom in adds}
    return (frozenset(a) - dels) | grounded


def apply_filter(t: kb.TBox, a, fplus, fminus, kind: str):
    """Successor ABoxes of the update <A, F+, F->, per filter kind S/B/C/E."""
    if kind == "S":
        return [(frozenset(a) - frozenset(fminus)) | frozenset(fplus)]
    if kind == "B":
        return repairs.b_repairs(t, (frozenset(a) - frozenset(fminus)) | frozenset(fplus))
    if kind == "C":
        return [repairs.c_repair(t, (frozenset(a) - frozenset(fminus)) | frozenset(fplus))]
    if kind == "E":
        if not kb.is_consistent(t, a):
            raise PreconditionViolated("bold evolution requires a consistent current ABox")
        if not kb.is_consistent(t, fplus):
            return []
        return [repairs.evolve(t, a, fplus, fminus)]
    raise ValidationError(f"unknown filter kind {kind!r}")


def _scmap_tuple(scmap: dict) -> tuple:
    return tuple(sorted(scmap.items()))


def tell(t: kb.TBox, filter_kind: str, a, scmap: dict, action: Action,
         sigma: dict, cfg: ServiceConfig):
    """All (A', m', theta) with <(A,m), action sigma, (A',m')> in tell_filter.

    The caller guarantees sigma is legal (some rule/invocation guard holds).
    Successors are T-consistent; for the repairing filters the check is
    vacuous, for S it is the gate that drops inconsistent updates.
    """
    adds, dels = add_del_facts(t, a, action, sigma)
    out = []
    for theta in eval_thetas(ground_calls(adds), scmap, cfg):
        fplus = frozenset(apply_theta(atom, theta) for atom in adds)
        merged = dict(scmap)
        merged.update(theta)
        for a2 in apply_filter(t, a, fplus, dels, filter_kind):
            if kb.is_consistent(t, a2):
                out.append((a2, merged, theta))
    return out


def _sorted_answers(guard, t, a, arg_names):
    rows = eval_ecq(guard, t, a)
    out = []
    for row in rows:
        d = dict(row)
        out.append(tuple(d[x] for x in arg_names))
    return sorted(out)


class _RunAdomMonitor:
    """Tracks the constants accumulated along first-discovery paths.

    This samples one path per state (the BFS discovery path), which is
    enough to flag clearly run-unbounded systems; it is a monitor, not a
    decision procedure.
    """

    def __init__(self, bound):
        self.bound = bound
        self.acc = {}

    def start(self, sid, abox):
        self.acc[sid] = frozenset(kb.user_adom(abox))
        self._check(sid)

    def step(self, src, dst, abox):
        if dst not in self.acc:
            self.acc[dst] = self.acc[src] | kb.user_adom(abox)
            self._check(dst)

    def _check(self, sid):
        if self.bound is not None and len(self.acc[sid]) > self.bound:
            raise RunBoundExceeded(
                f"run accumulated {len(self.acc[sid])} constants (bound {self.bound})")


def build_ts_skab(k: KAB, cfg: ServiceConfig, limits: Optional[Limits] = None) -> TransitionSystem:
    """Explicit transition system of a KAB under the standard semantics."""
    limits = limits or Limits()
    if not kb.is_consistent(k.tbox, k.abox0):
        raise PreconditionViolated("initial ABox is T-inconsistent")
    ts = TransitionSystem(k.tbox, k.constants)
    monitor = _RunAdomMonitor(limits.max_run_adom)
    s0, _ = ts.add_state(frozenset(k.abox0), ())
    ts.initial = s0
    monitor.start(s0, k.abox0)
    frontier = [s0]
    while frontier:
        nxt = []
        for sid in frontier:
            state = ts.states[sid]
            scmap = dict(state.scmap)
            for rule in k.process:
                action = k.action(rule.action)
                for row in _sorted_answers(rule.guard, k.tbox, state.abox, rule.args):
                    sigma = dict(zip(action.params, row))
                    results = tell(k.tbox, "S", state.abox, scmap, action, sigma, cfg)
                    for a2, m2, theta in sorted(
                            results, key=lambda r: (kb.abox_key(r[0]), _scmap_tuple(r[1]))):
                        dst, new = ts.add_state(frozenset(a2), _scmap_tuple(m2))
                        label = (action.name, tuple(sorted(sigma.items())),
                                 _scmap_tuple(theta))
                        ts.add_edge(sid, dst, label)
                        monitor.step(sid, dst, a2)
                        if new:
                            nxt.append(dst)
                        if len(ts) > limits.max_states:
                            raise StateLimitExceeded(f"more than {limits.max_states} states")
        frontier = nxt
    return ts
