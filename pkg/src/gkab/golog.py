"""Golog programs over KAB actions and the GKAB transition-system builder.

Program occurrences carry ids (dot-separated paths); state identity uses
them, so structurally equal residual programs from different occurrences stay
distinct.  The execution relation and final-state judgment follow the
standard seven-rule presentations; the filter parameter selects how an
atomic action's update is turned into successor ABoxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import kb
from .actions import (KAB, Action, ServiceConfig, _scmap_tuple, _sorted_answers,
                      _RunAdomMonitor, tell)
from .errors import PreconditionViolated, StateLimitExceeded, ValidationError
from .queries import ask, free_vars
from .ts import Limits, TransitionSystem


@dataclass(frozen=True)
class Empty:
    pid: str = ""

    def __str__(self):
        return "skip"


@dataclass(frozen=True)
class Invoke:
    guard: object  # ECQ with free variables = params
    action: str
    params: tuple
    pid: str = ""

    def __str__(self):
        return f"pick {self.guard} . {self.action}({','.join(self.params)})"


@dataclass(frozen=True)
class Choice:
    left: object
    right: object
    pid: str = ""

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Seq:
    left: object
    right: object
    pid: str = ""

    def __str__(self):
        return f"({self.left} ; {self.right})"


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    els: object
    pid: str = ""

    def __str__(self):
        return f"if {self.cond} then {self.then} else {self.els}"


@dataclass(frozen=True)
class While:
    cond: object
    body: object
    pid: str = ""

    def __str__(self):
        return f"while {self.cond} do {self.body}"


def assign_pids(prog, root: str = "p"):
    """Re-id every occurrence with its path from the root (unique per occurrence)."""
    if isinstance(prog, Empty):
        return Empty(pid=root)
    if isinstance(prog, Invoke):
        return Invoke(prog.guard, prog.action, prog.params, pid=root)
    if isinstance(prog, Choice):
        return Choice(assign_pids(prog.left, root + ".1"),
                      assign_pids(prog.right, root + ".2"), pid=root)
    if isinstance(prog, Seq):
        return Seq(assign_pids(prog.left, root + ".1"),
                   assign_pids(prog.right, root + ".2"), pid=root)
    if isinstance(prog, If):
        return If(prog.cond, assign_pids(prog.then, root + ".1"),
                  assign_pids(prog.els, root + ".2"), pid=root)
    if isinstance(prog, While):
        return While(prog.cond, assign_pids(prog.body, root + ".1"), pid=root)
    raise ValidationError(f"not a program node: {prog!r}")


def subprograms(prog):
    yield prog
    if isinstance(prog, (Choice, Seq)):
        yield from subprograms(prog.left)
        yield from subprograms(prog.right)
    elif isinstance(prog, If):
        yield from subprograms(prog.then)
        yield from subprograms(prog.els)
    elif isinstance(prog, While):
        yield from subprograms(prog.body)


@dataclass(frozen=True)
class GKAB:
    tbox: kb.TBox
    constants: frozenset
    distinguished: frozenset
    abox0: frozenset
    actions: tuple
    program: object

    def action(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise ValidationError(f"unknown action {name!r}")


def is_final(t: kb.TBox, a, prog) -> bool:
    """The seven-rule final-state judgment (conditions via certain answers)."""
    if isinstance(prog, Empty):
        return True
    if isinstance(prog, Invoke):
        return False
    if isinstance(prog, Choice):
        return is_final(t, a, prog.left) or is_final(t, a, prog.right)
    if isinstance(prog, Seq):
        return is_final(t, a, prog.left) and is_final(t, a, prog.right)
    if isinstance(prog, If):
        branch = prog.then if ask(prog.cond, t, a) else prog.els
        return is_final(t, a, branch)
    if isinstance(prog, While):
        if not ask(prog.cond, t, a):
            return True
        return is_final(t, a, prog.body)
    raise ValidationError(f"not a program node: {prog!r}")


def program_step(g: GKAB, filter_kind: str, cfg: ServiceConfig, a, scmap: dict, prog):
    """The program execution relation: all (label, A', m', remaining-program).

    The while rule unrolls to Seq(body', while...) keeping the loop node's
    own id for the tail; the synthetic Seq gets a derived id so residual
    programs canonicalize deterministically.
    """
    out = []
    if isinstance(prog, Empty):
        return out
    if isinstance(prog, Invoke):
        action = g.action(prog.action)
        for row in _sorted_answers(prog.guard, g.tbox, a, prog.params):
            sigma = dict(zip(action.params, row))
            for a2, m2, theta in tell(g.tbox, filter_kind, a, scmap, action, sigma, cfg):
                label = (action.name, tuple(sorted(sigma.items())), _scmap_tuple(theta))
                out.append((label, a2, m2, Empty(pid=prog.pid + ".e")))
        return out
    if isinstance(prog, Choice):
        out.extend(program_step(g, filter_kind, cfg, a, scmap, prog.left))
        out.extend(program_step(g, filter_kind, cfg, a, scmap, prog.right))
        return out
    if isinstance(prog, Seq):
        for label, a2, m2, rem in program_step(g, filter_kind, cfg, a, scmap, prog.left):
            out.append((label, a2, m2, Seq(rem, prog.right, pid=prog.pid)))
        if is_final(g.tbox, a, prog.left):
            out.extend(program_step(g, filter_kind, cfg, a, scmap, prog.right))
        return out
    if isinstance(prog, If):
        branch = prog.then if ask(prog.cond, g.tbox, a) else prog.els
        return program_step(g, filter_kind, cfg, a, scmap, branch)
    if isinstance(prog, While):
        if ask(prog.cond, g.tbox, a):
            for label, a2, m2, rem in program_step(g, filter_kind, cfg, a, scmap, prog.body):
                out.append((label, a2, m2, Seq(rem, prog, pid=prog.pid + ".u")))
        return out
    raise ValidationError(f"not a program node: {prog!r}")


def build_ts_gkab(g: GKAB, filter_kind: str, cfg: ServiceConfig,
                  limits: Optional[Limits] = None) -> TransitionSystem:
    """Least state/edge sets closed under the program execution relation."""
    limits = limits or Limits()
    if not kb.is_consistent(g.tbox, g.abox0):
        raise PreconditionViolated("initial ABox is T-inconsistent")
    ts = TransitionSystem(g.tbox, g.constants)
    monitor = _RunAdomMonitor(limits.max_run_adom)
    prog0 = g.program if g.program.pid else assign_pids(g.program)
    s0, _ = ts.add_state(frozenset(g.abox0), (), prog0)
    ts.initial = s0
    monitor.start(s0, g.abox0)
    frontier = [s0]
    while frontier:
        nxt = []
        for sid in frontier:
            state = ts.states[sid]
            scmap = dict(state.scmap)
            steps = program_step(g, filter_kind, cfg, state.abox, scmap, state.program)
            steps.sort(key=lambda s: (s[0], kb.abox_key(s[1]), _scmap_tuple(s[2]),
                                      s[3].pid))
            for label, a2, m2, rem in steps:
                dst, new = ts.add_state(frozenset(a2), _scmap_tuple(m2), rem)
                ts.add_edge(sid, dst, label)
                monitor.step(sid, dst, a2)
                if new:
                    nxt.append(dst)
                if len(ts) > limits.max_states:
                    raise StateLimitExceeded(f"more than {limits.max_states} states")
        frontier = nxt
    return ts
