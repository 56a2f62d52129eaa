"""Repair semantics over a DL-Lite_A KB: b-repairs, c-repair, bold evolution.

b-repairs are the maximal T-consistent subsets of an ABox.  Since DL-Lite_A
inconsistency is always witnessed by at most two facts, they are exactly
free-facts plus a maximal independent set of the conflict graph; maximal
independent sets are enumerated as maximal cliques of the complement graph.
"""

from __future__ import annotations

import networkx as nx

from . import kb
from .errors import CombinatorialLimit, PreconditionViolated

REPAIR_CAP = 4096


def b_repairs(t: kb.TBox, a, cap: int = REPAIR_CAP):
    """All maximal T-consistent subsets of A, in a deterministic order."""
    conflicts = kb.conflict_pairs(t, a)
    conflicted = set()
    for c in conflicts:
        conflicted.update(c)
    free = frozenset(a) - conflicted
    self_conf = {f for c in conflicts if len(c) == 1 for f in c}
    candidates = sorted(conflicted - self_conf, key=lambda f: f.sort_key())
    if not candidates:
        return [frozenset(free)]
    graph = nx.Graph()
    graph.add_nodes_from(candidates)
    for c in conflicts:
        if len(c) == 2:
            f1, f2 = tuple(c)
            if f1 not in self_conf and f2 not in self_conf:
                graph.add_edge(f1, f2)
    out = []
    for clique in nx.find_cliques(nx.complement(graph)):
        out.append(frozenset(free) | frozenset(clique))
        if len(out) > cap:
            raise CombinatorialLimit(f"more than {cap} b-repairs")
    out.sort(key=kb.abox_key)
    return out


def c_repair(t: kb.TBox, a, cap: int = REPAIR_CAP):
    """The intersection of all b-repairs of A w.r.t. T."""
    reps = b_repairs(t, a, cap=cap)
    result = reps[0]
    for r in reps[1:]:
        result &= r
    return frozenset(result)


def evolve(t: kb.TBox, a, fplus, fminus):
    """Bold evolution: F+ wins, and the maximal compatible part of A \\ F- stays.

    A and F+ must each be T-consistent.  Because conflicts in DL-Lite_A are
    binary and can only run between an old and a new fact here, the maximal
    surviving subset is unique: exactly the old facts individually consistent
    with F+.
    """
    if not kb.is_consistent(t, a):
        raise PreconditionViolated("evolve: current ABox is T-inconsistent")
    fplus = frozenset(fplus)
    if not kb.is_consistent(t, fplus):
        raise PreconditionViolated("evolve: added facts are T-inconsistent")
    base = frozenset(a) - frozenset(fminus)
    keep = {f for f in base if kb.is_consistent(t, fplus | {f})}
    return frozenset(fplus | keep)
