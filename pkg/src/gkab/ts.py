"""Explicit finite transition systems and their JSON/DOT views.

States carry an ABox, a service-call map, and (for GKAB systems) the
remaining program.  State identity is the canonical triple; ids follow
discovery order, so construction with sorted iteration is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import kb


@dataclass
class State:
    sid: int
    abox: frozenset
    scmap: tuple  # sorted ((fname, args...), value) pairs
    program: Optional[object] = None


@dataclass
class Limits:
    max_states: int = 100_000
    max_run_adom: Optional[int] = None


class TransitionSystem:
    def __init__(self, tbox=None, constants=frozenset()):
        self.tbox = tbox
        self.constants = frozenset(constants)
        self.states = []
        self._index = {}
        self.edges = {}  # src -> list of (label, dst)
        self.initial = None
        self._preds = None

    def __len__(self):
        return len(self.states)

    def state_key(self, abox, scmap, program):
        return (kb.abox_key(abox), scmap, program)

    def add_state(self, abox, scmap=(), program=None):
        """Insert-if-absent; returns (sid, is_new)."""
        key = self.state_key(abox, scmap, program)
        sid = self._index.get(key)
        if sid is not None:
            return sid, False
        sid = len(self.states)
        self.states.append(State(sid, frozenset(abox), scmap, program))
        self._index[key] = sid
        self.edges[sid] = []
        self._preds = None
        return sid, True

    def add_edge(self, src, dst, label):
        entry = (label, dst)
        if entry not in self.edges[src]:
            self.edges[src].append(entry)
            self._preds = None

    def abox(self, sid) -> frozenset:
        return self.states[sid].abox

    def successors(self, sid):
        return [dst for _, dst in self.edges[sid]]

    def predecessor_map(self):
        if self._preds is None:
            preds = {s.sid: set() for s in self.states}
            for src, outs in self.edges.items():
                for _, dst in outs:
                    preds[dst].add(src)
            self._preds = preds
        return self._preds

    def all_sids(self):
        return range(len(self.states))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        states = []
        for s in self.states:
            entry = {
                "id": s.sid,
                "abox": [str(f) for f in sorted(s.abox, key=lambda f: f.sort_key())],
                "scmap": [{"call": _call_str(c), "value": v} for c, v in s.scmap],
            }
            if s.program is not None:
                entry["program_pid"] = s.program.pid
            states.append(entry)
        edges = []
        for src in sorted(self.edges):
            for label, dst in self.edges[src]:
                action, sigma, theta = label
                edges.append({
                    "src": src,
                    "dst": dst,
                    "action": action,
                    "sigma": [{"var": k, "value": v} for k, v in sigma],
                    "theta": [{"call": _call_str(c), "value": v} for c, v in theta],
                })
        edges.sort(key=lambda e: (e["src"], e["dst"], e["action"],
                                  str(e["sigma"]), str(e["theta"])))
        return {"states": states, "edges": edges, "initial": self.initial}

    @classmethod
    def from_json(cls, doc: dict) -> "TransitionSystem":
        ts = cls()
        by_id = sorted(doc["states"], key=lambda s: s["id"])
        for entry in by_id:
            abox = frozenset(parse_fact(s) for s in entry["abox"])
            scmap = tuple((_parse_call(e["call"]), e["value"]) for e in entry["scmap"])
            sid, _ = ts.add_state(abox, scmap, None)
            if sid != entry["id"]:
                raise ValueError("non-contiguous state ids in TS JSON")
        for e in doc["edges"]:
            sigma = tuple((d["var"], d["value"]) for d in e["sigma"])
            theta = tuple((_parse_call(d["call"]), d["value"]) for d in e["theta"])
            ts.add_edge(e["src"], e["dst"], (e["action"], sigma, theta))
        ts.initial = doc["initial"]
        return ts

    def to_dot(self) -> str:
        lines = ["digraph ts {"]
        for s in self.states:
            facts = "\\n".join(str(f) for f in sorted(s.abox, key=lambda f: f.sort_key()))
            shape = "doublecircle" if s.sid == self.initial else "ellipse"
            lines.append(f'  s{s.sid} [shape={shape}, label="s{s.sid}\\n{facts}"];')
        for src in sorted(self.edges):
            for (action, sigma, _), dst in self.edges[src]:
                args = ",".join(v for _, v in sigma)
                lines.append(f'  s{src} -> s{dst} [label="{action}({args})"];')
        lines.append("}")
        return "\n".join(lines)


def _call_str(call) -> str:
    fname, args = call[0], call[1:]
    return f"{fname}({','.join(args)})"


def _parse_call(text: str):
    fname, rest = text.split("(", 1)
    args = rest.rstrip(")").split(",") if rest.rstrip(")") else []
    return (fname, *args)


def parse_fact(text: str):
    pred, rest = text.split("(", 1)
    args = rest.rstrip(")").split(",")
    if len(args) == 1:
        return kb.ConceptFact(pred, args[0])
    return kb.RoleFact(pred, args[0], args[1])
