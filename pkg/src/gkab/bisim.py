"""Decision procedures for the four bisimulation notions on finite systems.

Each is a greatest fixpoint computed by refining the candidate relation of
abox-compatible state pairs until all step conditions hold.  The second
argument is always the system carrying the bookkeeping markers; corridors
through marked intermediate states are precomputed as macro-successor maps.
"""

from __future__ import annotations

import logging

from . import kb
from .translations import REP_FACT, TEMP_FACT

log = logging.getLogger(__name__)


def equal_modulo_markers(a1, a2) -> bool:
    """Equality of the non-marker facts of two ABoxes."""
    return kb.strip_markers(a1) == kb.strip_markers(a2)


def _macro_image(ts, sid, marker) -> frozenset:
    """States reachable from sid via a (possibly empty) chain of
    marker-carrying intermediates, ending marker-free."""
    image = set()
    visited = set()
    frontier = [sid]
    first = True
    while frontier:
        nxt = []
        for s in frontier:
            for t in ts.successors(s):
                if marker not in ts.abox(t):
                    image.add(t)
                elif t not in visited:
                    visited.add(t)
                    nxt.append(t)
                elif not first:
                    log.debug("marker cycle through state %d; corridor dropped", t)
        frontier = nxt
        first = False
    return frozenset(image)


def _two_step_image(ts, sid, marker) -> frozenset:
    """States reachable in exactly two steps through one marked state."""
    image = set()
    for t in ts.successors(sid):
        if marker in ts.abox(t):
            for u in ts.successors(t):
                if marker not in ts.abox(u):
                    image.add(u)
    return frozenset(image)


def _greatest_bisim(ts1, ts2, compatible, forth_image, back_image):
    """Refine {(s1,s2) : compatible} under the step conditions.

    forth_image(s2) must answer every direct step of s1; every member of
    back_image(s2) must be answered by a direct step of s1.
    """
    pairs = set()
    for s1 in ts1.all_sids():
        for s2 in ts2.all_sids():
            if compatible(s1, s2):
                pairs.add((s1, s2))
    succ1 = {s: ts1.successors(s) for s in ts1.all_sids()}
    img2 = {s: forth_image(s) for s in ts2.all_sids()}
    back2 = {s: back_image(s) for s in ts2.all_sids()}
    changed = True
    while changed:
        changed = False
        for pair in list(pairs):
            s1, s2 = pair
            ok = all(any((t1, t2) in pairs for t2 in img2[s2]) for t1 in succ1[s1]) \
                and all(any((t1, t2) in pairs for t1 in succ1[s1]) for t2 in back2[s2])
            if not ok:
                pairs.discard(pair)
                changed = True
    return pairs


def e_bisimilar(ts1, ts2) -> bool:
    """Plain step-for-step bisimilarity with exact ABox equality."""
    def compatible(s1, s2):
        return ts1.abox(s1) == ts2.abox(s2)

    def image(s2):
        return frozenset(ts2.successors(s2))

    pairs = _greatest_bisim(ts1, ts2, compatible, image, image)
    return (ts1.initial, ts2.initial) in pairs


def j_bisimilar(ts1, ts2) -> bool:
    """Jumping bisimilarity: ts2 steps are corridors of ``__state(temp)``
    intermediates of any length; ABoxes compared modulo markers."""
    def compatible(s1, s2):
        return equal_modulo_markers(ts1.abox(s1), ts2.abox(s2))

    images = {s: _macro_image(ts2, s, TEMP_FACT) for s in ts2.all_sids()}
    pairs = _greatest_bisim(ts1, ts2, compatible,
                            lambda s: images[s], lambda s: images[s])
    return (ts1.initial, ts2.initial) in pairs


def l_bisimilar(ts1, ts2) -> bool:
    """Leaping bisimilarity: one mandatory first step, then an
    ``__state(rep)``-marked corridor; exact ABox equality at stable states."""
    def compatible(s1, s2):
        return ts1.abox(s1) == ts2.abox(s2)

    images = {}
    for s in ts2.all_sids():
        img = set()
        for nxt in ts2.successors(s):
            img |= _macro_image(ts2, nxt, REP_FACT)
        images[s] = frozenset(img)
    pairs = _greatest_bisim(ts1, ts2, compatible,
                            lambda s: images[s], lambda s: images[s])
    return (ts1.initial, ts2.initial) in pairs


def s_bisimilar(ts1, ts2) -> bool:
    """Skip-one bisimilarity: exactly two ts2 steps through one
    ``__state(temp)``-marked state per ts1 step; exact ABox equality."""
    def compatible(s1, s2):
        return ts1.abox(s1) == ts2.abox(s2)

    images = {s: _two_step_image(ts2, s, TEMP_FACT) for s in ts2.all_sids()}
    pairs = _greatest_bisim(ts1, ts2, compatible,
                            lambda s: images[s], lambda s: images[s])
    return (ts1.initial, ts2.initial) in pairs
