"""Translations between KAB variants and the matching formula translations.

The inconsistency-aware variants compile to standard GKABs by pairing every
action invocation with explicit repair machinery:

* b-repair: a while-loop repair program over per-violation deletion actions,
  bracketed by marker actions that set/unset ``__state(rep)``;
* c-repair: a single 0-ary action deleting everything involved in a
  violation;
* bold evolution: a duplicated ``__n`` vocabulary tracks the facts an action
  just added, an evolution action removes the old facts they clash with and
  flushes the duplicates, and the renamed TBox blocks inconsistent additions.

Golog programs compile to plain condition-action processes via flag markers
threaded through the program structure (``tgprog``); intermediate states
carry ``__state(temp)``.  Each transition-system translation comes with a
formula translation that absorbs the extra steps.
"""

from __future__ import annotations

import itertools
import logging

from . import kb
from .actions import KAB, Action, Effect, ProcessRule
from .errors import EmptyProcess, FormulaNotNNF, NonMonotoneFixpoint, VocabularyCollision
from .golog import (GKAB, Choice, Empty, If, Invoke, Seq, While, assign_pids)
from .mucalc import (AndF, BoxF, DiamondF, ExistsF, ForallF, MuF, NotF, NuF,
                     OrF, PredVar, QueryF, TRUE_F)
from .queries import (TRUE, AndQ, CAtom, EqAtom, ExistsQ, NotQ, RAtom, Var,
                      build_qunsat, concept_query_atoms, embed_atoms,
                      funct_violation_guard, or_q, role_query_atom)

log = logging.getLogger(__name__)

REP_ATOM = CAtom(kb.MARKER_STATE, kb.REP_CONST)
TEMP_ATOM = CAtom(kb.MARKER_STATE, kb.TEMP_CONST)
REP_FACT = kb.ConceptFact(kb.MARKER_STATE, kb.REP_CONST)
TEMP_FACT = kb.ConceptFact(kb.MARKER_STATE, kb.TEMP_CONST)

REP_Q = QueryF(embed_atoms([REP_ATOM]))
TEMP_Q = QueryF(embed_atoms([TEMP_ATOM]))

DUP_SUFFIX = "__n"
MARKED_SUFFIX = "__t"


def _flag_atom(c: str) -> CAtom:
    return CAtom(kb.MARKER_FLAG, c)


def _flag_fact(c: str) -> kb.ConceptFact:
    return kb.ConceptFact(kb.MARKER_FLAG, c)


def _noop_atom(c) -> CAtom:
    return CAtom(kb.MARKER_NOOP, c)


def _ckey(b) -> str:
    if isinstance(b, kb.ConceptName):
        return b.name
    return "ex_" + b.role.name + ("_inv" if b.role.inv else "")


def _rkey(r) -> str:
    return r.name + ("_inv" if r.inv else "")


def _concept_pattern(b, x, vname):
    """(guard atoms, deletable head) for membership of x in b; the witness
    variable is named so every instance gets deleted."""
    if isinstance(b, kb.ConceptName):
        atom = CAtom(b.name, x)
        return [atom], atom
    atom = role_query_atom(b.role, x, Var(vname))
    return [atom], atom


def _sorted_cpairs(pairs):
    return sorted(pairs, key=lambda p: (str(p[0]), str(p[1])))


def _sorted_rpairs(pairs):
    return sorted(pairs, key=lambda p: (str(p[0]), str(p[1])))


def map_invokes(prog, fn):
    """Structurally replace every atomic invocation; ids are dropped and must
    be reassigned afterwards."""
    if isinstance(prog, Empty):
        return Empty()
    if isinstance(prog, Invoke):
        return fn(prog)
    if isinstance(prog, Choice):
        return Choice(map_invokes(prog.left, fn), map_invokes(prog.right, fn))
    if isinstance(prog, Seq):
        return Seq(map_invokes(prog.left, fn), map_invokes(prog.right, fn))
    if isinstance(prog, If):
        return If(prog.cond, map_invokes(prog.then, fn), map_invokes(prog.els, fn))
    if isinstance(prog, While):
        return While(prog.cond, map_invokes(prog.body, fn))
    raise TypeError(f"not a program node: {prog!r}")


def _chain_seq(parts):
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def _chain_choice(parts):
    out = parts[0]
    for p in parts[1:]:
        out = Choice(out, p)
    return out


# -- S-KAB -> S-GKAB ----------------------------------------------------------

def tkabs(k: KAB) -> GKAB:
    """while true do (a1 | ... | an), one invocation per condition-action rule."""
    if not k.process:
        log.warning("empty process: translating to the empty program instead of "
                    "an ill-formed while-loop")
        prog = Empty()
    else:
        invokes = [Invoke(r.guard, r.action, r.args) for r in k.process]
        prog = While(TRUE, _chain_choice(invokes))
    return GKAB(k.tbox, k.constants, k.distinguished, k.abox0, k.actions,
                assign_pids(prog))


# -- b-repair machinery -------------------------------------------------------

def brepair_actions(t: kb.TBox):
    """The guarded invocation set and action set of the b-repair program.

    Per functionality assertion: keep one witness tuple, delete the rest.
    Per entailed negative inclusion (in both orientations): delete the
    left-hand side's witnessing facts.
    """
    cl = kb.saturate_negatives(t)
    fresh = itertools.count()
    actions = {}
    invocations = []
    for r in sorted(t.functs):
        name = f"__br_f_{_rkey(r)}"
        x, y, z = Var("x"), Var("y"), Var("z")
        eff_guard = AndQ(embed_atoms([role_query_atom(r, x, z)]),
                         NotQ(embed_atoms([EqAtom(z, y)])))
        actions[name] = Action(name, ("x", "y"),
                               (Effect(eff_guard, (), (role_query_atom(r, x, z),)),))
        invocations.append((ExistsQ("z", funct_violation_guard(r)), name, ("x", "y")))
    for b1, b2 in _sorted_cpairs(cl.concept_pairs):
        name = f"__br_c_{_ckey(b1)}"
        if name not in actions:
            atoms, head = _concept_pattern(b1, Var("x"), "z")
            guard = TRUE if isinstance(b1, kb.ConceptName) else embed_atoms(atoms)
            actions[name] = Action(name, ("x",), (Effect(guard, (), (head,)),))
        x = Var("x")
        qn = embed_atoms(concept_query_atoms(b1, x, fresh)
                         + concept_query_atoms(b2, x, fresh))
        invocations.append((qn, name, ("x",)))
    for r1, r2 in _sorted_rpairs(cl.role_pairs):
        name = f"__br_r_{_rkey(r1)}"
        x, y = Var("x"), Var("y")
        if name not in actions:
            actions[name] = Action(name, ("x", "y"),
                                   (Effect(TRUE, (), (role_query_atom(r1, x, y),)),))
        qn = embed_atoms([role_query_atom(r1, x, y), role_query_atom(r2, x, y)])
        invocations.append((qn, name, ("x", "y")))
    return invocations, tuple(actions.values())


def brepair_program(t: kb.TBox):
    """while q_unsat do (a1 | ... | an), plus the actions it invokes."""
    invocations, actions = brepair_actions(t)
    qunsat = build_qunsat(t)
    if invocations:
        body = _chain_choice([Invoke(g, name, params) for g, name, params in invocations])
    else:
        body = Empty()
    return While(qunsat, body), actions


REP_ON = Action("__rep_on", (), (Effect(TRUE, (REP_ATOM,), ()),))
REP_OFF = Action("__rep_off", (), (Effect(TRUE, (), (REP_ATOM,)),))


def tgkabb(g: GKAB) -> GKAB:
    """B-GKAB -> S-GKAB: invoke ; set M(rep) ; repair loop ; unset M(rep).

    The result keeps only the positive inclusions, so it never rejects an
    update itself; the repair loop restores consistency w.r.t. the full TBox.
    """
    t = g.tbox
    _, bacts = brepair_actions(t)

    def repl(inv):
        delta_b, _ = brepair_program(t)
        return _chain_seq([Invoke(inv.guard, inv.action, inv.params),
                           Invoke(TRUE, REP_ON.name, ()),
                           delta_b,
                           Invoke(TRUE, REP_OFF.name, ())])

    prog = assign_pids(map_invokes(g.program, repl))
    actions = tuple(g.actions) + bacts + (REP_ON, REP_OFF)
    return GKAB(t.positive_only(), g.constants | {kb.REP_CONST},
                g.distinguished | {kb.REP_CONST}, g.abox0, actions, prog)


# -- c-repair machinery -------------------------------------------------------

def crepair_action(t: kb.TBox) -> Action:
    """0-ary action deleting every fact involved in some violation.

    A no-op on consistent ABoxes; also clears the intermediate-state marker
    so it can close a marked invoke/repair pair.
    """
    cl = kb.saturate_negatives(t)
    effects = []
    for r in sorted(t.functs):
        x, y, z = Var("x"), Var("y"), Var("z")
        guard = AndQ(embed_atoms([role_query_atom(r, x, y), role_query_atom(r, x, z)]),
                     NotQ(embed_atoms([EqAtom(y, z)])))
        effects.append(Effect(guard, (), (role_query_atom(r, x, y),
                                          role_query_atom(r, x, z))))
    seen = set()
    for b1, b2 in _sorted_cpairs(cl.concept_pairs):
        if frozenset((b1, b2)) in seen:
            continue
        seen.add(frozenset((b1, b2)))
        x = Var("x")
        atoms1, head1 = _concept_pattern(b1, x, "z1")
        atoms2, head2 = _concept_pattern(b2, x, "z2")
        effects.append(Effect(embed_atoms(atoms1 + atoms2), (), (head1, head2)))
    seen = set()
    for r1, r2 in _sorted_rpairs(cl.role_pairs):
        if frozenset((r1, r2)) in seen:
            continue
        seen.add(frozenset((r1, r2)))
        x, y = Var("x"), Var("y")
        a1 = role_query_atom(r1, x, y)
        a2 = role_query_atom(r2, x, y)
        effects.append(Effect(embed_atoms([a1, a2]), (), (a1, a2)))
    effects.append(Effect(TRUE, (), (TEMP_ATOM,)))
    return Action("__crep", (), tuple(effects))


def _marked_action(a: Action, extra_adds=()) -> Action:
    """A copy of a user action that also raises the intermediate-state marker."""
    return Action(a.name + MARKED_SUFFIX, a.params,
                  tuple(a.effects) + tuple(extra_adds)
                  + (Effect(TRUE, (TEMP_ATOM,), ()),))


def tgkabc(g: GKAB) -> GKAB:
    """C-GKAB -> S-GKAB: every invoke is followed by the c-repair action."""
    t = g.tbox
    crep = crepair_action(t)

    def repl(inv):
        return Seq(Invoke(inv.guard, inv.action + MARKED_SUFFIX, inv.params),
                   Invoke(TRUE, crep.name, ()))

    prog = assign_pids(map_invokes(g.program, repl))
    actions = tuple(_marked_action(a) for a in g.actions) + (crep,)
    return GKAB(t.positive_only(), g.constants | {kb.TEMP_CONST},
                g.distinguished | {kb.TEMP_CONST}, g.abox0, actions, prog)


# -- evolution machinery ------------------------------------------------------

def _dup(n: str) -> str:
    return n + DUP_SUFFIX


def _dup_concept(b):
    if isinstance(b, kb.ConceptName):
        return kb.ConceptName(_dup(b.name))
    return kb.SomeRole(kb.Role(_dup(b.role.name), b.role.inv))


def _dup_atom(atom):
    if isinstance(atom, CAtom):
        return CAtom(_dup(atom.pred), atom.t)
    return RAtom(_dup(atom.pred), atom.t1, atom.t2)


def evolution_action(t: kb.TBox) -> Action:
    """0-ary action realizing bold evolution against the ``__n`` copies.

    Old facts clashing with newly added ones (tracked in the duplicated
    vocabulary) are removed asymmetrically, then the duplicates are flushed.
    """
    cl = kb.saturate_negatives(t)
    fresh = itertools.count()
    effects = []
    for r in sorted(t.functs):
        x, y, z = Var("x"), Var("y"), Var("z")
        rn = kb.Role(_dup(r.name), r.inv)
        guard = AndQ(embed_atoms([role_query_atom(r, x, y), role_query_atom(r, x, z),
                                  role_query_atom(rn, x, y)]),
                     NotQ(embed_atoms([EqAtom(y, z)])))
        effects.append(Effect(guard, (), (role_query_atom(r, x, z),)))
    for b1, b2 in _sorted_cpairs(cl.concept_pairs):
        x = Var("x")
        atoms1 = concept_query_atoms(b1, x, fresh)
        atoms2, head2 = _concept_pattern(b2, x, f"z{next(fresh)}")
        atomsn = concept_query_atoms(_dup_concept(b1), x, fresh)
        effects.append(Effect(embed_atoms(atoms1 + atoms2 + atomsn), (), (head2,)))
    for r1, r2 in _sorted_rpairs(cl.role_pairs):
        x, y = Var("x"), Var("y")
        rn = kb.Role(_dup(r1.name), r1.inv)
        guard = embed_atoms([role_query_atom(r1, x, y), role_query_atom(r2, x, y),
                             role_query_atom(rn, x, y)])
        effects.append(Effect(guard, (), (role_query_atom(r2, x, y),)))
    for n in sorted(t.concepts):
        atom = CAtom(_dup(n), Var("x"))
        effects.append(Effect(embed_atoms([atom]), (), (atom,)))
    for p in sorted(t.roles):
        atom = RAtom(_dup(p), Var("x"), Var("y"))
        effects.append(Effect(embed_atoms([atom]), (), (atom,)))
    effects.append(Effect(TRUE, (), (TEMP_ATOM,)))
    return Action("__erep", (), tuple(effects))


def _dup_action(a: Action) -> Action:
    """Every addition is mirrored into the duplicated vocabulary."""
    effects = []
    for eff in a.effects:
        adds = tuple(eff.add) + tuple(_dup_atom(at) for at in eff.add)
        effects.append(Effect(eff.guard, adds, eff.dele))
    effects.append(Effect(TRUE, (TEMP_ATOM,), ()))
    return Action(a.name + MARKED_SUFFIX, a.params, tuple(effects))


def tgkabe(g: GKAB) -> GKAB:
    """E-GKAB -> S-GKAB over T_p plus the renamed TBox.

    The renamed negative inclusions apply to the ``__n`` copies only, which
    blocks exactly the updates whose additions are themselves inconsistent.
    """
    t = g.tbox
    for n in sorted(t.concepts | t.roles):
        if n.endswith(DUP_SUFFIX):
            raise VocabularyCollision(f"declared name {n!r} collides with the "
                                      f"{DUP_SUFFIX!r} suffix scheme")
    tn = t.renamed(_dup)
    erep = evolution_action(t)

    def repl(inv):
        return Seq(Invoke(inv.guard, inv.action + MARKED_SUFFIX, inv.params),
                   Invoke(TRUE, erep.name, ()))

    prog = assign_pids(map_invokes(g.program, repl))
    actions = tuple(_dup_action(a) for a in g.actions) + (erep,)
    return GKAB(t.positive_only().merged(tn), g.constants | {kb.TEMP_CONST},
                g.distinguished | {kb.TEMP_CONST}, g.abox0, actions, prog)


# -- S-GKAB -> S-KAB (program compilation) ------------------------------------

class _ProgCtx:
    def __init__(self):
        self.n_const = 0
        self.n_act = 0
        self.rules = []
        self.actions = []
        self.ppre = {}
        self.post = {}
        self.consts = set()

    def fresh_const(self) -> str:
        c = f"c{self.n_const}"
        self.n_const += 1
        self.consts.add(c)
        return c

    def fresh_action(self, hint: str) -> str:
        name = f"__g{self.n_act}_{hint}"
        self.n_act += 1
        return name


NOOP_CLEANUP = Effect(embed_atoms([CAtom(kb.MARKER_NOOP, Var("x"))]), (),
                      (CAtom(kb.MARKER_NOOP, Var("x")),))


def _tgprog(pre: str, prog, post: str, ctx: _ProgCtx, actions_by_name):
    ctx.ppre[prog.pid] = _flag_fact(pre)
    ctx.post[prog.pid] = _flag_fact(post)
    if isinstance(prog, Empty):
        name = ctx.fresh_action("eps")
        ctx.actions.append(Action(name, (), (
            Effect(TRUE, (_flag_atom(post), TEMP_ATOM), (_flag_atom(pre),)),)))
        ctx.rules.append(ProcessRule(embed_atoms([_flag_atom(pre)]), name, ()))
    elif isinstance(prog, Invoke):
        base = actions_by_name[prog.action]
        name = ctx.fresh_action(base.name)
        effects = tuple(base.effects) + (
            Effect(TRUE, (_flag_atom(post),), ()),
            Effect(TRUE, (), (_flag_atom(pre), TEMP_ATOM)),
            NOOP_CLEANUP,
        )
        ctx.actions.append(Action(name, base.params, effects))
        guard = AndQ(prog.guard, embed_atoms([_flag_atom(pre)]))
        ctx.rules.append(ProcessRule(guard, name, prog.params))
        _tgprog(post, Empty(pid=prog.pid + ".e"), post, ctx, actions_by_name)
    elif isinstance(prog, Choice):
        c1, c2 = ctx.fresh_const(), ctx.fresh_const()
        for c, hint in ((c1, "left"), (c2, "right")):
            name = ctx.fresh_action(hint)
            ctx.actions.append(Action(name, (), (
                Effect(TRUE, (_flag_atom(c), TEMP_ATOM), (_flag_atom(pre),)),)))
            ctx.rules.append(ProcessRule(embed_atoms([_flag_atom(pre)]), name, ()))
        _tgprog(c1, prog.left, post, ctx, actions_by_name)
        _tgprog(c2, prog.right, post, ctx, actions_by_name)
    elif isinstance(prog, Seq):
        mid = ctx.fresh_const()
        _tgprog(pre, prog.left, mid, ctx, actions_by_name)
        _tgprog(mid, prog.right, post, ctx, actions_by_name)
    elif isinstance(prog, If):
        c1, c2 = ctx.fresh_const(), ctx.fresh_const()
        for c, hint, cond in ((c1, "if", prog.cond), (c2, "else", NotQ(prog.cond))):
            name = ctx.fresh_action(hint)
            ctx.actions.append(Action(name, (), (
                Effect(TRUE, (_flag_atom(c), TEMP_ATOM), (_flag_atom(pre),)),)))
            ctx.rules.append(ProcessRule(
                AndQ(embed_atoms([_flag_atom(pre)]), cond), name, ()))
        _tgprog(c1, prog.then, post, ctx, actions_by_name)
        _tgprog(c2, prog.els, post, ctx, actions_by_name)
    elif isinstance(prog, While):
        lstart = ctx.fresh_const()
        noopc = ctx.fresh_const()
        do_name = ctx.fresh_action("doloop")
        end_name = ctx.fresh_action("endloop")
        ctx.actions.append(Action(do_name, (), (
            Effect(TRUE, (_flag_atom(lstart), _noop_atom(noopc), TEMP_ATOM),
                   (_flag_atom(pre),)),)))
        ctx.actions.append(Action(end_name, (), (
            Effect(TRUE, (_flag_atom(post), TEMP_ATOM),
                   (_flag_atom(pre), _noop_atom(noopc))),)))
        ctx.rules.append(ProcessRule(
            AndQ(embed_atoms([_flag_atom(pre)]),
                 AndQ(prog.cond, NotQ(embed_atoms([_noop_atom(noopc)])))),
            do_name, ()))
        ctx.rules.append(ProcessRule(
            AndQ(embed_atoms([_flag_atom(pre)]),
                 or_q(NotQ(prog.cond), embed_atoms([_noop_atom(noopc)]))),
            end_name, ()))
        _tgprog(lstart, prog.body, pre, ctx, actions_by_name)
    else:
        raise TypeError(f"not a program node: {prog!r}")


def tgprog(pre: str, prog, post: str, actions):
    """Compile a program into condition-action rules between two flags.

    Returns (ppre, post, rules, actions): the flag tables keyed by program
    id, the generated process, and the generated action set.
    """
    ctx = _ProgCtx()
    by_name = {a.name: a for a in actions}
    _tgprog(pre, prog, post, ctx, by_name)
    return ctx.ppre, ctx.post, tuple(ctx.rules), tuple(ctx.actions), ctx.consts


START_CONST = "start"
END_CONST = "end"


def tgkab(g: GKAB) -> KAB:
    """S-GKAB -> S-KAB; the initial ABox is marked with the start flag."""
    prog = g.program if g.program.pid else assign_pids(g.program)
    ppre, post, rules, actions, consts = tgprog(START_CONST, prog, END_CONST, g.actions)
    new_consts = set(consts) | {START_CONST, END_CONST, kb.TEMP_CONST}
    return KAB(g.tbox, g.constants | new_consts, g.distinguished | new_consts,
               frozenset(g.abox0) | {_flag_fact(START_CONST)}, actions, rules)


# -- formula translations -----------------------------------------------------

def is_nnf(f) -> bool:
    if isinstance(f, NotF):
        return isinstance(f.f, QueryF)
    if isinstance(f, (QueryF, PredVar)):
        return True
    if isinstance(f, (AndF, OrF)):
        return is_nnf(f.a) and is_nnf(f.b)
    if isinstance(f, (ExistsF, ForallF, DiamondF, BoxF)):
        return is_nnf(f.f)
    if isinstance(f, (MuF, NuF)):
        return is_nnf(f.body)
    return False


def _subst_pred(f, name, repl):
    if isinstance(f, PredVar):
        return repl if f.name == name else f
    if isinstance(f, QueryF):
        return f
    if isinstance(f, NotF):
        return NotF(_subst_pred(f.f, name, repl))
    if isinstance(f, AndF):
        return AndF(_subst_pred(f.a, name, repl), _subst_pred(f.b, name, repl))
    if isinstance(f, OrF):
        return OrF(_subst_pred(f.a, name, repl), _subst_pred(f.b, name, repl))
    if isinstance(f, ExistsF):
        return ExistsF(f.var, _subst_pred(f.f, name, repl))
    if isinstance(f, ForallF):
        return ForallF(f.var, _subst_pred(f.f, name, repl))
    if isinstance(f, DiamondF):
        return DiamondF(_subst_pred(f.f, name, repl))
    if isinstance(f, BoxF):
        return BoxF(_subst_pred(f.f, name, repl))
    if isinstance(f, (MuF, NuF)):
        if f.var == name:
            return f
        return type(f)(f.var, _subst_pred(f.body, name, repl))
    raise TypeError(f"not a formula node: {f!r}")


def nnf(f):
    """Negation normal form; negations end up on query leaves only, greatest
    fixpoints arise from negated least fixpoints."""
    if isinstance(f, (QueryF, PredVar)):
        return f
    if isinstance(f, AndF):
        return AndF(nnf(f.a), nnf(f.b))
    if isinstance(f, OrF):
        return OrF(nnf(f.a), nnf(f.b))
    if isinstance(f, ExistsF):
        return ExistsF(f.var, nnf(f.f))
    if isinstance(f, ForallF):
        return ForallF(f.var, nnf(f.f))
    if isinstance(f, DiamondF):
        return DiamondF(nnf(f.f))
    if isinstance(f, BoxF):
        return BoxF(nnf(f.f))
    if isinstance(f, MuF):
        return MuF(f.var, nnf(f.body))
    if isinstance(f, NuF):
        return NuF(f.var, nnf(f.body))
    if isinstance(f, NotF):
        return _neg(f.f)
    raise TypeError(f"not a formula node: {f!r}")


def _neg(f):
    if isinstance(f, QueryF):
        return NotF(f)
    if isinstance(f, NotF):
        return nnf(f.f)
    if isinstance(f, AndF):
        return OrF(_neg(f.a), _neg(f.b))
    if isinstance(f, OrF):
        return AndF(_neg(f.a), _neg(f.b))
    if isinstance(f, ExistsF):
        return ForallF(f.var, _neg(f.f))
    if isinstance(f, ForallF):
        return ExistsF(f.var, _neg(f.f))
    if isinstance(f, DiamondF):
        return BoxF(_neg(f.f))
    if isinstance(f, BoxF):
        return DiamondF(_neg(f.f))
    if isinstance(f, MuF):
        return NuF(f.var, _neg(_subst_pred(f.body, f.var, NotF(PredVar(f.var)))))
    if isinstance(f, NuF):
        return MuF(f.var, _neg(_subst_pred(f.body, f.var, NotF(PredVar(f.var)))))
    if isinstance(f, PredVar):
        raise NonMonotoneFixpoint(
            f"negation reached predicate variable {f.name}; body is not monotone")
    raise TypeError(f"not a formula node: {f!r}")


def _translate_modalities(f, diamond_fn, box_fn, counter):
    def rec(node):
        if isinstance(node, QueryF):
            return node
        if isinstance(node, NotF):
            if not isinstance(node.f, QueryF):
                raise FormulaNotNNF("negation above a non-query subformula")
            return node
        if isinstance(node, AndF):
            return AndF(rec(node.a), rec(node.b))
        if isinstance(node, OrF):
            return OrF(rec(node.a), rec(node.b))
        if isinstance(node, ExistsF):
            return ExistsF(node.var, rec(node.f))
        if isinstance(node, ForallF):
            return ForallF(node.var, rec(node.f))
        if isinstance(node, MuF):
            return MuF(node.var, rec(node.body))
        if isinstance(node, NuF):
            return NuF(node.var, rec(node.body))
        if isinstance(node, PredVar):
            return node
        if isinstance(node, DiamondF):
            return diamond_fn(rec(node.f), next(counter))
        if isinstance(node, BoxF):
            return box_fn(rec(node.f), next(counter))
        raise TypeError(f"not a formula node: {node!r}")

    return rec(f)


def _loop_until_stable(marker_q, inner, z):
    """mu Z. ((marker and <>Z) or (not marker and inner))"""
    return MuF(z, OrF(AndF(marker_q, DiamondF(PredVar(z))),
                      AndF(NotF(marker_q), inner)))


def _box_until_stable(marker_q, inner, z):
    """mu Z. ((marker and []Z and <>true) or (not marker and inner))"""
    return MuF(z, OrF(AndF(marker_q, AndF(BoxF(PredVar(z)), DiamondF(TRUE_F))),
                      AndF(NotF(marker_q), inner)))


def tforb(f):
    """Formula translation matching tgkabb: each next-state step becomes two
    steps plus reachability of the next M(rep)-free state."""
    if not is_nnf(f):
        raise FormulaNotNNF("tforb requires a formula in negation normal form")
    counter = itertools.count()
    return _translate_modalities(
        f,
        lambda inner, k: DiamondF(DiamondF(_loop_until_stable(REP_Q, inner, f"_Z{k}"))),
        lambda inner, k: BoxF(BoxF(_box_until_stable(REP_Q, inner, f"_Z{k}"))),
        counter)


def tford(f):
    """Formula translation matching tgkabc/tgkabe: every modality doubles."""
    if isinstance(f, QueryF):
        return f
    if isinstance(f, NotF):
        return NotF(tford(f.f))
    if isinstance(f, AndF):
        return AndF(tford(f.a), tford(f.b))
    if isinstance(f, OrF):
        return OrF(tford(f.a), tford(f.b))
    if isinstance(f, ExistsF):
        return ExistsF(f.var, tford(f.f))
    if isinstance(f, ForallF):
        return ForallF(f.var, tford(f.f))
    if isinstance(f, DiamondF):
        return DiamondF(DiamondF(tford(f.f)))
    if isinstance(f, BoxF):
        return BoxF(BoxF(tford(f.f)))
    if isinstance(f, PredVar):
        return f
    if isinstance(f, (MuF, NuF)):
        return type(f)(f.var, tford(f.body))
    raise TypeError(f"not a formula node: {f!r}")


def tforj(f):
    """Formula translation matching tgkab: one step plus a temp-marked corridor."""
    if not is_nnf(f):
        raise FormulaNotNNF("tforj requires a formula in negation normal form")
    counter = itertools.count()
    return _translate_modalities(
        f,
        lambda inner, k: DiamondF(_loop_until_stable(TEMP_Q, inner, f"_Z{k}")),
        lambda inner, k: BoxF(_box_until_stable(TEMP_Q, inner, f"_Z{k}")),
        counter)
