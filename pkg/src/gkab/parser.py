"""Instance file parsing, validation, and serialization.

One UTF-8 text file holds a whole problem instance: vocabulary and TBox,
constants, initial ABox, actions, an optional condition-action process, an
optional Golog program, named temporal formulas, and the service
configuration.  Line comments start with ``#``.

Inside queries and formulas an identifier denotes a constant when it is a
declared constant of the instance, otherwise a variable.  Reserved ``__``
names are rejected unless ``allow_reserved`` is set (used to re-read
translated instances, which legitimately mention the marker vocabulary).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from . import kb, mucalc
from .actions import KAB, Action, Effect, ProcessRule, ServiceConfig, SvcTerm
from .errors import ParseError, ValidationError
from .golog import (GKAB, Choice, Empty, If, Invoke, Seq, While, assign_pids,
                    subprograms)
from .queries import (FALSE, TRUE, AndQ, CAtom, CQ, Embedded, EqAtom, ExistsQ,
                      NotQ, RAtom, UCQ, Var, cq_vars, forall_q, free_vars,
                      is_anon, or_q, term_str, ucq, validate_domain_independent)
from .ts import Limits

_SYMBOLS = ["<=", "<>", "[]", "->", "=>", "{", "}", "(", ")", "[", "]",
            ",", ";", ":", ".", "=", "|", "&", "!", "-"]


@dataclass
class _Tok:
    kind: str  # 'ident' | 'sym' | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str):
    toks = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(_Tok("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(line, col, f"unexpected character {ch!r}")
    toks.append(_Tok("eof", "", line, col))
    return toks


@dataclass
class Instance:
    tbox: kb.TBox
    constants: frozenset
    distinguished: frozenset
    abox0: frozenset
    actions: tuple = ()
    process: tuple = ()
    program: Optional[object] = None
    formulas: dict = field(default_factory=dict)
    service: ServiceConfig = ServiceConfig()
    limits: Limits = field(default_factory=Limits)

    def to_kab(self) -> KAB:
        return KAB(self.tbox, self.constants, self.distinguished, self.abox0,
                   self.actions, self.process)

    def to_gkab(self) -> GKAB:
        if self.program is None:
            raise ValidationError("instance has no program block")
        return GKAB(self.tbox, self.constants, self.distinguished, self.abox0,
                    self.actions, self.program)


class _Parser:
    def __init__(self, toks, allow_reserved=False):
        self.toks = toks
        self.pos = 0
        self.allow_reserved = allow_reserved
        self.constants = set()
        self.distinguished = set()
        self.concepts = set()
        self.roles = set()

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead=0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(tok.line, tok.col, msg)

    def expect(self, text) -> _Tok:
        t = self.next()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text!r}", t)
        return t

    def accept(self, text) -> bool:
        if self.peek().text == text:
            self.next()
            return True
        return False

    def ident(self, what="identifier") -> str:
        t = self.next()
        if t.kind != "ident":
            self.fail(f"expected {what}, found {t.text!r}", t)
        if t.text.startswith(kb.RESERVED_PREFIX) and not self.allow_reserved:
            self.fail(f"reserved name {t.text!r}", t)
        return t.text

    # -- query terms ------------------------------------------------------

    def _term(self) -> object:
        name = self.ident("term")
        if name in self.constants:
            return name
        return Var(name)

    def _query_atom(self, allow_markers=None):
        """pred(args) or term = term, as a UCQ atom."""
        if self.peek(1).text == "(":
            pred = self.ident("predicate")
            self.expect("(")
            t1 = self._term()
            if self.accept(","):
                t2 = self._term()
                self.expect(")")
                self._check_pred(pred, 2)
                return RAtom(pred, t1, t2)
            self.expect(")")
            self._check_pred(pred, 1)
            return CAtom(pred, t1)
        t1 = self._term()
        self.expect("=")
        t2 = self._term()
        return EqAtom(t1, t2)

    def _check_pred(self, pred, arity):
        if pred in kb.MARKER_PREDICATES:
            if not self.allow_reserved:
                self.fail(f"reserved predicate {pred!r}")
            return
        if arity == 1 and pred not in self.concepts:
            self.fail(f"undeclared concept name {pred!r}")
        if arity == 2 and pred not in self.roles:
            self.fail(f"undeclared role name {pred!r}")

    def _ucq(self) -> UCQ:
        cqs = [self._cq()]
        while self.accept("|"):
            cqs.append(self._cq())
        return ucq(cqs)

    def _cq(self) -> CQ:
        if self.peek().text == "true" and self.peek(1).text in ("]", "|"):
            self.next()
            return CQ(())
        atoms = [self._query_atom()]
        while self.accept("&"):
            atoms.append(self._query_atom())
        return CQ(tuple(atoms))

    # -- ECQ ----------------------------------------------------------------

    def parse_ecq(self):
        return self._ecq_or()

    def _ecq_or(self):
        q = self._ecq_and()
        while self.accept("|"):
            q = or_q(q, self._ecq_and())
        return q

    def _ecq_and(self):
        q = self._ecq_unary()
        while self.accept("&"):
            q = AndQ(q, self._ecq_unary())
        return q

    def _ecq_unary(self):
        t = self.peek()
        if t.text == "!":
            self.next()
            return NotQ(self._ecq_unary())
        if t.text in ("exists", "forall"):
            self.next()
            var = self.ident("variable")
            self.expect(".")
            body = self._ecq_unary()
            return ExistsQ(var, body) if t.text == "exists" else forall_q(var, body)
        if t.text == "(":
            self.next()
            q = self._ecq_or()
            self.expect(")")
            return q
        if t.text == "true":
            self.next()
            return TRUE
        if t.text == "false":
            self.next()
            return FALSE
        if t.text == "[":
            self.next()
            if self.accept("false"):
                self.expect("]")
                return FALSE
            u = self._ucq()
            self.expect("]")
            return Embedded(u)
        if t.kind == "ident":
            return Embedded(ucq([CQ((self._query_atom(),))]))
        self.fail(f"expected a query, found {t.text!r}")

    # -- mu-calculus formulas -------------------------------------------------

    def parse_formula(self):
        return self._f_or()

    def _f_or(self):
        f = self._f_and()
        while self.accept("|"):
            f = mucalc.OrF(f, self._f_and())
        return f

    def _f_and(self):
        f = self._f_unary()
        while self.accept("&"):
            f = mucalc.AndF(f, self._f_unary())
        return f

    def _f_unary(self):
        t = self.peek()
        if t.text == "!":
            self.next()
            return mucalc.NotF(self._f_unary())
        if t.text == "<>":
            self.next()
            return mucalc.DiamondF(self._f_unary())
        if t.text == "[]":
            self.next()
            return mucalc.BoxF(self._f_unary())
        if t.text in ("exists", "forall"):
            self.next()
            var = self.ident("variable")
            self.expect(".")
            body = self._f_unary()
            return (mucalc.ExistsF(var, body) if t.text == "exists"
                    else mucalc.ForallF(var, body))
        if t.text in ("mu", "nu"):
            self.next()
            var = self.ident("predicate variable")
            self.expect(".")
            body = self._f_unary()
            return mucalc.MuF(var, body) if t.text == "mu" else mucalc.NuF(var, body)
        if t.text == "(":
            self.next()
            f = self._f_or()
            self.expect(")")
            return f
        if t.text == "true":
            self.next()
            return mucalc.TRUE_F
        if t.text == "false":
            self.next()
            return mucalc.FALSE_F
        if t.text == "[":
            self.next()
            if self.accept("false"):
                self.expect("]")
                return mucalc.QueryF(FALSE)
            u = self._ucq()
            self.expect("]")
            return mucalc.QueryF(Embedded(u))
        if t.kind == "ident":
            if self.peek(1).text == "(" or self.peek(1).text == "=":
                return mucalc.QueryF(Embedded(ucq([CQ((self._query_atom(),))])))
            name = self.ident("predicate variable")
            return mucalc.PredVar(name)
        self.fail(f"expected a formula, found {t.text!r}")

    # -- Golog programs ---------------------------------------------------------

    def parse_program(self):
        return self._prog_choice()

    def _prog_choice(self):
        p = self._prog_seq()
        while self.accept("|"):
            p = Choice(p, self._prog_seq())
        return p

    def _prog_seq(self):
        p = self._prog_unit()
        while self.accept(";"):
            p = Seq(p, self._prog_unit())
        return p

    def _prog_unit(self):
        t = self.peek()
        if t.text == "skip":
            self.next()
            return Empty()
        if t.text == "pick":
            self.next()
            guard = self.parse_ecq()
            self.expect(".")
            name = self.ident("action name")
            self.expect("(")
            params = []
            if self.peek().text != ")":
                params.append(self.ident("parameter"))
                while self.accept(","):
                    params.append(self.ident("parameter"))
            self.expect(")")
            return Invoke(guard, name, tuple(params))
        if t.text == "if":
            self.next()
            cond = self.parse_ecq()
            self.expect("then")
            then = self._prog_unit()
            self.expect("else")
            els = self._prog_unit()
            return If(cond, then, els)
        if t.text == "while":
            self.next()
            cond = self.parse_ecq()
            self.expect("do")
            body = self._prog_unit()
            return While(cond, body)
        if t.text == "(":
            self.next()
            p = self._prog_choice()
            self.expect(")")
            return p
        self.fail(f"expected a program, found {t.text!r}")

    # -- blocks ------------------------------------------------------------------

    def _parse_constants_block(self):
        self.expect("{")
        while not self.accept("}"):
            distinguished = self.accept("distinguished")
            names = [self.ident("constant")]
            while self.accept(","):
                names.append(self.ident("constant"))
            self.expect(";")
            for n in names:
                self.constants.add(n)
                if distinguished:
                    self.distinguished.add(n)

    def _concept_or_role_expr(self):
        """Parse one inclusion operand; bare names resolve by declaration."""
        if self.accept("exists"):
            name = self.ident("role name")
            inv = self.accept("-")
            return ("concept", kb.SomeRole(kb.Role(name, inv)))
        tok = self.peek()
        name = self.ident("name")
        if self.accept("-"):
            return ("role", kb.Role(name, True))
        if name in self.roles:
            return ("role", kb.Role(name, False))
        if name in self.concepts:
            return ("concept", kb.ConceptName(name))
        self.fail(f"undeclared name {name!r}", tok)

    def _parse_tbox_block(self, acc):
        # first pass: collect declarations, remember assertion token spans
        self.expect("{")
        spans = []
        while not self.accept("}"):
            if self.peek().text == "concept":
                self.next()
                acc_add = self.ident("concept name")
                self.concepts.add(acc_add)
                while self.accept(","):
                    self.concepts.add(self.ident("concept name"))
                self.expect(";")
            elif self.peek().text == "role":
                self.next()
                self.roles.add(self.ident("role name"))
                while self.accept(","):
                    self.roles.add(self.ident("role name"))
                self.expect(";")
            else:
                start = self.pos
                while self.peek().text != ";":
                    if self.peek().kind == "eof":
                        self.fail("unterminated tbox assertion")
                    self.next()
                self.expect(";")
                spans.append((start, self.pos - 1))
        acc.extend(spans)

    def _parse_tbox_assertion(self, acc):
        if self.accept("funct"):
            name = self.ident("role name")
            inv = self.accept("-")
            if name not in self.roles:
                self.fail(f"undeclared role name {name!r}")
            acc["functs"].add(kb.Role(name, inv))
            return
        kind1, lhs = self._concept_or_role_expr()
        self.expect("<=")
        neg = self.accept("not")
        kind2, rhs = self._concept_or_role_expr()
        if kind1 != kind2:
            self.fail(f"inclusion mixes a {kind1} with a {kind2}")
        key = ("neg_" if neg else "pos_") + ("c" if kind1 == "concept" else "r")
        acc[key].add((lhs, rhs))

    def _parse_abox_block(self, facts):
        self.expect("{")
        while not self.accept("}"):
            pred = self.ident("predicate")
            self.expect("(")
            args = [self.ident("constant")]
            while self.accept(","):
                args.append(self.ident("constant"))
            self.expect(")")
            self.expect(";")
            for c in args:
                if c not in self.constants:
                    self.fail(f"undeclared constant {c!r}")
            if len(args) == 1:
                self._check_pred(pred, 1)
                facts.add(kb.ConceptFact(pred, args[0]))
            elif len(args) == 2:
                self._check_pred(pred, 2)
                facts.add(kb.RoleFact(pred, args[0], args[1]))
            else:
                self.fail("facts have one or two arguments")

    def _head_term(self):
        name = self.ident("term")
        if self.peek().text == "(":
            self.next()
            args = []
            if self.peek().text != ")":
                args.append(self._svc_arg())
                while self.accept(","):
                    args.append(self._svc_arg())
            self.expect(")")
            return SvcTerm(name, tuple(args))
        if name in self.constants:
            return name
        return Var(name)

    def _svc_arg(self):
        tok = self.peek()
        name = self.ident("service argument")
        if self.peek().text == "(":
            self.fail("nested service calls are not allowed", tok)
        if name in self.constants:
            return name
        return Var(name)

    def _head_atom(self):
        pred = self.ident("predicate")
        self.expect("(")
        t1 = self._head_term()
        if self.accept(","):
            t2 = self._head_term()
            self.expect(")")
            self._check_pred(pred, 2)
            return RAtom(pred, t1, t2)
        self.expect(")")
        self._check_pred(pred, 1)
        return CAtom(pred, t1)

    def _parse_action_block(self):
        name = self.ident("action name")
        self.expect("(")
        params = []
        if self.peek().text != ")":
            params.append(self.ident("parameter"))
            while self.accept(","):
                params.append(self.ident("parameter"))
        self.expect(")")
        self.expect("{")
        effects = []
        while not self.accept("}"):
            self.expect("effect")
            guard = self.parse_ecq()
            self.expect("->")
            adds, dels = [], []
            while True:
                if self.accept("add"):
                    self.expect("{")
                    while not self.accept("}"):
                        adds.append(self._head_atom())
                        if self.peek().text != "}":
                            self.expect(",")
                elif self.accept("del"):
                    self.expect("{")
                    while not self.accept("}"):
                        dels.append(self._head_atom())
                        if self.peek().text != "}":
                            self.expect(",")
                else:
                    self.fail("expected 'add' or 'del'")
                if not self.accept(","):
                    break
            self.expect(";")
            effects.append(Effect(guard, tuple(adds), tuple(dels)))
        return Action(name, tuple(params), tuple(effects))

    def _parse_process_block(self, rules):
        self.expect("{")
        while not self.accept("}"):
            guard = self.parse_ecq()
            self.expect("=>")
            name = self.ident("action name")
            self.expect("(")
            args = []
            if self.peek().text != ")":
                args.append(self.ident("argument"))
                while self.accept(","):
                    args.append(self.ident("argument"))
            self.expect(")")
            self.expect(";")
            rules.append(ProcessRule(guard, name, tuple(args)))

    def _parse_service_block(self, state):
        if self.peek().text == "enumerate":
            self.next()
            self.expect("{")
            values = [self.ident("value")]
            while self.accept(","):
                values.append(self.ident("value"))
            self.expect("}")
            if state["oracle_table"] or state["oracle_defaults"]:
                self.fail("cannot mix enumerate and oracle service blocks")
            if state["enum_values"] is not None:
                self.fail("duplicate enumerate service block")
            state["enum_values"] = tuple(values)
            for v in values:
                self.constants.add(v)
            return
        fname = self.ident("service function")
        if state["enum_values"] is not None:
            self.fail("cannot mix enumerate and oracle service blocks")
        self.expect("{")
        while not self.accept("}"):
            if self.accept("default"):
                self.expect("=")
                v = self.ident("value")
                self.expect(";")
                state["oracle_defaults"][fname] = v
                self.constants.add(v)
                continue
            f2 = self.ident("service function")
            if f2 != fname:
                self.fail(f"entry for {f2!r} inside service block of {fname!r}")
            self.expect("(")
            args = []
            if self.peek().text != ")":
                args.append(self.ident("constant"))
                while self.accept(","):
                    args.append(self.ident("constant"))
            self.expect(")")
            self.expect("=")
            v = self.ident("value")
            self.expect(";")
            for c in args:
                if c not in self.constants:
                    self.fail(f"undeclared constant {c!r}")
            state["oracle_table"][(fname, *args)] = v
            self.constants.add(v)


def parse_instance(text: str, allow_reserved: bool = False) -> Instance:
    """Parse and validate a whole instance file."""
    toks = _tokenize(text)
    p = _Parser(toks, allow_reserved=allow_reserved)

    # block scan: record block positions, process constants and tbox first
    tbox_acc = {"pos_c": set(), "pos_r": set(), "neg_c": set(), "neg_r": set(),
                "functs": set()}
    tbox_spans = []
    other = []  # (kind, token position)
    while p.peek().kind != "eof":
        tok = p.next()
        if tok.kind != "ident":
            p.fail(f"expected a block keyword, found {tok.text!r}", tok)
        if tok.text == "constants":
            p._parse_constants_block()
        elif tok.text == "tbox":
            p._parse_tbox_block(tbox_spans)
        elif tok.text in ("abox", "action", "process", "program", "formula",
                          "service"):
            other.append((tok.text, p.pos))
            _skip_block(p, tok.text)
        else:
            p.fail(f"unknown block {tok.text!r}", tok)
    end_pos = p.pos

    # second pass: tbox assertions (declarations are known now)
    for start, stop in tbox_spans:
        p.pos = start
        p._parse_tbox_assertion(tbox_acc)
        if p.pos != stop:
            p.fail("trailing tokens in tbox assertion")

    tbox = kb.TBox(p.concepts, p.roles, tbox_acc["pos_c"], tbox_acc["pos_r"],
                   tbox_acc["neg_c"], tbox_acc["neg_r"], tbox_acc["functs"])

    facts = set()
    actions = []
    rules = []
    program = None
    formulas = {}
    svc_state = {"enum_values": None, "oracle_table": {}, "oracle_defaults": {}}
    for kind, pos in other:
        p.pos = pos
        if kind == "abox":
            p._parse_abox_block(facts)
        elif kind == "action":
            actions.append(p._parse_action_block())
        elif kind == "process":
            p._parse_process_block(rules)
        elif kind == "program":
            if program is not None:
                p.fail("duplicate program block")
            program = p.parse_program()
            p.accept(";")
        elif kind == "formula":
            name = p.ident("formula name")
            p.expect(":")
            formulas[name] = p.parse_formula()
            p.expect(";")
        elif kind == "service":
            p._parse_service_block(svc_state)
    p.pos = end_pos

    if svc_state["enum_values"] is not None:
        service = ServiceConfig("enumerate", svc_state["enum_values"])
    elif svc_state["oracle_table"] or svc_state["oracle_defaults"]:
        service = ServiceConfig("oracle", (),
                                tuple(sorted(svc_state["oracle_table"].items())),
                                tuple(sorted(svc_state["oracle_defaults"].items())))
    else:
        service = ServiceConfig("enumerate", ())

    inst = Instance(tbox, frozenset(p.constants), frozenset(p.distinguished),
                    frozenset(facts), tuple(actions), tuple(rules),
                    assign_pids(program) if program is not None else None,
                    formulas, service)
    _validate_instance(inst, allow_reserved)
    return inst


def _skip_block(p: _Parser, kind: str):
    """Skip over a block after its keyword (tokens already validated later)."""
    if kind == "program":
        p.parse_program()
        p.accept(";")
        return
    if kind == "formula":
        p.ident("formula name")
        p.expect(":")
        p.parse_formula()
        p.expect(";")
        return
    if kind == "action":
        p.ident("action name")
        p.expect("(")
        depth = 1
        while depth and p.peek().kind != "eof":
            t = p.next()
            if t.text in ("(", "{"):
                depth += 1
            elif t.text in (")", "}"):
                depth -= 1
        p.expect("{")
        depth = 1
        while depth and p.peek().kind != "eof":
            t = p.next()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
        return
    if kind == "service":
        p.ident("service name or enumerate")
        p.expect("{")
        depth = 1
        while depth and p.peek().kind != "eof":
            t = p.next()
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
        return
    # abox / process: plain braced blocks
    p.expect("{")
    depth = 1
    while depth and p.peek().kind != "eof":
        t = p.next()
        if t.text == "{":
            depth += 1
        elif t.text == "}":
            depth -= 1


def parse_instance_file(path: str, allow_reserved: bool = False) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read(), allow_reserved=allow_reserved)


# -- validation ----------------------------------------------------------------

def _head_vars(atom):
    out = []
    for t in atom.terms:
        if isinstance(t, Var):
            out.append(t.name)
        elif isinstance(t, SvcTerm):
            out.extend(x.name for x in t.args if isinstance(x, Var))
    return out


def _head_consts(atom):
    out = []
    for t in atom.terms:
        if isinstance(t, str):
            out.append(t)
        elif isinstance(t, SvcTerm):
            out.extend(x for x in t.args if isinstance(x, str))
    return out


def _ecq_consts(q):
    if isinstance(q, Embedded):
        return {t for c in q.u.cqs for a in c.atoms for t in a.terms
                if isinstance(t, str)}
    if isinstance(q, NotQ):
        return _ecq_consts(q.q)
    if isinstance(q, AndQ):
        return _ecq_consts(q.a) | _ecq_consts(q.b)
    if isinstance(q, ExistsQ):
        return _ecq_consts(q.q)
    return set()


def _formula_consts(f):
    if isinstance(f, mucalc.QueryF):
        return _ecq_consts(f.q)
    if isinstance(f, (mucalc.NotF, mucalc.DiamondF, mucalc.BoxF)):
        return _formula_consts(f.f)
    if isinstance(f, (mucalc.AndF, mucalc.OrF)):
        return _formula_consts(f.a) | _formula_consts(f.b)
    if isinstance(f, (mucalc.ExistsF, mucalc.ForallF)):
        return _formula_consts(f.f)
    if isinstance(f, (mucalc.MuF, mucalc.NuF)):
        return _formula_consts(f.body)
    return set()


def _validate_instance(inst: Instance, allow_reserved: bool):
    t = inst.tbox
    kb.saturate_negatives(t)
    marker_consts = {kb.REP_CONST, kb.TEMP_CONST}

    def check_const_distinguished(c, ctx):
        if c in inst.distinguished or (allow_reserved and c in inst.constants):
            return
        raise ValidationError(f"{ctx}: constant {c!r} must be distinguished")

    for f in inst.abox0:
        if kb.is_marker(f):
            if not allow_reserved:
                raise ValidationError(f"marker fact {f} in user ABox")
            continue
        for c in f.args:
            check_const_distinguished(c, "abox")

    names = set()
    for a in inst.actions:
        if a.name in names:
            raise ValidationError(f"duplicate action name {a.name!r}")
        names.add(a.name)
        if a.name.startswith(kb.RESERVED_PREFIX) and not allow_reserved:
            raise ValidationError(f"reserved action name {a.name!r}")
        for eff in a.effects:
            validate_domain_independent(eff.guard, assume_bound=frozenset(a.params))
            allowed = set(a.params) | {v for v in free_vars(eff.guard)}
            for atom in tuple(eff.add) + tuple(eff.dele):
                for v in _head_vars(atom):
                    if v not in allowed:
                        raise ValidationError(
                            f"action {a.name}: head variable {v!r} is neither a "
                            f"parameter nor free in the effect guard")
                for c in _head_consts(atom):
                    if c not in marker_consts:
                        check_const_distinguished(c, f"action {a.name}")
            for atom in eff.dele:
                for term in atom.terms:
                    if isinstance(term, SvcTerm):
                        raise ValidationError(
                            f"action {a.name}: service term in deletion head")

    for r in inst.process:
        if r.action not in names:
            raise ValidationError(f"process rule invokes unknown action {r.action!r}")
        action = next(a for a in inst.actions if a.name == r.action)
        if len(r.args) != len(action.params):
            raise ValidationError(f"process rule arity mismatch for {r.action!r}")
        if set(r.args) != set(free_vars(r.guard)):
            raise ValidationError(
                f"process rule for {r.action!r}: free variables of the condition "
                f"must be exactly its arguments")
        validate_domain_independent(r.guard)
        for c in _ecq_consts(r.guard):
            check_const_distinguished(c, "process rule")

    if inst.program is not None:
        for node in subprograms(inst.program):
            if isinstance(node, Invoke):
                if node.action not in names:
                    raise ValidationError(f"program invokes unknown action {node.action!r}")
                action = next(a for a in inst.actions if a.name == node.action)
                if len(node.params) != len(action.params):
                    raise ValidationError(f"program invocation arity mismatch "
                                          f"for {node.action!r}")
                if set(node.params) != set(free_vars(node.guard)):
                    raise ValidationError(
                        f"invocation of {node.action!r}: free variables of the "
                        f"guard must be exactly its parameters")
                validate_domain_independent(node.guard)
            if isinstance(node, (If, While)):
                cond = node.cond
                if free_vars(cond):
                    raise ValidationError("if/while conditions must be boolean")
                validate_domain_independent(cond)

    for name, f in inst.formulas.items():
        if mucalc.free_ind_vars(f):
            raise ValidationError(f"formula {name!r} has free individual variables")
        if mucalc.free_pred_vars(f):
            raise ValidationError(f"formula {name!r} has free predicate variables")
        mucalc.validate_monotone(f)
        if not allow_reserved and mucalc.formula_uses_markers(f):
            raise ValidationError(f"formula {name!r} mentions marker predicates")
        for c in _formula_consts(f):
            if c not in marker_consts:
                check_const_distinguished(c, f"formula {name!r}")


# -- serialization --------------------------------------------------------------

def _concept_str(b) -> str:
    return str(b)


def _atom_str(atom) -> str:
    return str(atom).replace(" ", "")


def serialize_instance(inst: Instance) -> str:
    out = []
    plain = sorted(inst.constants - inst.distinguished)
    out.append("constants {")
    if plain:
        out.append(f"  {', '.join(plain)};")
    if inst.distinguished:
        out.append(f"  distinguished {', '.join(sorted(inst.distinguished))};")
    out.append("}")
    t = inst.tbox
    out.append("tbox {")
    if t.concepts:
        out.append(f"  concept {', '.join(sorted(t.concepts))};")
    if t.roles:
        out.append(f"  role {', '.join(sorted(t.roles))};")
    for r in sorted(t.functs):
        out.append(f"  funct {r};")
    for b1, b2 in sorted(t.pos_c, key=lambda p: (str(p[0]), str(p[1]))):
        out.append(f"  {b1} <= {b2};")
    for r1, r2 in sorted(t.pos_r, key=lambda p: (str(p[0]), str(p[1]))):
        out.append(f"  {r1} <= {r2};")
    for b1, b2 in sorted(t.neg_c, key=lambda p: (str(p[0]), str(p[1]))):
        out.append(f"  {b1} <= not {b2};")
    for r1, r2 in sorted(t.neg_r, key=lambda p: (str(p[0]), str(p[1]))):
        out.append(f"  {r1} <= not {r2};")
    out.append("}")
    if inst.service.mode == "enumerate" and inst.service.values:
        out.append(f"service enumerate {{ {', '.join(sorted(inst.service.values))} }}")
    elif inst.service.mode == "oracle":
        by_f = {}
        for call, v in inst.service.table:
            by_f.setdefault(call[0], []).append((call, v))
        for f, d in inst.service.defaults:
            by_f.setdefault(f, [])
        for fname in sorted(by_f):
            out.append(f"service {fname} {{")
            for call, v in sorted(by_f[fname]):
                out.append(f"  {fname}({','.join(call[1:])}) = {v};")
            for f, d in inst.service.defaults:
                if f == fname:
                    out.append(f"  default = {d};")
            out.append("}")
    out.append("abox {")
    for f in sorted(inst.abox0, key=lambda f: f.sort_key()):
        out.append(f"  {f};")
    out.append("}")
    for a in inst.actions:
        out.append(f"action {a.name}({', '.join(a.params)}) {{")
        for eff in a.effects:
            parts = []
            if eff.add:
                parts.append("add { " + ", ".join(_atom_str(x) for x in eff.add) + " }")
            if eff.dele:
                parts.append("del { " + ", ".join(_atom_str(x) for x in eff.dele) + " }")
            if not parts:
                parts.append("add { }")
            out.append(f"  effect {eff.guard} -> {', '.join(parts)};")
        out.append("}")
    if inst.process:
        out.append("process {")
        for r in inst.process:
            out.append(f"  {r.guard} => {r.action}({', '.join(r.args)});")
        out.append("}")
    if inst.program is not None:
        out.append(f"program {inst.program};")
    for name, f in sorted(inst.formulas.items()):
        out.append(f"formula {name}: {f};")
    return "\n".join(out) + "\n"


def instance_from_kab(k: KAB, service=ServiceConfig(), formulas=None) -> Instance:
    return Instance(k.tbox, k.constants, k.distinguished, k.abox0, k.actions,
                    k.process, None, dict(formulas or {}), service)


def instance_from_gkab(g: GKAB, service=ServiceConfig(), formulas=None) -> Instance:
    return Instance(g.tbox, g.constants, g.distinguished, g.abox0, g.actions,
                    (), g.program, dict(formulas or {}), service)
