"""Verification toolkit for (inconsistency-aware) Golog Knowledge and Action Bases.

The package builds explicit finite transition systems for GKABs under four
execution semantics (standard, b-repair, c-repair, bold evolution), compiles
every inconsistency-aware variant down to standard systems, model-checks
first-order mu-calculus properties over them, and decides the bisimulation
notions that underpin the translation theorems.
"""

from . import bisim, kb, mucalc, queries, repairs, translations
from .actions import (KAB, Action, Effect, ProcessRule, ServiceConfig, SvcTerm,
                      add_del_facts, apply_filter, build_ts_skab, do,
                      eval_thetas, ground_calls, tell)
from .golog import (GKAB, Choice, Empty, If, Invoke, Seq, While, assign_pids,
                    build_ts_gkab, is_final, program_step)
from .kb import (ABox, ConceptFact, ConceptName, Role, RoleFact, SomeRole, TBox,
                 adom, inc_set, is_consistent, saturate_negatives, user_adom)
from .mucalc import extension, model_check
from .parser import (Instance, parse_instance, parse_instance_file,
                     serialize_instance)
from .queries import (ECQ, UCQ, Var, build_qunsat, certain_answers_ucq,
                      eval_ecq, rewrite_ucq)
from .repairs import b_repairs, c_repair, evolve
from .translations import (brepair_actions, brepair_program, crepair_action,
                           evolution_action, nnf, tforb, tford, tforj, tgkab,
                           tgkabb, tgkabc, tgkabe, tgprog, tkabs)
from .ts import Limits, TransitionSystem

__version__ = "0.1.0"
