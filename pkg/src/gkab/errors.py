"""Exception hierarchy shared across the toolkit."""


class GkabError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(GkabError):
    """A model-level constraint is violated (vocabulary, arity, reserved names...)."""


class ParseError(GkabError):
    """Syntax error in an instance file, with position information."""

    def __init__(self, line, col, msg):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


class SaturationDerivedUnsat(GkabError):
    """The negative-inclusion closure makes a declared name unsatisfiable."""


class RewriteBlowup(GkabError):
    """Query rewriting exceeded the configured disjunct cap."""


class NonDomainIndependent(ValidationError):
    """An ECQ uses a variable outside any positive embedded atom."""


class UnsafeQuery(GkabError):
    """A query could not be evaluated safely (unbound equality)."""


class CombinatorialLimit(GkabError):
    """Too many repairs (or conflicting facts) to enumerate."""


class PreconditionViolated(GkabError):
    """An operation was invoked outside its stated precondition."""


class UngroundedDeletion(GkabError):
    """An action effect would delete a non-ground atom."""


class OracleIncomplete(GkabError):
    """Oracle-mode service config has no value and no default for a call."""


class StateLimitExceeded(GkabError):
    """Transition-system construction hit the max-states limit."""


class RunBoundExceeded(GkabError):
    """The optional run-adom monitor tripped during construction."""


class FormulaNotNNF(GkabError):
    """A formula translation requiring NNF input received a non-NNF formula."""


class NonMonotoneFixpoint(ValidationError):
    """A fixpoint binder's body is not syntactically monotone in its variable."""


class VocabularyCollision(ValidationError):
    """A declared name collides with the duplicated-vocabulary suffix scheme."""


class EmptyProcess(GkabError):
    """A KAB with an empty process cannot be turned into a while-loop program."""
