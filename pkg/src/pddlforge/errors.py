"""Exception taxonomy shared by all pipeline stages.

Exit-code mapping used by the CLI: InputError -> 1, CapacityError -> 2,
anything else -> 3.
"""


class PddlForgeError(Exception):
    """Base class for all toolkit errors."""


class InputError(PddlForgeError):
    """The input task (or plan) is malformed, unsupported, or inconsistent."""


class ParseError(InputError):
    def __init__(self, message, span=None):
        super().__init__(message)
        self.span = span

    def __str__(self):
        base = super().__str__()
        if self.span is not None:
            return f"{self.span}: {base}"
        return base


class ValidityError(InputError):
    """A task violates a structural invariant (arity, free variables, ...)."""


class UnsupportedConstructError(InputError):
    """A construct outside the supported PDDL 2.2 subset."""


class StratificationError(InputError):
    """A derivation-rule set is not stratifiable under the PDDL 2.2 rule."""


class UnsoundCompilationError(InputError):
    """A compilation scheme would be unsound for this task (e.g. negated
    derived predicates with the rules-to-actions scheme)."""


class NameCollisionError(InputError):
    """A generated name collides with a name already present in the task."""


class InapplicableActionError(InputError):
    """An action was applied in a state that does not satisfy its precondition."""


class ContractViolation(PddlForgeError):
    """An operation was called outside its stated precondition."""


class CapacityError(PddlForgeError):
    """A configured resource cap was exceeded; never silently truncated."""


class DnfBudgetError(CapacityError):
    def __init__(self, projected, budget, context=""):
        msg = f"DNF expansion would produce {projected} disjuncts (budget {budget})"
        if context:
            msg += f" in {context}"
        super().__init__(msg)
        self.projected = projected
        self.budget = budget


class GroundCapError(CapacityError):
    pass


class CeCapError(CapacityError):
    def __init__(self, action, count, cap):
        super().__init__(
            f"action {action} has {count} conditional effects; outcome "
            f"enumeration capped at {cap}"
        )
        self.action = action
        self.count = count
        self.cap = cap
