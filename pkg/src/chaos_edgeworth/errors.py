"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage errors are handled by argparse
(exit 2), :class:`DomainError` and :class:`ContractError` exit 3,
:class:`QualityError` exits 4, and :class:`InvariantError` exits 5.
"""


class ChaosEdgeworthError(Exception):
    """Base class for all package errors."""


class DomainError(ChaosEdgeworthError, ValueError):
    """A parameter lies outside its mathematical domain."""


class RankPreconditionError(DomainError):
    """An operator precondition on the Hermite rank is violated."""


class NonFiniteError(DomainError):
    """A function evaluated to NaN/inf where a finite value is required."""


class ContractError(ChaosEdgeworthError, ValueError):
    """A file or header does not match its declared format contract."""


class QualityError(ChaosEdgeworthError):
    """A statistical quality gate refused to produce an artifact."""


class InvariantError(ChaosEdgeworthError):
    """An internal invariant check failed."""
