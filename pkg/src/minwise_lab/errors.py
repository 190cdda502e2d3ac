"""Exception types shared across minwise_lab modules.

Every error raised on a violated precondition derives from
:class:`MinwiseLabError` so callers (and the CLI) can distinguish contract
violations from programming bugs.
"""

from __future__ import annotations


class MinwiseLabError(Exception):
    """Base class for all library-level errors."""


class NotFullRank(MinwiseLabError):
    """A matrix required to have full row rank does not."""


class BadSeedLength(MinwiseLabError):
    """A seed is negative or wider than the declared seed_bits."""


class DomainOverflow(MinwiseLabError):
    """An evaluation point lies outside the family's domain [1, N]."""


class RangeMismatch(MinwiseLabError):
    """Two families combined by direct_sum have incompatible ranges."""


class WidthError(MinwiseLabError):
    """Extractor output width is not smaller than the source width."""


class TooManyRows(MinwiseLabError):
    """surjectify() was given a matrix with more rows than columns."""


class WidthMismatch(MinwiseLabError):
    """Composition stages disagree on the running source width."""


class DomainMismatch(MinwiseLabError):
    """Two explicit distributions are not over the same finite set."""


class TooLargeForExhaustive(MinwiseLabError):
    """Exhaustive enumeration requested beyond the seed-bit budget."""


class ConditionNeverHolds(MinwiseLabError):
    """Conditioning event has probability zero under the generator."""


class ParamViolation(MinwiseLabError):
    """Construction parameters or plugged components are inconsistent."""


class SeedSpaceTooLarge(MinwiseLabError):
    """Exhaustive measurement requested for a family with > 24 seed bits."""


class EmptyQuery(MinwiseLabError):
    """A min-wise query needs a nonempty Y that is a proper subset of X."""


class RegimeMismatch(MinwiseLabError):
    """|X| contradicts the declared load-lemma regime."""
