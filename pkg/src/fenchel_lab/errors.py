"""Exception and warning types shared across the laboratory.

Every failure mode that callers are expected to handle has a dedicated type;
generic ValueError/TypeError are reserved for malformed arguments.
"""

from __future__ import annotations


class FenchelLabError(Exception):
    """Base class for all laboratory-specific errors."""


class DimensionError(FenchelLabError):
    """A point, direction, or set does not match the expected dimension."""


class ImproperFunctionError(FenchelLabError):
    """An operation requires a proper function (somewhere finite, never -inf)."""


class EnvelopeImproperError(FenchelLabError):
    """The convex envelope is identically -inf (no affine minorant exists)."""


class EmptyDomainError(FenchelLabError):
    """A constraint set or effective domain is empty where a nonempty one is required."""


class DomainError(FenchelLabError):
    """A query point lies outside the effective domain it must belong to."""


class NotEpsSubgradientError(FenchelLabError):
    """The supplied dual vector is not an approximate subgradient at the point."""


class UnboundedError(FenchelLabError):
    """An auxiliary minimization is unbounded below; no witness exists."""


class InvalidOracleError(FenchelLabError):
    """A subgradient oracle returned a vector violating the subgradient inequality."""


class ScopeError(FenchelLabError):
    """The requested check lies outside the hypotheses that make it meaningful."""


class HypothesisError(FenchelLabError):
    """A standing hypothesis of a verifier fails; the message names the clause."""


class InstanceSchemaError(FenchelLabError):
    """An instance file violates the published schema; the message locates the field."""


class SlopeRangeWarning(UserWarning):
    """A dual grid does not cover the slope range of the primal data.

    Emitted (never silently clipped) when a discrete conjugate is requested on
    a dual box smaller than the observed finite-difference slope range.
    """
