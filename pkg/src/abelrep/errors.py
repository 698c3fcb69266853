"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each failure class that a user can
trigger from the command line gets its own type.
"""

from __future__ import annotations


class AbelrepError(Exception):
    """Base class for all library errors."""


class InvalidInputError(AbelrepError, ValueError):
    """Malformed input: bad dimensions, bad group orders, bad JSON."""


class InvalidGroupError(InvalidInputError):
    """A cyclic order of 0 or 1 (or a non-integer) was supplied."""


class GroupMismatchError(InvalidInputError):
    """Arithmetic between elements of different groups."""


class PreconditionError(AbelrepError):
    """An operation's mathematical precondition does not hold."""


class DegenerateSystemError(PreconditionError):
    """A zero gcd / singular block reached a step that cannot repair it."""


class CapExceededError(AbelrepError):
    """An enumeration would exceed the configured cap."""


DEFAULT_CAP = 10**6
