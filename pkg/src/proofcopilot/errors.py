"""Exception hierarchy shared across the package.

Every error raised by this package derives from CopilotError so callers can
catch one type at an API boundary. Kernel-level tactic failures carry a
stable machine-readable kind; everything else is distinguished by class.
"""

from __future__ import annotations

from enum import Enum


class CopilotError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CopilotError):
    """Syntax error in a formula, tactic script or theorem file.

    line and column are 1-based positions of the offending token; expected
    lists the token descriptions that would have been accepted there.
    """

    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = expected
        where = f"line {line}, column {column}"
        if expected:
            message = f"{message} (expected {' or '.join(expected)})"
        super().__init__(f"{where}: {message}")
        self.reason = message


class TacticErrorKind(Enum):
    TARGET_SHAPE = "target_shape"
    HYP_SHAPE = "hyp_shape"
    UNKNOWN_REF = "unknown_ref"
    DUPLICATE_NAME = "duplicate_name"
    NO_MATCH = "no_match"
    NO_CONTRADICTION = "no_contradiction"


class TacticError(CopilotError):
    """A tactic failed to apply; the proof state is unchanged.

    kind is one of the stable TacticErrorKind values so tools (and the wire
    protocol) can dispatch on it without string matching.
    """

    def __init__(self, kind: TacticErrorKind, message: str):
        self.kind = kind
        super().__init__(message)


class NoGoalsError(CopilotError):
    """A tactic or suggestion request was made against an empty goal list."""


class InvalidPrefixError(CopilotError):
    """A ground-truth script prefix failed to replay."""

    def __init__(self, step_index: int, cause: Exception | None):
        self.step_index = step_index
        self.cause = cause
        super().__init__(f"step {step_index} failed during replay: {cause}")


class InvalidParamError(CopilotError):
    """Generation parameters outside their documented domain."""


class EmptyInputError(CopilotError):
    """An operation that needs non-empty input (text, records) got none."""


class ExternalUnavailableError(CopilotError):
    """An external model server could not be reached (after retries)."""


class ProtocolError(CopilotError):
    """An external model server replied outside the wire contract."""


class FormatError(CopilotError):
    """A binary array stream is not well-formed."""


class ShapeError(CopilotError):
    """A binary array stream declares a shape its payload does not match."""


class DimensionMismatchError(CopilotError):
    """Query vector and embedding matrix disagree on dimension."""


class DuplicateNameError(CopilotError):
    """Two corpus declarations (or premise records) share a name."""


class UnknownTheoremError(CopilotError):
    """A theorem name was not found in the loaded corpus."""


class SearchFailedError(CopilotError):
    """Proof search gave up on a repair site without finding a proof."""


class VerificationFailedError(CopilotError):
    """A candidate repair failed the verification gate and was discarded."""


class UnverifiedPatchError(CopilotError):
    """A diff or payload was requested over patches that never verified."""


class NoPatchesError(CopilotError):
    """A pull-request payload was requested with no verified patches."""


class HostError(CopilotError):
    """A git-host submission failed (auth, transport or server side)."""

    def __init__(self, status: str, message: str):
        self.status = status
        super().__init__(f"{status}: {message}")


class UnknownSessionError(CopilotError):
    """A service request referenced a session id that does not exist."""


class BusyError(CopilotError):
    """The session is already running a search."""
