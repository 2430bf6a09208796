"""Exception hierarchy with stable error codes.

Every error that can cross the service boundary carries a stable
``error_code`` string; the HTTP layer serializes it as
``{"error_code": ..., "message": ...}`` and the CLI maps it to an exit code.
"""


class ClassrecapError(Exception):
    """Base class; ``error_code`` is a stable machine-readable string."""

    error_code = "internal"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.error_code)

    @property
    def message(self) -> str:
        return str(self)


class DegenerateEyeWidthError(ClassrecapError):
    """Eye width below tolerance; the aspect ratio is undefined."""

    error_code = "degenerate-eye-width"


class TooFewPointsError(ClassrecapError):
    """Series too short for the requested statistic."""

    error_code = "too-few-points"


class NoCoveredMinutesError(ClassrecapError):
    """No minute met the coverage quorum; no threshold can be computed."""

    error_code = "no-covered-minutes"


class InsufficientClassDataError(ClassrecapError):
    """No minute has enough peer coverage for a class comparison."""

    error_code = "insufficient-class-data"


class DuplicateCourseError(ClassrecapError):
    error_code = "duplicate-course"


class UnknownPasscodeError(ClassrecapError):
    error_code = "unknown-passcode"


class UnknownSessionError(ClassrecapError):
    error_code = "unknown-session"


class SessionClosedError(ClassrecapError):
    """Operation requires an open session but it is closed."""

    error_code = "session-closed"


class SessionOpenError(ClassrecapError):
    """Operation requires a closed session but it is still open."""

    error_code = "session-open"


class SessionAlreadyOpenError(ClassrecapError):
    """The course already has an open session."""

    error_code = "session-already-open"


class MalformedBatchError(ClassrecapError):
    error_code = "malformed-batch"


class OutOfRangeError(ClassrecapError):
    error_code = "out-of-range"


class UnknownStudentError(ClassrecapError):
    error_code = "unknown-student"


class UnknownStrategyError(ClassrecapError):
    error_code = "unknown-strategy"


class AuthorizationError(ClassrecapError):
    """Wrong passcode class for the endpoint, or passcode of another course."""

    error_code = "authorization"


# Exit codes for the CLI: 0 success, 2 validation, 3 authorization,
# 4 not-found, 5 internal.
EXIT_VALIDATION = 2
EXIT_AUTHORIZATION = 3
EXIT_NOT_FOUND = 4
EXIT_INTERNAL = 5

_EXIT_CODES = {
    "degenerate-eye-width": EXIT_VALIDATION,
    "too-few-points": EXIT_VALIDATION,
    "no-covered-minutes": EXIT_VALIDATION,
    "insufficient-class-data": EXIT_VALIDATION,
    "duplicate-course": EXIT_VALIDATION,
    "session-closed": EXIT_VALIDATION,
    "session-open": EXIT_VALIDATION,
    "session-already-open": EXIT_VALIDATION,
    "malformed-batch": EXIT_VALIDATION,
    "out-of-range": EXIT_VALIDATION,
    "unknown-strategy": EXIT_VALIDATION,
    "unknown-passcode": EXIT_AUTHORIZATION,
    "authorization": EXIT_AUTHORIZATION,
    "unknown-session": EXIT_NOT_FOUND,
    "unknown-student": EXIT_NOT_FOUND,
    "internal": EXIT_INTERNAL,
}


def exit_code_for(error_code: str) -> int:
    return _EXIT_CODES.get(error_code, EXIT_INTERNAL)
