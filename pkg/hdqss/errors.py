"""Exception hierarchy for the HDQSS simulator"""

from typing import Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from .models import SessionResult


class HdqssError(Exception):
    """Base class for every protocol-level failure"""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidLength(HdqssError, ValueError):
    pass


class LengthMismatch(HdqssError, ValueError):
    pass


class InvalidChannelModel(HdqssError, ValueError):
    pass


class DuplicateAgent(HdqssError):
    pass


class UnknownAgent(HdqssError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownBoss(UnknownAgent):
    pass


class CannotRevokeRoot(HdqssError):
    pass


class LevelMismatch(HdqssError):
    pass


class NotAChild(HdqssError):
    pass


class NotPrimary(HdqssError):
    pass


class EmptyTree(HdqssError):
    pass


class AlreadyLocked(HdqssError):
    pass


class AlreadyDisclosed(HdqssError):
    pass


class PermutationWithheld(HdqssError):
    """Raised when agent-side code reads a permutation before disclosure"""


class MissingParticipant(HdqssError):
    def __init__(self, who: str):
        super().__init__(f"required agent {who!r} did not participate")
        self.who = who


class SessionAborted(HdqssError):
    """A sub-protocol run aborted; the tree was left unchanged"""

    def __init__(self, result: 'SessionResult'):
        reason = result.abort_reason or 'unknown'
        super().__init__(f"sub-protocol aborted: {reason} (qber={result.qber:.4f})")
        self.result = result

    @property
    def reason(self) -> Optional[str]:
        return self.result.abort_reason


class InvalidPartyCount(HdqssError, ValueError):
    pass


class NoSessions(HdqssError, ValueError):
    pass


class BoundsExceeded(HdqssError, ValueError):
    pass


class ParseError(HdqssError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ConfigError(HdqssError, ValueError):
    pass


class NotLocked(HdqssError):
    pass


class NothingToRecover(HdqssError):
    """A message recovery was requested before a broadcast and a key recovery"""
