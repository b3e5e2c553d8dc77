"""Exception types shared across the package.

Every error raised on purpose derives from AtdlabError so callers can
catch the package's failures without also swallowing programming bugs.
"""


class AtdlabError(Exception):
    """Base class for all errors this package raises deliberately."""


class PackError(AtdlabError):
    """A rule pack failed to parse or violates a pack invariant."""


class EmptyBodyError(AtdlabError):
    """Classification was asked to judge a body with no visible text."""


class HeadActError(AtdlabError):
    """No request core could be located in any segment of the body."""


class SlotError(AtdlabError):
    """A template required a slot value that was not supplied."""


class ReversalError(AtdlabError):
    """A transform record does not match the text it is applied to."""


class LedgerError(AtdlabError):
    """A thread ledger lookup failed or an entry was registered twice."""


class LedgerInconsistencyError(LedgerError):
    """An incoming quote disagrees with the sender's recorded view."""


class ViewMismatchError(AtdlabError):
    """Two views offered for comparison do not cover the same messages."""


class DanglingQuoteError(AtdlabError):
    """A quoted segment names a source message absent from the view."""


class ScenarioError(AtdlabError):
    """A scenario description is malformed or self-contradictory."""
