"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class TgnlgError(Exception):
    """Base class for all toolkit errors."""


class DataError(TgnlgError):
    """Base for corpus / template / metric input problems (CLI exit code 2)."""


class ParseError(DataError):
    """A file failed to parse or violated a structural invariant."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class DuplicateService(DataError):
    def __init__(self, service_name: str):
        self.service_name = service_name
        super().__init__(f"service declared more than once: {service_name!r}")


class UnknownService(DataError):
    def __init__(self, service_name: str):
        self.service_name = service_name
        super().__init__(f"service not in catalog: {service_name!r}")


class UnknownSlot(DataError):
    def __init__(self, service_name: str, slot: str):
        self.service_name = service_name
        self.slot = slot
        super().__init__(f"slot {slot!r} not declared by service {service_name!r}")


class MissingDescription(DataError):
    def __init__(self, service_name: str, slot: str):
        self.service_name = service_name
        self.slot = slot
        super().__init__(f"slot {slot!r} of service {service_name!r} has no description")


class MissingTemplate(DataError):
    """No template registered for an (act, slot) key."""

    def __init__(self, service_name: str, act: str, slot: str | None):
        self.service_name = service_name
        self.act = act
        self.slot = slot
        key = act if slot is None else f"{act}({slot})"
        super().__init__(f"no template for {key} in service {service_name!r}")


class PlaceholderMismatch(ParseError):
    """Template text and key disagree about the `$x` placeholder."""


class CoverageInfeasible(DataError):
    """No k-subset of a domain's dialogues covers all of its acts and slots."""

    def __init__(self, domain: str, k: int, uncovered: list[str]):
        self.domain = domain
        self.k = k
        self.uncovered = sorted(uncovered)
        super().__init__(
            f"domain {domain!r}: no {k}-dialogue subset covers "
            f"{', '.join(self.uncovered)}"
        )


class LengthMismatch(DataError):
    def __init__(self, expected: int, got: int, what: str = "predictions"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected} items, got {got}")


class RewriterError(TgnlgError):
    """Base for rewriter failures (CLI exit code 3)."""


class TransportError(RewriterError):
    """Endpoint unreachable or persistently failing after retries."""


class ProtocolError(RewriterError):
    """Endpoint answered, but the body violates the wire protocol."""
