"""System actions and their canonical string forms.

An action is one dialogue act, optionally parameterized by a slot and a
value. A frame is the ordered set of actions a policy emits for one system
turn. Canonical forms are the flat `act ( slot = value )` strings used by
the naive and slot-description encodings; values stay verbatim so they can
be checked for by substring later.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .errors import MissingDescription, ParseError

if TYPE_CHECKING:
    from .catalog import ServiceSchema

# Characters reserved by the canonical serialization. Fields containing any
# of these cannot round-trip, so loaders reject them.
DELIMITER_CHARS = "()="


def check_field(value: str, what: str) -> None:
    """Reject field content that would collide with canonical delimiters."""
    for ch in DELIMITER_CHARS:
        if ch in value:
            raise ParseError(f"{what} contains reserved character {ch!r}: {value!r}")


@dataclass(frozen=True)
class Action:
    """One dialogue act with optional slot and verbatim value."""

    act: str
    slot: str | None = None
    value: str | None = None

    def __post_init__(self) -> None:
        if not self.act:
            raise ValueError("act must be non-empty")
        if self.value is not None and self.slot is None:
            raise ValueError(f"action {self.act!r} has a value but no slot")


@dataclass(frozen=True)
class ActionFrame:
    """The ordered actions emitted for one system turn of one service."""

    service: str
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValueError(f"frame for {self.service!r} has no actions")
        object.__setattr__(self, "actions", tuple(self.actions))


def decompose(act: str, slot: str | None, values: Sequence[str]) -> list[Action]:
    """Expand one raw (act, slot, values) record into single-value actions.

    Zero values yield one action carrying the slot alone (or nothing when
    the raw record has no slot); n values yield n actions in source order,
    each with one value.
    """
    if values and slot is None:
        raise ValueError(f"act {act!r} carries values without a slot")
    if not values:
        return [Action(act=act, slot=slot)]
    return [Action(act=act, slot=slot, value=v) for v in values]


def canonical_naive(a: Action) -> str:
    """Render `act`, `act ( slot )` or `act ( slot = value )`."""
    if a.slot is None:
        return a.act
    if a.value is None:
        return f"{a.act} ( {a.slot} )"
    return f"{a.act} ( {a.slot} = {a.value} )"


def canonical_slotdesc(a: Action, schema: ServiceSchema) -> str:
    """Like :func:`canonical_naive` with the slot name replaced by its
    natural-language description from the service schema."""
    if a.slot is None:
        return a.act
    spec = schema.slot(a.slot)
    if spec is None or not spec.description:
        raise MissingDescription(schema.service_name, a.slot)
    if a.value is None:
        return f"{a.act} ( {spec.description} )"
    return f"{a.act} ( {spec.description} = {a.value} )"


def parse_canonical(s: str) -> Action:
    """Invert :func:`canonical_naive` (fields must be delimiter-free)."""
    s = s.strip()
    if " ( " not in s:
        if any(ch in s for ch in DELIMITER_CHARS):
            raise ParseError(f"malformed canonical action: {s!r}")
        return Action(act=s)
    act, _, rest = s.partition(" ( ")
    if not rest.endswith(" )"):
        raise ParseError(f"malformed canonical action: {s!r}")
    inner = rest[: -len(" )")]
    if " = " in inner:
        slot, _, value = inner.partition(" = ")
        return Action(act=act, slot=slot, value=value)
    return Action(act=act, slot=inner)
