"""Loading of service schemas and raw dialogues.

The on-disk layout follows the schema-guided dialogue interchange format:
a corpus directory holds one subdirectory per partition (train/dev/test),
each containing a `schema.json` (list of service definitions) and any
number of `dialogues_*.json` files (lists of dialogue records).

Acts are lowercased on load. Utterance whitespace runs are collapsed so
downstream line-oriented files stay one-record-per-line. Slot names and
values must be free of the canonical delimiter characters and of literal
tabs/newlines; violating records are rejected rather than repaired.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .actions import Action, ActionFrame, DELIMITER_CHARS, decompose
from .errors import DuplicateService, ParseError, UnknownService, UnknownSlot

USER = "USER"
SYSTEM = "SYSTEM"

_TRAILING_INDEX_RE = re.compile(r"_\d+$")


def domain_of_service(service_name: str) -> str:
    """Default domain: the service name with its `_<n>` suffix stripped."""
    return _TRAILING_INDEX_RE.sub("", service_name)


@dataclass(frozen=True)
class SlotSpec:
    name: str
    description: str
    is_boolean: bool = False


@dataclass(frozen=True)
class ServiceSchema:
    service_name: str
    domain: str
    slots: tuple[SlotSpec, ...]

    def slot(self, name: str) -> SlotSpec | None:
        return self._by_name.get(name)

    @property
    def _by_name(self) -> dict[str, SlotSpec]:
        by_name = self.__dict__.get("_slot_index")
        if by_name is None:
            by_name = {s.name: s for s in self.slots}
            object.__setattr__(self, "_slot_index", by_name)
        return by_name


@dataclass
class Catalog:
    services: dict[str, ServiceSchema] = field(default_factory=dict)

    def add(self, schema: ServiceSchema) -> None:
        if schema.service_name in self.services:
            raise DuplicateService(schema.service_name)
        self.services[schema.service_name] = schema

    def __getitem__(self, service_name: str) -> ServiceSchema:
        try:
            return self.services[service_name]
        except KeyError:
            raise UnknownService(service_name) from None

    def __contains__(self, service_name: str) -> bool:
        return service_name in self.services

    def __iter__(self) -> Iterator[ServiceSchema]:
        return iter(self.services.values())

    def __len__(self) -> int:
        return len(self.services)

    def domains(self) -> set[str]:
        return {s.domain for s in self}


@dataclass(frozen=True)
class Turn:
    speaker: str
    utterance: str
    frames: tuple[ActionFrame, ...] = ()

    @property
    def is_system(self) -> bool:
        return self.speaker == SYSTEM


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    services: tuple[str, ...]
    turns: tuple[Turn, ...]

    def system_turns(self) -> Iterator[tuple[int, Turn]]:
        for i, turn in enumerate(self.turns):
            if turn.is_system:
                yield i, turn


def _is_boolean_values(possible_values: Sequence[str] | None) -> bool:
    if not possible_values:
        return False
    return {str(v).lower() for v in possible_values} == {"true", "false"}


def _parse_service(obj: Mapping, *, path: str) -> ServiceSchema:
    try:
        name = obj["service_name"]
    except KeyError:
        raise ParseError("service record lacks service_name", path=path) from None
    if not isinstance(name, str) or not name:
        raise ParseError(f"bad service_name: {name!r}", path=path)
    slots = []
    seen_names = set()
    for slot_obj in obj.get("slots", []):
        slot_name = slot_obj.get("name")
        if not slot_name:
            raise ParseError(f"service {name!r}: slot lacks a name", path=path)
        if slot_name in seen_names:
            raise ParseError(f"service {name!r}: duplicate slot {slot_name!r}", path=path)
        seen_names.add(slot_name)
        slots.append(
            SlotSpec(
                name=slot_name,
                description=slot_obj.get("description", ""),
                is_boolean=_is_boolean_values(slot_obj.get("possible_values")),
            )
        )
    domain = obj.get("domain") or domain_of_service(name)
    return ServiceSchema(service_name=name, domain=domain, slots=tuple(slots))


def load_schemas(path: str | Path) -> Catalog:
    """Load every schema file (`schema*.json`) under a directory."""
    catalog = Catalog()
    path = Path(path)
    for file in sorted(path.glob("schema*.json")):
        try:
            records = json.loads(file.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", path=str(file), line=e.lineno) from e
        if not isinstance(records, list):
            raise ParseError("schema file must hold a list of services", path=str(file))
        for obj in records:
            catalog.add(_parse_service(obj, path=str(file)))
    return catalog


def _clean_utterance(text: str) -> str:
    return " ".join(str(text).split())


def _check_action_field(value: str, what: str, *, where: str) -> None:
    for ch in DELIMITER_CHARS:
        if ch in value:
            raise ParseError(f"{where}: {what} contains reserved {ch!r}: {value!r}")
    if "\t" in value or "\n" in value:
        raise ParseError(f"{where}: {what} contains tab/newline: {value!r}")
    if what == "value" and "$x" in value:
        raise ParseError(f"{where}: value contains placeholder token: {value!r}")


def _parse_system_frame(
    frame_obj: Mapping, catalog: Catalog, *, where: str, services: Sequence[str]
) -> ActionFrame:
    service = frame_obj.get("service")
    if not service:
        raise ParseError(f"{where}: system frame lacks a service")
    if service not in catalog:
        raise UnknownService(service)
    if service not in services:
        raise ParseError(f"{where}: frame service {service!r} not in dialogue services")
    schema = catalog[service]
    actions: list[Action] = []
    for raw in frame_obj.get("actions", []):
        act = str(raw.get("act", "")).lower()
        if not act:
            raise ParseError(f"{where}: action lacks an act")
        slot = raw.get("slot") or None
        values = [str(v) for v in raw.get("values", [])]
        if slot is not None:
            _check_action_field(slot, "slot", where=where)
            if schema.slot(slot) is None:
                raise UnknownSlot(service, slot)
        for v in values:
            _check_action_field(v, "value", where=where)
        actions.extend(decompose(act, slot, values))
    if not actions:
        raise ParseError(f"{where}: system turn has no actions")
    return ActionFrame(service=service, actions=tuple(actions))


def _parse_dialogue(obj: Mapping, catalog: Catalog, *, path: str) -> Dialogue:
    dialogue_id = obj.get("dialogue_id")
    if not dialogue_id:
        raise ParseError("dialogue lacks dialogue_id", path=path)
    services = tuple(obj.get("services", ()))
    if not services:
        raise ParseError(f"dialogue {dialogue_id}: empty services list", path=path)
    for s in services:
        if s not in catalog:
            raise UnknownService(s)
    turns: list[Turn] = []
    n_system = 0
    for t_idx, turn_obj in enumerate(obj.get("turns", [])):
        where = f"dialogue {dialogue_id} turn {t_idx}"
        speaker = turn_obj.get("speaker")
        if speaker not in (USER, SYSTEM):
            raise ParseError(f"{where}: bad speaker {speaker!r}", path=path)
        if turns and turns[-1].speaker == speaker:
            raise ParseError(f"{where}: consecutive {speaker} turns", path=path)
        utterance = _clean_utterance(turn_obj.get("utterance", ""))
        if speaker == USER:
            turns.append(Turn(speaker=USER, utterance=utterance))
            continue
        frames = turn_obj.get("frames", [])
        if len(frames) != 1:
            raise ParseError(
                f"{where}: system turn must carry exactly one frame, got {len(frames)}",
                path=path,
            )
        frame = _parse_system_frame(frames[0], catalog, where=where, services=services)
        turns.append(Turn(speaker=SYSTEM, utterance=utterance, frames=(frame,)))
        n_system += 1
    if not turns:
        raise ParseError(f"dialogue {dialogue_id}: no turns", path=path)
    if n_system == 0:
        raise ParseError(f"dialogue {dialogue_id}: no system actions", path=path)
    return Dialogue(dialogue_id=dialogue_id, services=services, turns=tuple(turns))


def _load_dialogue_file(file: Path, catalog: Catalog) -> list[Dialogue]:
    try:
        records = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=str(file), line=e.lineno) from e
    if not isinstance(records, list):
        raise ParseError("dialogue file must hold a list of dialogues", path=str(file))
    return [_parse_dialogue(obj, catalog, path=str(file)) for obj in records]


def load_dialogues(path: str | Path, catalog: Catalog) -> list[Dialogue]:
    """Load every `dialogues*.json` under a directory; files in parallel,
    results merged in filename order."""
    path = Path(path)
    files = sorted(path.glob("dialogues*.json"))
    if not files:
        return []
    with ThreadPoolExecutor(max_workers=min(8, len(files))) as pool:
        per_file = list(pool.map(lambda f: _load_dialogue_file(f, catalog), files))
    dialogues: list[Dialogue] = []
    seen_ids = set()
    for batch in per_file:
        for d in batch:
            if d.dialogue_id in seen_ids:
                raise ParseError(f"duplicate dialogue_id {d.dialogue_id}", path=str(path))
            seen_ids.add(d.dialogue_id)
            dialogues.append(d)
    return dialogues


@dataclass
class Partition:
    name: str
    catalog: Catalog
    dialogues: list[Dialogue]


PARTITIONS = ("train", "dev", "test")


def load_corpus(corpus_dir: str | Path) -> dict[str, Partition]:
    """Load each partition subdirectory that exists under `corpus_dir`."""
    corpus_dir = Path(corpus_dir)
    partitions: dict[str, Partition] = {}
    for name in PARTITIONS:
        sub = corpus_dir / name
        if not sub.is_dir():
            continue
        catalog = load_schemas(sub)
        dialogues = load_dialogues(sub, catalog)
        partitions[name] = Partition(name=name, catalog=catalog, dialogues=dialogues)
    if not partitions:
        raise ParseError("no train/dev/test subdirectories found", path=str(corpus_dir))
    return partitions
