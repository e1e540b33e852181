"""Model-input encoding for NLG examples.

Three schemes produce the input string for the rewriter: NAIVE joins the
canonical `act ( slot = value )` forms, SLOTDESC substitutes slot names
with their schema descriptions, TEMPLATE renders the frame through the
template registry. Any scheme can be prefixed with the last k dialogue
utterances, each tagged `user:` / `system:` (the final context utterance
is always the user turn preceding the system turn being generated).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .actions import Action, ActionFrame, canonical_naive, canonical_slotdesc
from .catalog import Catalog
from .templates import TemplateRegistry, render_frame


class EncodingMode(enum.Enum):
    NAIVE = "naive"
    SLOTDESC = "slotdesc"
    TEMPLATE = "template"

    @classmethod
    def from_string(cls, s: str) -> EncodingMode:
        return cls(s.strip().lower())


@dataclass(frozen=True)
class NlgExample:
    """One system turn packaged for encoding and evaluation."""

    example_id: str
    frame: ActionFrame
    reference: str
    context: tuple[str, ...]
    service: str
    domain: str
    slot_values: tuple[tuple[str, str, bool], ...]
    seen: bool | None = None

    def to_json_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "service": self.service,
            "domain": self.domain,
            "reference": self.reference,
            "context": list(self.context),
            "actions": [
                {"act": a.act, "slot": a.slot, "value": a.value}
                for a in self.frame.actions
            ],
            "slot_values": [[s, v, b] for s, v, b in self.slot_values],
            "seen": self.seen,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> NlgExample:
        actions = tuple(
            Action(act=a["act"], slot=a.get("slot"), value=a.get("value"))
            for a in obj["actions"]
        )
        return cls(
            example_id=obj["example_id"],
            frame=ActionFrame(service=obj["service"], actions=actions),
            reference=obj["reference"],
            context=tuple(obj["context"]),
            service=obj["service"],
            domain=obj["domain"],
            slot_values=tuple((s, v, bool(b)) for s, v, b in obj["slot_values"]),
            seen=obj.get("seen"),
        )


def write_examples_jsonl(path, examples: Iterable[NlgExample]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


def read_examples_jsonl(path) -> list[NlgExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                examples.append(NlgExample.from_json_dict(json.loads(line)))
    return examples


@dataclass(frozen=True)
class EncoderOptions:
    context_k: int = 0
    include_service_prefix: bool = False
    context_separator: str = " "

    def __post_init__(self) -> None:
        if self.context_k < 0:
            raise ValueError("context_k must be non-negative")

    def with_context_k(self, k: int) -> EncoderOptions:
        return replace(self, context_k=k)


def _tagged_context(context: Sequence[str], k: int) -> list[str]:
    window = list(context[-k:]) if k > 0 else []
    tagged = []
    n = len(window)
    for i, utt in enumerate(window):
        # The window ends on the user turn preceding the system turn.
        speaker = "user" if (n - 1 - i) % 2 == 0 else "system"
        tagged.append(f"{speaker}: {utt}")
    return tagged


def encode(
    ex: NlgExample,
    mode: EncodingMode,
    registry: TemplateRegistry | None,
    catalog: Catalog,
    opts: EncoderOptions = EncoderOptions(),
    *,
    naive_fallback: bool = False,
) -> str:
    """Produce the rewriter input string for one example."""
    if mode is EncodingMode.NAIVE:
        core = " ".join(canonical_naive(a) for a in ex.frame.actions)
    elif mode is EncodingMode.SLOTDESC:
        schema = catalog[ex.service]
        core = " ".join(canonical_slotdesc(a, schema) for a in ex.frame.actions)
    elif mode is EncodingMode.TEMPLATE:
        if registry is None:
            raise ValueError("TEMPLATE encoding requires a template registry")
        core = render_frame(ex.frame, registry, naive_fallback=naive_fallback)
    else:  # pragma: no cover - closed enum
        raise ValueError(f"unhandled mode {mode}")
    if opts.include_service_prefix:
        core = f"{ex.domain} {core}"
    parts = _tagged_context(ex.context, opts.context_k)
    parts.append(core)
    return opts.context_separator.join(parts)


def encode_examples(
    examples: Sequence[NlgExample],
    mode: EncodingMode,
    registry: TemplateRegistry | None,
    catalog: Catalog,
    opts: EncoderOptions = EncoderOptions(),
    *,
    naive_fallback: bool = False,
) -> list[str]:
    return [
        encode(ex, mode, registry, catalog, opts, naive_fallback=naive_fallback)
        for ex in examples
    ]
