"""Per-service template files and frame rendering.

Template files are UTF-8 text, one service per file:

    service: RideSharing_1
    # zero-parameter acts
    goodbye: Have a safe ride!
    # slot-only acts
    request(dest): Where are you riding to?
    # value-bearing acts, `$x` marks where the value is spliced in
    inform(fare=$x): Your ride costs $x dollars.
    # optional shared prefix for runs of consecutive confirm actions
    confirm_prefix: Please confirm the following details:

The `service:` header must be the first meaningful line. Comments (`#`)
and blank lines are ignored. Template text must end with sentence-final
punctuation so concatenated renderings read as separate sentences.
Values are spliced verbatim; there is no escaping language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .actions import Action, ActionFrame, canonical_naive
from .errors import MissingTemplate, ParseError, PlaceholderMismatch

PLACEHOLDER = "$x"
SENTENCE_END = (".", "!", "?")

# `act`, `act(slot)` or `act(slot=$x)` with optional inner whitespace.
_KEY_RE = re.compile(
    r"^(?P<act>[^\s():=]+)\s*"
    r"(?:\(\s*(?P<slot>[^()=\s][^()=]*?)\s*(?P<valued>=\s*\$x\s*)?\))?$"
)


@dataclass(frozen=True)
class TemplateKey:
    act: str
    slot: str | None = None

    def __str__(self) -> str:
        return self.act if self.slot is None else f"{self.act}({self.slot})"


@dataclass(frozen=True)
class Template:
    key: TemplateKey
    text: str
    takes_value: bool


@dataclass
class ServiceTemplates:
    """Registry fragment: every template defined for one service."""

    service_name: str
    templates: dict[TemplateKey, Template] = field(default_factory=dict)
    confirm_prefix: str | None = None

    def get(self, act: str, slot: str | None) -> Template | None:
        return self.templates.get(TemplateKey(act, slot))


@dataclass
class TemplateRegistry:
    services: dict[str, ServiceTemplates] = field(default_factory=dict)

    def add_fragment(self, fragment: ServiceTemplates) -> None:
        existing = self.services.get(fragment.service_name)
        if existing is None:
            self.services[fragment.service_name] = fragment
            return
        for key, template in fragment.templates.items():
            if key in existing.templates:
                raise ParseError(
                    f"duplicate template for key {key} in service "
                    f"{fragment.service_name!r}"
                )
            existing.templates[key] = template
        if fragment.confirm_prefix is not None:
            existing.confirm_prefix = fragment.confirm_prefix

    def for_service(self, service_name: str) -> ServiceTemplates | None:
        return self.services.get(service_name)


def _parse_key(raw: str, *, path: str, line_no: int) -> tuple[TemplateKey, bool]:
    m = _KEY_RE.match(raw.strip())
    if m is None:
        raise ParseError(f"malformed template key {raw!r}", path=path, line=line_no)
    return TemplateKey(m.group("act"), m.group("slot")), m.group("valued") is not None


def parse_template_lines(
    lines: Iterable[str], *, path: str = "<string>"
) -> ServiceTemplates:
    fragment: ServiceTemplates | None = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key_part, sep, text = line.partition(":")
        if not sep:
            raise ParseError("expected `key: text`", path=path, line=line_no)
        key_part = key_part.strip()
        text = text.strip()
        if fragment is None:
            if key_part != "service":
                raise ParseError(
                    "first line must be a `service: <name>` header",
                    path=path,
                    line=line_no,
                )
            if not text:
                raise ParseError("empty service name", path=path, line=line_no)
            fragment = ServiceTemplates(service_name=text)
            continue
        if key_part == "service":
            raise ParseError("second `service:` header", path=path, line=line_no)
        if key_part == "confirm_prefix":
            if not text:
                raise ParseError("empty confirm_prefix", path=path, line=line_no)
            fragment.confirm_prefix = text
            continue
        key, takes_value = _parse_key(key_part, path=path, line_no=line_no)
        if not text:
            raise ParseError(f"empty template text for {key}", path=path, line=line_no)
        if takes_value and PLACEHOLDER not in text:
            raise PlaceholderMismatch(
                f"value-bearing template {key} does not contain {PLACEHOLDER!r}",
                path=path,
                line=line_no,
            )
        if not takes_value and PLACEHOLDER in text:
            raise PlaceholderMismatch(
                f"template {key} takes no value but contains {PLACEHOLDER!r}",
                path=path,
                line=line_no,
            )
        if not text.endswith(SENTENCE_END):
            raise ParseError(
                f"template text for {key} must end with one of {SENTENCE_END}",
                path=path,
                line=line_no,
            )
        if key in fragment.templates:
            raise ParseError(f"duplicate template for key {key}", path=path, line=line_no)
        fragment.templates[key] = Template(key=key, text=text, takes_value=takes_value)
    if fragment is None:
        raise ParseError("file defines no service", path=path)
    return fragment


def parse_template_file(path: str | Path) -> ServiceTemplates:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_template_lines(fh, path=str(path))


def load_template_dir(path: str | Path) -> TemplateRegistry:
    """Parse every `*.templates` / `*.tpl` / `*.txt` file in a directory."""
    registry = TemplateRegistry()
    path = Path(path)
    for file in sorted(path.glob("*")):
        if file.suffix not in (".templates", ".tpl", ".txt"):
            continue
        registry.add_fragment(parse_template_file(file))
    return registry


def serialize_templates(fragment: ServiceTemplates) -> str:
    """Emit the template-file text for a fragment; inverse of parsing."""
    lines = [f"service: {fragment.service_name}"]
    if fragment.confirm_prefix is not None:
        lines.append(f"confirm_prefix: {fragment.confirm_prefix}")
    for key in sorted(fragment.templates, key=lambda k: (k.act, k.slot or "")):
        template = fragment.templates[key]
        if template.takes_value:
            lines.append(f"{key.act}({key.slot}=$x): {template.text}")
        elif key.slot is not None:
            lines.append(f"{key.act}({key.slot}): {template.text}")
        else:
            lines.append(f"{key.act}: {template.text}")
    return "\n".join(lines) + "\n"


def render_action(
    a: Action, templates: ServiceTemplates, *, naive_fallback: bool = False
) -> str:
    """Render one action to a sentence by direct placeholder splice."""
    template = templates.get(a.act, a.slot)
    if template is None or template.takes_value != (a.value is not None):
        if naive_fallback:
            return canonical_naive(a)
        raise MissingTemplate(templates.service_name, a.act, a.slot)
    if template.takes_value:
        assert a.value is not None
        return template.text.replace(PLACEHOLDER, a.value)
    return template.text


def render_frame(
    frame: ActionFrame,
    registry: TemplateRegistry,
    *,
    coalesce_confirms: bool = True,
    naive_fallback: bool = False,
) -> str:
    """Render a frame to the concatenated template utterance.

    Sentences are joined with single spaces in action order. With
    coalescing on, a run of consecutive `confirm` actions is emitted as
    the service's confirm prefix followed by the per-action clauses.
    """
    templates = registry.for_service(frame.service)
    if templates is None:
        first = frame.actions[0]
        if naive_fallback:
            return " ".join(canonical_naive(a) for a in frame.actions)
        raise MissingTemplate(frame.service, first.act, first.slot)
    sentences: list[str] = []
    i = 0
    actions = frame.actions
    while i < len(actions):
        a = actions[i]
        if coalesce_confirms and a.act == "confirm" and templates.confirm_prefix:
            clauses = []
            while i < len(actions) and actions[i].act == "confirm":
                clauses.append(
                    render_action(actions[i], templates, naive_fallback=naive_fallback)
                )
                i += 1
            sentences.append(templates.confirm_prefix + " " + " ".join(clauses))
        else:
            sentences.append(render_action(a, templates, naive_fallback=naive_fallback))
            i += 1
    return " ".join(sentences)


@dataclass(frozen=True)
class CoverageKey:
    """One renderable shape observed in a corpus: act, slot, value arity."""

    service: str
    act: str
    slot: str | None
    takes_value: bool

    def sort_key(self) -> tuple[str, str, str, bool]:
        return (self.service, self.act, self.slot or "", self.takes_value)

    def __str__(self) -> str:
        inner = ""
        if self.slot is not None:
            inner = f"({self.slot}=$x)" if self.takes_value else f"({self.slot})"
        return f"{self.service}:{self.act}{inner}"


def frame_coverage_keys(frame: ActionFrame) -> set[CoverageKey]:
    return {
        CoverageKey(frame.service, a.act, a.slot, a.value is not None)
        for a in frame.actions
    }


def corpus_coverage_keys(frames: Iterable[ActionFrame]) -> set[CoverageKey]:
    keys: set[CoverageKey] = set()
    for frame in frames:
        keys |= frame_coverage_keys(frame)
    return keys


def validate_coverage(
    registry: TemplateRegistry, corpus_keys: set[CoverageKey]
) -> list[CoverageKey]:
    """Return the corpus keys the registry cannot render, sorted."""
    missing = []
    for key in corpus_keys:
        templates = registry.for_service(key.service)
        template = templates.get(key.act, key.slot) if templates else None
        if template is None or template.takes_value != key.takes_value:
            missing.append(key)
    return sorted(missing, key=CoverageKey.sort_key)
