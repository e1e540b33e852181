"""Corpus BLEU and slot error rate with seen/unseen and per-domain breakdowns.

BLEU here is corpus-level BLEU-4: the geometric mean of modified n-gram
precisions (n = 1..4) times the brevity penalty, scaled to [0, 100], with
exactly one reference per prediction. Tokenization is frozen for this
artifact: lowercase, split on whitespace, then split punctuation characters
into their own tokens, except that `. , ? ! $` stay attached when adjacent
to a digit (so `$97`, `3.5` survive as single tokens). Cross-toolkit BLEU
comparability is not claimed.

SER is per-example: an example counts as an error when at least one
non-boolean slot value is absent from the prediction after normalization
(lowercase, whitespace runs collapsed). Boolean slots cannot be checked by
string matching and are excluded; examples with only boolean or no slot
values do not enter the denominator.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .encoding import NlgExample
from .errors import LengthMismatch

_ATTACHABLE = ".,?!$"


def tokenize(text: str) -> list[str]:
    """Apply the frozen BLEU tokenization rule."""
    tokens: list[str] = []
    for word in text.lower().split():
        buf: list[str] = []
        for i, ch in enumerate(word):
            if ch.isalnum():
                buf.append(ch)
                continue
            prev_digit = i > 0 and word[i - 1].isdigit()
            next_digit = i + 1 < len(word) and word[i + 1].isdigit()
            if ch in _ATTACHABLE and (prev_digit or next_digit):
                buf.append(ch)
                continue
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(ch)
        if buf:
            tokens.append("".join(buf))
    return tokens


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    predictions: Sequence[str],
    references: Sequence[str],
    *,
    smoothing: bool = False,
    max_order: int = 4,
) -> float:
    """Corpus-level BLEU in [0, 100].

    Without smoothing the score is 0.0 as soon as any n-gram order has zero
    matches. The optional add-one smoothing ((m+1)/(c+1) per order) exists
    for tiny fixtures only and is never used for reported scores.
    """
    if len(predictions) != len(references):
        raise LengthMismatch(len(references), len(predictions))
    matches = [0] * max_order
    guesses = [0] * max_order
    pred_len = 0
    ref_len = 0
    for pred, ref in zip(predictions, references):
        pred_tokens = tokenize(pred)
        ref_tokens = tokenize(ref)
        pred_len += len(pred_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_order + 1):
            pred_ngrams = _ngrams(pred_tokens, n)
            if not pred_ngrams:
                continue
            guesses[n - 1] += sum(pred_ngrams.values())
            matches[n - 1] += sum((pred_ngrams & _ngrams(ref_tokens, n)).values())
    if pred_len == 0:
        return 0.0
    log_sum = 0.0
    for m, c in zip(matches, guesses):
        if smoothing:
            m, c = m + 1, c + 1
        if m == 0 or c == 0:
            return 0.0
        log_sum += math.log(m / c)
    geo_mean = math.exp(log_sum / max_order)
    bp = 1.0 if pred_len > ref_len else math.exp(1.0 - ref_len / pred_len)
    return 100.0 * geo_mean * bp


def normalize_for_match(text: str) -> str:
    return " ".join(text.split()).lower()


@dataclass(frozen=True)
class SlotErrorResult:
    ser: float
    flagged_ids: tuple[str, ...]
    n_scored: int
    excluded_boolean_slots: int


def slot_error_rate(
    examples: Sequence[NlgExample], predictions: Sequence[str]
) -> SlotErrorResult:
    """Fraction of scorable examples with at least one missed slot value.

    An example is scorable when it carries at least one non-boolean slot
    value; boolean slot values are counted into `excluded_boolean_slots`
    and never checked.
    """
    if len(predictions) != len(examples):
        raise LengthMismatch(len(examples), len(predictions))
    flagged: list[str] = []
    n_scored = 0
    excluded = 0
    for ex, pred in zip(examples, predictions):
        checkable = []
        for slot, value, is_boolean in ex.slot_values:
            if is_boolean:
                excluded += 1
            else:
                checkable.append(value)
        if not checkable:
            continue
        n_scored += 1
        normalized_pred = normalize_for_match(pred)
        if any(normalize_for_match(v) not in normalized_pred for v in checkable):
            flagged.append(ex.example_id)
    ser = len(flagged) / n_scored if n_scored else 0.0
    return SlotErrorResult(
        ser=ser,
        flagged_ids=tuple(flagged),
        n_scored=n_scored,
        excluded_boolean_slots=excluded,
    )


@dataclass(frozen=True)
class GroupMetrics:
    bleu: float
    ser: float
    n: int


@dataclass
class EvalReport:
    bleu: float
    ser: float
    n_examples: int
    excluded_boolean_slots: int
    per_domain: dict[str, GroupMetrics]
    seen: GroupMetrics | None
    unseen: GroupMetrics | None
    flagged_ids: tuple[str, ...]
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        def group(g: GroupMetrics | None) -> dict | None:
            if g is None:
                return None
            return {"bleu": g.bleu, "ser": g.ser, "n": g.n}

        return {
            "bleu": self.bleu,
            "ser": self.ser,
            "n_examples": self.n_examples,
            "excluded_boolean_slots": self.excluded_boolean_slots,
            "per_domain": {d: group(m) for d, m in sorted(self.per_domain.items())},
            "seen": group(self.seen),
            "unseen": group(self.unseen),
            "flagged_ids": list(self.flagged_ids),
            "provenance": self.provenance,
        }

    def to_text_table(self) -> str:
        rows: list[tuple[str, str, str, str]] = [("", "BLEU", "SER%", "n")]

        def add(label: str, g: GroupMetrics | None) -> None:
            if g is None:
                return
            rows.append((label, f"{g.bleu:.2f}", f"{100.0 * g.ser:.2f}", str(g.n)))

        add("overall", GroupMetrics(self.bleu, self.ser, self.n_examples))
        add("seen", self.seen)
        add("unseen", self.unseen)
        for domain in sorted(self.per_domain):
            add(domain, self.per_domain[domain])
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = [
            "  ".join(
                cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i])
                for i, cell in enumerate(row)
            ).rstrip()
            for row in rows
        ]
        return "\n".join(lines) + "\n"


def _group_metrics(
    examples: Sequence[NlgExample], predictions: Sequence[str]
) -> GroupMetrics:
    refs = [ex.reference for ex in examples]
    ser = slot_error_rate(examples, predictions).ser
    return GroupMetrics(
        bleu=corpus_bleu(predictions, refs), ser=ser, n=len(examples)
    )


def evaluate_run(
    examples: Sequence[NlgExample],
    predictions: Sequence[str],
    manifest: Mapping | None = None,
    provenance: Mapping | None = None,
) -> EvalReport:
    """Score a prediction run: overall, per-domain, and seen/unseen.

    The seen-domain set comes from the split manifest (`train_domains`);
    when no manifest is given, the per-example `seen` flags are used, and
    the seen/unseen breakdown is omitted if those are unset. A partition
    with no examples is reported as absent, not as zero.
    """
    if len(predictions) != len(examples):
        raise LengthMismatch(len(examples), len(predictions))
    overall_ser = slot_error_rate(examples, predictions)
    bleu = corpus_bleu(predictions, [ex.reference for ex in examples])

    seen_domains: set[str] | None = None
    if manifest is not None and "train_domains" in manifest:
        seen_domains = set(manifest["train_domains"])

    def is_seen(ex: NlgExample) -> bool | None:
        if seen_domains is not None:
            return ex.domain in seen_domains
        return ex.seen

    pairs = list(zip(examples, predictions))
    by_domain: dict[str, list[tuple[NlgExample, str]]] = {}
    seen_pairs: list[tuple[NlgExample, str]] = []
    unseen_pairs: list[tuple[NlgExample, str]] = []
    partitioned = True
    for ex, pred in pairs:
        by_domain.setdefault(ex.domain, []).append((ex, pred))
        flag = is_seen(ex)
        if flag is None:
            partitioned = False
        elif flag:
            seen_pairs.append((ex, pred))
        else:
            unseen_pairs.append((ex, pred))

    def metrics_of(group: list[tuple[NlgExample, str]]) -> GroupMetrics | None:
        if not group:
            return None
        exs, preds = zip(*group)
        return _group_metrics(exs, preds)

    return EvalReport(
        bleu=bleu,
        ser=overall_ser.ser,
        n_examples=len(examples),
        excluded_boolean_slots=overall_ser.excluded_boolean_slots,
        per_domain={d: metrics_of(g) for d, g in sorted(by_domain.items())},
        seen=metrics_of(seen_pairs) if partitioned else None,
        unseen=metrics_of(unseen_pairs) if partitioned else None,
        flagged_ids=overall_ser.flagged_ids,
        provenance=dict(provenance or {}),
    )
