"""Dataset derivation: single-domain training filter, k-shot sampling
with act/slot coverage, and per-turn example extraction.

The k-shot sampler works per domain. It first runs a greedy cover (take
the dialogue covering the most still-uncovered acts and slots, ties broken
by a seeded shuffle), then fills the remaining quota uniformly at random
with the same seeded generator. If the greedy pass cannot cover within k
picks, a bounded exhaustive search over subsets decides whether any
k-subset covers at all before the split is declared infeasible.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .catalog import Catalog, Dialogue
from .encoding import NlgExample
from .errors import CoverageInfeasible

CANONICAL_K = (5, 10, 20, 40, 80)

# Exhaustive-search budget (subsets examined) when greedy fails within k.
_EXACT_SEARCH_LIMIT = 500_000


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    k: int | None = None
    partition: str = "train"

    def __post_init__(self) -> None:
        if self.k is not None:
            if self.k < 1:
                raise ValueError("k must be positive")
            if self.k not in CANONICAL_K:
                warnings.warn(
                    f"k={self.k} is not one of the canonical shot counts "
                    f"{CANONICAL_K}",
                    stacklevel=2,
                )


def derive_sgd_nlg(train_dialogues: Sequence[Dialogue]) -> list[Dialogue]:
    """Drop multi-service dialogues from the raw training partition."""
    kept = [d for d in train_dialogues if len(d.services) == 1]
    if train_dialogues and not kept:
        warnings.warn("all training dialogues are multi-domain; nothing retained")
    return kept


def dialogue_features(d: Dialogue) -> frozenset[str]:
    """Acts and slots the dialogue's system turns exercise."""
    feats = set()
    for _, turn in d.system_turns():
        for frame in turn.frames:
            for a in frame.actions:
                feats.add(f"act:{a.act}")
                if a.slot is not None:
                    feats.add(f"slot:{a.slot}")
    return frozenset(feats)


def _exhaustive_cover(
    dialogues: Sequence[Dialogue],
    k: int,
    universe: frozenset[str],
    limit: int = _EXACT_SEARCH_LIMIT,
) -> list[Dialogue] | None:
    """Smallest-first subset search; None when no cover of size <= k exists
    within the search budget."""
    feats = [dialogue_features(d) for d in dialogues]
    examined = 0
    for size in range(1, k + 1):
        for idxs in combinations(range(len(dialogues)), size):
            examined += 1
            if examined > limit:
                return None
            covered = frozenset().union(*(feats[i] for i in idxs))
            if covered >= universe:
                return [dialogues[i] for i in idxs]
    return None


def _sample_domain(
    domain: str, dialogues: list[Dialogue], k: int, seed: int
) -> list[Dialogue]:
    rng = random.Random(f"{seed}:{domain}")
    ordered = sorted(dialogues, key=lambda d: d.dialogue_id)
    if len(ordered) <= k:
        if len(ordered) < k:
            warnings.warn(
                f"domain {domain!r} has only {len(ordered)} dialogues; "
                f"selecting all for k={k}"
            )
        return ordered

    universe = frozenset().union(*(dialogue_features(d) for d in ordered))
    shuffled = ordered[:]
    rng.shuffle(shuffled)
    features = {d.dialogue_id: dialogue_features(d) for d in ordered}

    selected: list[Dialogue] = []
    chosen_ids: set[str] = set()
    uncovered = set(universe)
    while uncovered and len(selected) < k:
        best = max(
            (d for d in shuffled if d.dialogue_id not in chosen_ids),
            key=lambda d: len(features[d.dialogue_id] & uncovered),
        )
        selected.append(best)
        chosen_ids.add(best.dialogue_id)
        uncovered -= features[best.dialogue_id]

    if uncovered:
        exact = _exhaustive_cover(ordered, k, universe)
        if exact is None:
            raise CoverageInfeasible(domain, k, sorted(uncovered))
        selected = exact
        chosen_ids = {d.dialogue_id for d in exact}

    remaining = [d for d in ordered if d.dialogue_id not in chosen_ids]
    fill = k - len(selected)
    if fill > 0:
        selected.extend(rng.sample(remaining, fill))
    return sorted(selected, key=lambda d: d.dialogue_id)


@dataclass
class KShotSelection:
    k: int
    seed: int
    by_domain: dict[str, list[Dialogue]] = field(default_factory=dict)

    @property
    def dialogues(self) -> list[Dialogue]:
        out: list[Dialogue] = []
        for domain in sorted(self.by_domain):
            out.extend(self.by_domain[domain])
        return out

    def coverage(self) -> dict[str, dict[str, list[str]]]:
        report = {}
        for domain in sorted(self.by_domain):
            feats: set[str] = set()
            for d in self.by_domain[domain]:
                feats |= dialogue_features(d)
            report[domain] = {
                "acts": sorted(f[4:] for f in feats if f.startswith("act:")),
                "slots": sorted(f[5:] for f in feats if f.startswith("slot:")),
            }
        return report


def derive_kshot(
    filtered_train: Sequence[Dialogue], k: int, seed: int, catalog: Catalog
) -> KShotSelection:
    """Sample k dialogues per domain, covering every act and slot that
    occurs in that domain's filtered training data whenever possible."""
    if k < 1:
        raise ValueError("k must be positive")
    by_domain: dict[str, list[Dialogue]] = {}
    for d in filtered_train:
        domain = catalog[d.services[0]].domain
        by_domain.setdefault(domain, []).append(d)
    selection = KShotSelection(k=k, seed=seed)
    for domain in sorted(by_domain):
        selection.by_domain[domain] = _sample_domain(domain, by_domain[domain], k, seed)
    return selection


def extract_examples(
    dialogues: Iterable[Dialogue],
    context_k: int,
    catalog: Catalog,
    *,
    seen_domains: set[str] | None = None,
) -> list[NlgExample]:
    """One example per system turn, carrying the preceding `context_k`
    utterances (fewer at dialogue start) and the slot values for SER."""
    if context_k < 0:
        raise ValueError("context_k must be non-negative")
    examples: list[NlgExample] = []
    for d in dialogues:
        utterances = [t.utterance for t in d.turns]
        for i, turn in d.system_turns():
            frame = turn.frames[0]
            schema = catalog[frame.service]
            context = tuple(utterances[max(0, i - context_k) : i])
            slot_values = tuple(
                (a.slot, a.value, schema.slot(a.slot).is_boolean)
                for a in frame.actions
                if a.value is not None and a.slot is not None
            )
            seen = None if seen_domains is None else schema.domain in seen_domains
            examples.append(
                NlgExample(
                    example_id=f"{d.dialogue_id}:{i}",
                    frame=frame,
                    reference=turn.utterance,
                    context=context,
                    service=frame.service,
                    domain=schema.domain,
                    slot_values=slot_values,
                    seen=seen,
                )
            )
    return examples
