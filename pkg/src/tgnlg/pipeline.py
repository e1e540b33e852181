"""File-level experiment steps shared by the CLI and tests.

Each step reads and writes plain artifacts (JSONL example files, TSV
encoded datasets, prediction files, JSON reports) and is deterministic:
rerunning a step with the same inputs and parameters produces byte-equal
outputs.
"""

from __future__ import annotations

from pathlib import Path

from .catalog import Catalog, Partition, load_corpus, load_schemas
from .encoding import (
    EncoderOptions,
    EncodingMode,
    NlgExample,
    encode_examples,
    read_examples_jsonl,
    write_examples_jsonl,
)
from .errors import MissingTemplate, ParseError
from .evaluation import EvalReport, evaluate_run
from .serialization import config_hash, read_json, sha256_file, write_json
from .splits import derive_kshot, derive_sgd_nlg, extract_examples
from .templates import TemplateRegistry, corpus_coverage_keys, validate_coverage

MANIFEST_FILE = "manifest.json"


def _per_domain_counts(examples: list[NlgExample]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for ex in examples:
        counts[ex.domain] = counts.get(ex.domain, 0) + 1
    return counts


def materialize_splits(
    corpus_dir: str | Path,
    out_dir: str | Path,
    *,
    k: int | None,
    seed: int,
    context_k: int = 7,
) -> dict:
    """Derive the training split (single-domain filter, then optional
    k-shot sampling), extract examples for every partition, and write
    `<partition>.jsonl` files plus the split manifest. Returns the
    manifest dict."""
    corpus = load_corpus(corpus_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if "train" not in corpus:
        raise ParseError("corpus has no train partition", path=str(corpus_dir))
    train: Partition = corpus["train"]
    filtered = derive_sgd_nlg(train.dialogues)

    manifest: dict = {
        "kind": "fewshot-sgd" if k is not None else "sgd-nlg",
        "k": k,
        "seed": seed,
        "context_k": context_k,
        "corpus_dir": str(corpus_dir),
        "config_hash": config_hash(
            {"corpus": str(corpus_dir), "k": k, "seed": seed, "context_k": context_k}
        ),
    }

    if k is not None:
        selection = derive_kshot(filtered, k, seed, train.catalog)
        train_dialogues = selection.dialogues
        manifest["selected_dialogue_ids"] = {
            domain: [d.dialogue_id for d in ds]
            for domain, ds in sorted(selection.by_domain.items())
        }
        manifest["coverage"] = selection.coverage()
    else:
        train_dialogues = sorted(filtered, key=lambda d: d.dialogue_id)

    train_domains = sorted(
        {train.catalog[d.services[0]].domain for d in train_dialogues}
    )
    manifest["train_domains"] = train_domains
    seen_domains = set(train_domains)

    partitions_meta: dict[str, dict] = {}
    for name, partition in corpus.items():
        if name == "train":
            dialogues = train_dialogues
        else:
            dialogues = sorted(partition.dialogues, key=lambda d: d.dialogue_id)
        examples = extract_examples(
            dialogues, context_k, partition.catalog, seen_domains=seen_domains
        )
        n = write_examples_jsonl(out_dir / f"{name}.jsonl", examples)
        partitions_meta[name] = {
            "n_dialogues": len(dialogues),
            "n_examples": n,
            "per_domain": _per_domain_counts(examples),
        }
    manifest["partitions"] = partitions_meta
    write_json(out_dir / MANIFEST_FILE, manifest)
    return manifest


def load_manifest(splits_dir: str | Path) -> tuple[dict, str]:
    path = Path(splits_dir) / MANIFEST_FILE
    return read_json(path), sha256_file(path)


def load_split_examples(
    splits_dir: str | Path, partition: str, *, domain: str | None = None
) -> list[NlgExample]:
    examples = read_examples_jsonl(Path(splits_dir) / f"{partition}.jsonl")
    if domain is not None:
        examples = [ex for ex in examples if ex.domain == domain]
    return examples


def catalog_for_partition(corpus_dir: str | Path, partition: str) -> Catalog:
    return load_schemas(Path(corpus_dir) / partition)


def write_encoded_tsv(path: str | Path, inputs, targets) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inp, tgt in zip(inputs, targets):
            fh.write(f"{inp}\t{tgt}\n")


def read_encoded_tsv(path: str | Path) -> tuple[list[str], list[str]]:
    inputs, targets = [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(
                    f"expected `input<TAB>target`, got {len(parts)} columns",
                    path=str(path),
                    line=line_no,
                )
            inputs.append(parts[0])
            targets.append(parts[1])
    return inputs, targets


def encode_split(
    splits_dir: str | Path,
    partition: str,
    mode: EncodingMode,
    registry: TemplateRegistry | None,
    catalog: Catalog,
    out_dir: str | Path,
    *,
    opts: EncoderOptions = EncoderOptions(),
    domain: str | None = None,
    naive_fallback: bool = False,
    validate_only: bool = False,
) -> dict:
    """Encode one split partition to `<partition>.<mode>.tsv` plus a JSON
    sidecar. For the TEMPLATE mode, registry coverage is validated up
    front so one missing template fails the run before anything is
    written; with `naive_fallback` the gaps degrade to canonical strings
    instead."""
    splits_dir = Path(splits_dir)
    examples = load_split_examples(splits_dir, partition, domain=domain)
    manifest, manifest_hash = load_manifest(splits_dir)

    if mode is EncodingMode.TEMPLATE and registry is not None and not naive_fallback:
        missing = validate_coverage(
            registry, corpus_coverage_keys(ex.frame for ex in examples)
        )
        if missing:
            first = missing[0]
            raise MissingTemplate(first.service, first.act, first.slot)
    if validate_only:
        return {"partition": partition, "mode": mode.value, "n": len(examples)}

    inputs = encode_examples(
        examples, mode, registry, catalog, opts, naive_fallback=naive_fallback
    )
    targets = [ex.reference for ex in examples]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{partition}.{mode.value}"
    write_encoded_tsv(out_dir / f"{stem}.tsv", inputs, targets)
    meta = {
        "partition": partition,
        "mode": mode.value,
        "context_k": opts.context_k,
        "include_service_prefix": opts.include_service_prefix,
        "domain": domain,
        "n": len(examples),
        "split_manifest_sha256": manifest_hash,
        "config_hash": config_hash(
            {
                "partition": partition,
                "mode": mode.value,
                "context_k": opts.context_k,
                "include_service_prefix": opts.include_service_prefix,
                "domain": domain,
                "split_manifest_sha256": manifest_hash,
            }
        ),
    }
    write_json(out_dir / f"{stem}.meta.json", meta)
    return meta


def write_predictions(path: str | Path, predictions) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in predictions:
            fh.write(" ".join(str(p).split()))
            fh.write("\n")


def read_predictions(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def evaluate_predictions(
    splits_dir: str | Path,
    partition: str,
    predictions_path: str | Path,
    *,
    provenance: dict | None = None,
    domain: str | None = None,
) -> EvalReport:
    """Score a predictions file against a split partition."""
    examples = load_split_examples(splits_dir, partition, domain=domain)
    manifest, manifest_hash = load_manifest(splits_dir)
    predictions = read_predictions(predictions_path)
    prov = dict(provenance or {})
    prov.setdefault("split_manifest_sha256", manifest_hash)
    return evaluate_run(examples, predictions, manifest, prov)


def write_report(out_dir: str | Path, report: EvalReport, *, stem: str = "report") -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / f"{stem}.json", report.to_json_dict())
    (out_dir / f"{stem}.txt").write_text(report.to_text_table(), encoding="utf-8")
