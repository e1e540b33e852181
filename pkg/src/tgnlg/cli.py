"""Command-line entry points for the experiment lifecycle.

Exit codes: 0 success, 1 usage error, 2 data error (corpus, templates,
metrics inputs), 3 rewriter error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import RunConfig, load_run_config
from .encoding import EncoderOptions, EncodingMode
from .errors import DataError, RewriterError
from .pipeline import (
    encode_split,
    evaluate_predictions,
    load_manifest,
    materialize_splits,
    read_encoded_tsv,
    write_predictions,
    write_report,
)
from .rewriter import CopyRewriter, DecodeConfig, RemoteRewriter
from .serialization import read_json, sha256_file, write_json
from .templates import load_template_dir


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON run configuration; flags override its values.",
)
@click.pass_context
def cli(ctx: click.Context, config_path: str | None) -> None:
    """Template-guided NLG toolkit."""
    ctx.obj = config_path


def _config(ctx: click.Context, **overrides) -> RunConfig:
    return load_run_config(ctx.obj, overrides)


def _require(config: RunConfig, name: str) -> str:
    value = getattr(config, name)
    if value is None:
        raise click.UsageError(f"missing required setting: {name.replace('_', '-')}")
    return value


@cli.command("derive-splits")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "output_dir", type=click.Path(file_okay=False))
@click.option("--k", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--context-k", "split_context_k", type=click.IntRange(min=0), default=None)
@click.pass_context
def derive_splits_cmd(ctx, corpus_dir, output_dir, k, seed, split_context_k):
    """Derive split files and a manifest from a corpus directory."""
    config = _config(
        ctx,
        corpus_dir=corpus_dir,
        output_dir=output_dir,
        k=k,
        seed=seed,
        split_context_k=split_context_k,
    )
    manifest = materialize_splits(
        _require(config, "corpus_dir"),
        _require(config, "output_dir"),
        k=config.k,
        seed=config.seed,
        context_k=config.split_context_k,
    )
    for name, meta in sorted(manifest["partitions"].items()):
        click.echo(
            f"{name}: {meta['n_dialogues']} dialogues, {meta['n_examples']} examples"
        )
    click.echo(f"manifest config hash: {manifest['config_hash']}")


@cli.command("encode")
@click.option("--splits", "splits_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--templates", "templates_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "output_dir", type=click.Path(file_okay=False))
@click.option("--mode", type=click.Choice([m.value for m in EncodingMode]), default=None)
@click.option("--context", "context_k", type=click.IntRange(min=0), default=None)
@click.option("--service-prefix", "include_service_prefix", is_flag=True, default=None)
@click.option("--partition", "partitions", multiple=True)
@click.option("--domain", default=None, help="Restrict to one domain.")
@click.option("--fallback-naive", is_flag=True, default=False)
@click.option("--validate-only", is_flag=True, default=False)
@click.pass_context
def encode_cmd(
    ctx,
    splits_dir,
    corpus_dir,
    templates_dir,
    output_dir,
    mode,
    context_k,
    include_service_prefix,
    partitions,
    domain,
    fallback_naive,
    validate_only,
):
    """Encode split examples into (input, target) training files."""
    config = _config(
        ctx,
        splits_dir=splits_dir,
        corpus_dir=corpus_dir,
        templates_dir=templates_dir,
        output_dir=output_dir,
        mode=mode,
        context_k=context_k,
        include_service_prefix=include_service_prefix,
    )
    splits = Path(_require(config, "splits_dir"))
    manifest, _ = load_manifest(splits)
    corpus = Path(config.corpus_dir or manifest.get("corpus_dir"))
    enc_mode = EncodingMode.from_string(config.mode)
    registry = None
    if enc_mode is EncodingMode.TEMPLATE:
        registry = load_template_dir(_require(config, "templates_dir"))
    elif config.templates_dir:
        registry = load_template_dir(config.templates_dir)
    opts = EncoderOptions(
        context_k=config.context_k,
        include_service_prefix=config.include_service_prefix,
    )
    names = list(partitions) or sorted(manifest["partitions"])
    from .pipeline import catalog_for_partition

    for name in names:
        catalog = catalog_for_partition(corpus, name)
        meta = encode_split(
            splits,
            name,
            enc_mode,
            registry,
            catalog,
            _require(config, "output_dir") if not validate_only else ".",
            opts=opts,
            domain=domain,
            naive_fallback=fallback_naive,
            validate_only=validate_only,
        )
        verb = "validated" if validate_only else "encoded"
        click.echo(f"{verb} {name}.{enc_mode.value}: {meta['n']} examples")


def _build_rewriter(config: RunConfig):
    if config.rewriter == "copy":
        return CopyRewriter()
    if config.rewriter == "remote":
        endpoint = config.endpoint
        if not endpoint:
            raise click.UsageError("remote rewriter requires --endpoint or TGNLG_ENDPOINT")
        return RemoteRewriter(
            endpoint, timeout=config.timeout, retries=config.retries
        )
    raise click.UsageError(f"unknown rewriter {config.rewriter!r}")


@cli.command("rewrite")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--rewriter", type=click.Choice(["copy", "remote"]), default=None)
@click.option("--endpoint", default=None)
@click.option("--timeout", type=float, default=None)
@click.option("--retries", type=click.IntRange(min=0), default=None)
@click.option("--batch-size", type=click.IntRange(min=1), default=32)
@click.option("--beam-width", type=click.IntRange(min=1), default=None)
@click.option("--length-penalty", "length_penalty_alpha", type=float, default=None)
@click.option("--max-output-tokens", type=click.IntRange(min=1), default=None)
@click.pass_context
def rewrite_cmd(
    ctx,
    input_path,
    out_path,
    rewriter,
    endpoint,
    timeout,
    retries,
    batch_size,
    beam_width,
    length_penalty_alpha,
    max_output_tokens,
):
    """Run a rewriter over an encoded dataset, writing predictions."""
    config = _config(
        ctx,
        rewriter=rewriter,
        endpoint=endpoint,
        timeout=timeout,
        retries=retries,
        beam_width=beam_width,
        length_penalty_alpha=length_penalty_alpha,
        max_output_tokens=max_output_tokens,
    )
    inputs, _targets = read_encoded_tsv(input_path)
    decode = DecodeConfig(
        beam_width=config.beam_width,
        length_penalty_alpha=config.length_penalty_alpha,
        max_output_tokens=config.max_output_tokens,
    )
    engine = _build_rewriter(config)
    outputs: list[str] = []
    model_tag = engine.model_tag
    if isinstance(engine, RemoteRewriter):
        for start in range(0, len(inputs), batch_size):
            resp = engine.rewrite_batch(inputs[start : start + batch_size], decode)
            outputs.extend(resp.outputs)
            model_tag = resp.model_tag
    else:
        outputs = engine.rewrite(inputs, decode)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_predictions(out_path, outputs)
    write_json(
        out_path.with_suffix(".meta.json"),
        {
            "model_tag": model_tag,
            "decode": decode.to_wire(),
            "n": len(outputs),
            "input_sha256": sha256_file(input_path),
        },
    )
    click.echo(f"wrote {len(outputs)} predictions (model_tag={model_tag})")


@cli.command("evaluate")
@click.option("--splits", "splits_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--partition", default="test")
@click.option("--predictions", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--encoded-meta", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "output_dir", type=click.Path(file_okay=False))
@click.option("--domain", default=None)
@click.option("--stem", default="report")
@click.pass_context
def evaluate_cmd(ctx, splits_dir, partition, predictions, encoded_meta, output_dir, domain, stem):
    """Compute BLEU and SER for a predictions file."""
    config = _config(ctx, splits_dir=splits_dir, output_dir=output_dir)
    provenance: dict = {}
    if encoded_meta:
        meta = read_json(encoded_meta)
        provenance["mode"] = meta.get("mode")
        provenance["context_k"] = meta.get("context_k")
    predictions_meta = Path(predictions).with_suffix(".meta.json")
    if predictions_meta.exists():
        provenance["model_tag"] = read_json(predictions_meta).get("model_tag")
    provenance["config_hash"] = config.hash()
    report = evaluate_predictions(
        _require(config, "splits_dir"),
        partition,
        predictions,
        provenance=provenance,
        domain=domain,
    )
    write_report(_require(config, "output_dir"), report, stem=stem)
    click.echo(report.to_text_table(), nl=False)


@cli.command("report")
@click.argument("reports", nargs=-1, type=click.Path(exists=True, dir_okay=False), required=True)
def report_cmd(reports):
    """Combine evaluation reports into one table, one row per run."""
    rows = [("run", "BLEU", "SER%", "seen BLEU", "seen SER%", "unseen BLEU", "unseen SER%", "n")]

    def fmt(group, key, scale=1.0):
        if group is None:
            return "-"
        return f"{scale * group[key]:.2f}"

    for path in reports:
        data = read_json(path)
        rows.append(
            (
                Path(path).stem.replace(".report", ""),
                f"{data['bleu']:.2f}",
                f"{100.0 * data['ser']:.2f}",
                fmt(data.get("seen"), "bleu"),
                fmt(data.get("seen"), "ser", 100.0),
                fmt(data.get("unseen"), "bleu"),
                fmt(data.get("unseen"), "ser", 100.0),
                str(data["n_examples"]),
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        line = "  ".join(
            cell.ljust(widths[0]) if i == 0 else cell.rjust(widths[i])
            for i, cell in enumerate(row)
        )
        click.echo(line.rstrip())


@cli.command("serve")
@click.option("--schemas", "schemas_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--templates", "templates_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--mode", type=click.Choice([m.value for m in EncodingMode]), default=None)
@click.option("--context", "context_k", type=click.IntRange(min=0), default=None)
@click.option("--rewriter", type=click.Choice(["copy", "remote"]), default=None)
@click.option("--endpoint", default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def serve_cmd(ctx, schemas_dir, templates_dir, mode, context_k, rewriter, endpoint, host, port):
    """Serve POST /respond and GET /healthz."""
    import uvicorn

    config = _config(
        ctx,
        schemas_dir=schemas_dir,
        templates_dir=templates_dir,
        mode=mode,
        context_k=context_k,
        rewriter=rewriter,
        endpoint=endpoint,
        host=host,
        port=port,
    )
    app = build_service_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


def build_service_app(config: RunConfig):
    """Construct the service app from a run configuration, validating
    that every catalog service has a template fragment."""
    from .catalog import load_schemas
    from .errors import MissingTemplate
    from .service import create_app

    schemas_dir = config.schemas_dir or (
        str(Path(config.corpus_dir) / "train") if config.corpus_dir else None
    )
    if schemas_dir is None:
        raise click.UsageError("serve requires --schemas or a corpus_dir")
    catalog = load_schemas(schemas_dir)
    registry = load_template_dir(_require(config, "templates_dir"))
    for schema in catalog:
        if registry.for_service(schema.service_name) is None:
            raise MissingTemplate(schema.service_name, "*", None)
    opts = EncoderOptions(
        context_k=config.context_k,
        include_service_prefix=config.include_service_prefix,
    )
    decode = DecodeConfig(
        beam_width=config.beam_width,
        length_penalty_alpha=config.length_penalty_alpha,
        max_output_tokens=config.max_output_tokens,
    )
    return create_app(
        catalog,
        registry,
        _build_rewriter(config),
        mode=EncodingMode.from_string(config.mode),
        opts=opts,
        decode=decode,
    )


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except RewriterError as e:
        click.echo(f"rewriter error: {e}", err=True)
        return 3
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except OSError as e:
        click.echo(f"io error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
