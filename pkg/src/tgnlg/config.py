"""Run configuration: one JSON file, flag overrides, env for endpoints."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ParseError
from .serialization import config_hash, read_json

ENDPOINT_ENV = "TGNLG_ENDPOINT"


@dataclass
class RunConfig:
    corpus_dir: str | None = None
    schemas_dir: str | None = None
    templates_dir: str | None = None
    splits_dir: str | None = None
    output_dir: str | None = None
    mode: str = "template"
    context_k: int = 0
    k: int | None = None
    seed: int = 0
    split_context_k: int = 7
    include_service_prefix: bool = False
    rewriter: str = "copy"
    endpoint: str | None = None
    timeout: float = 30.0
    retries: int = 2
    beam_width: int = 4
    length_penalty_alpha: float = 0.6
    max_output_tokens: int = 128
    host: str = "127.0.0.1"
    port: int = 8080

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def load_run_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then config-file values, then explicit flag overrides.

    The rewriter endpoint may also come from the environment
    (TGNLG_ENDPOINT); explicit values win over it.
    """
    known = {f.name for f in fields(RunConfig)}
    config = RunConfig()
    if path is not None:
        data = read_json(path)
        if not isinstance(data, dict):
            raise ParseError("config file must hold a JSON object", path=str(path))
        unknown = set(data) - known
        if unknown:
            raise ParseError(
                f"unknown config keys: {', '.join(sorted(unknown))}", path=str(path)
            )
        for key, value in data.items():
            setattr(config, key, value)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in known:
                raise ValueError(f"unknown config override {key!r}")
            setattr(config, key, value)
    if config.endpoint is None:
        config.endpoint = os.environ.get(ENDPOINT_ENV)
    return config
