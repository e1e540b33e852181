"""Rewriting stage: identity copy baseline and the remote wire-protocol client.

Wire protocol (normative field names, JSON over HTTP):

    POST {endpoint}/rewrite
      request  {"inputs": [...], "decode": {"beam_width": 4,
                "length_penalty_alpha": 0.6, "max_output_tokens": 128},
                "model_tag": "..."}
      response {"outputs": [...], "model_tag": "...", "latency_ms": 12.3}

    GET {endpoint}/healthz -> {"model_tag": "..."}

Responses must contain exactly one output per input, in order. Batch
semantics are whole-or-nothing: a run either gets the full batch back or
fails loudly; partial results are never surfaced.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import requests

from .errors import ProtocolError, TransportError


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 4
    length_penalty_alpha: float = 0.6
    max_output_tokens: int = 128

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")

    def to_wire(self) -> dict:
        return {
            "beam_width": self.beam_width,
            "length_penalty_alpha": self.length_penalty_alpha,
            "max_output_tokens": self.max_output_tokens,
        }

    @classmethod
    def from_wire(cls, obj: Mapping) -> DecodeConfig:
        return cls(
            beam_width=int(obj.get("beam_width", 4)),
            length_penalty_alpha=float(obj.get("length_penalty_alpha", 0.6)),
            max_output_tokens=int(obj.get("max_output_tokens", 128)),
        )


@dataclass(frozen=True)
class RewriteRequest:
    inputs: tuple[str, ...]
    decode: DecodeConfig = DecodeConfig()
    model_tag: str = ""

    def to_wire(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "decode": self.decode.to_wire(),
            "model_tag": self.model_tag,
        }


@dataclass(frozen=True)
class RewriteResponse:
    outputs: tuple[str, ...]
    model_tag: str
    latency_ms: float

    @classmethod
    def from_wire(cls, obj: Mapping, *, n_inputs: int) -> RewriteResponse:
        outputs = obj.get("outputs")
        if not isinstance(outputs, list) or not all(
            isinstance(o, str) for o in outputs
        ):
            raise ProtocolError("response lacks a string list `outputs`")
        if len(outputs) != n_inputs:
            raise ProtocolError(
                f"expected {n_inputs} outputs, got {len(outputs)}"
            )
        model_tag = obj.get("model_tag")
        if not isinstance(model_tag, str):
            raise ProtocolError("response lacks a string `model_tag`")
        return cls(
            outputs=tuple(outputs),
            model_tag=model_tag,
            latency_ms=float(obj.get("latency_ms", 0.0)),
        )


def copy_rewrite(inputs: Sequence[str]) -> list[str]:
    """Identity rewrite: the encoded input is the output text."""
    return list(inputs)


class CopyRewriter:
    """The trivial baseline rewriter; always healthy."""

    model_tag = "copy"

    def rewrite(self, inputs: Sequence[str], decode: DecodeConfig | None = None) -> list[str]:
        return copy_rewrite(inputs)

    def health(self) -> str:
        return self.model_tag


def remote_rewrite(
    req: RewriteRequest,
    endpoint: str,
    *,
    timeout: float = 30.0,
    retries: int = 2,
    backoff: float = 0.25,
    session: requests.Session | None = None,
) -> RewriteResponse:
    """POST a batch to `{endpoint}/rewrite` with retries on transport errors.

    Transport errors (connection failures, timeouts, HTTP 5xx) are retried
    with exponential backoff, `retries + 1` attempts in total. Anything the
    server answers with a well-formed 2xx body that violates the protocol
    (wrong output count, malformed JSON, missing fields) raises
    ProtocolError immediately; 4xx responses do the same.
    """
    url = endpoint.rstrip("/") + "/rewrite"
    post = (session or requests).post
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        if attempt > 0:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            resp = post(url, json=req.to_wire(), timeout=timeout)
        except requests.RequestException as e:
            last_error = e
            continue
        if resp.status_code >= 500:
            last_error = TransportError(
                f"{url} answered HTTP {resp.status_code}"
            )
            continue
        if resp.status_code >= 400:
            raise ProtocolError(f"{url} rejected the request: HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as e:
            raise ProtocolError(f"{url} returned a non-JSON body") from e
        if not isinstance(body, Mapping):
            raise ProtocolError(f"{url} returned a non-object body")
        return RewriteResponse.from_wire(body, n_inputs=len(req.inputs))
    raise TransportError(
        f"{url} unreachable after {retries + 1} attempts: {last_error}"
    )


def remote_health(
    endpoint: str, *, timeout: float = 10.0, session: requests.Session | None = None
) -> str:
    """GET /healthz and return the served model_tag."""
    url = endpoint.rstrip("/") + "/healthz"
    get = (session or requests).get
    try:
        resp = get(url, timeout=timeout)
    except requests.RequestException as e:
        raise TransportError(f"{url} unreachable: {e}") from e
    if resp.status_code != 200:
        raise TransportError(f"{url} answered HTTP {resp.status_code}")
    try:
        tag = resp.json().get("model_tag")
    except ValueError as e:
        raise ProtocolError(f"{url} returned a non-JSON body") from e
    if not isinstance(tag, str):
        raise ProtocolError(f"{url} body lacks a string `model_tag`")
    return tag


class RemoteRewriter:
    """Client for a /rewrite endpoint, bounding in-flight batches."""

    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.25,
        max_in_flight: int = 4,
        model_tag: str = "",
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.model_tag = model_tag
        self.session = session
        self._gate = threading.BoundedSemaphore(max_in_flight)

    def rewrite_batch(
        self, inputs: Sequence[str], decode: DecodeConfig | None = None
    ) -> RewriteResponse:
        req = RewriteRequest(
            inputs=tuple(inputs),
            decode=decode or DecodeConfig(),
            model_tag=self.model_tag,
        )
        with self._gate:
            return remote_rewrite(
                req,
                self.endpoint,
                timeout=self.timeout,
                retries=self.retries,
                backoff=self.backoff,
                session=self.session,
            )

    def rewrite(
        self, inputs: Sequence[str], decode: DecodeConfig | None = None
    ) -> list[str]:
        return list(self.rewrite_batch(inputs, decode).outputs)

    def health(self) -> str:
        return remote_health(self.endpoint, timeout=self.timeout, session=self.session)
