"""Wire-protocol conformance suite for /rewrite servers.

Any server claiming to implement the rewrite protocol must pass these
checks unmodified. They verify only the protocol contract (shapes, batch
order/length, determinism, health), never output quality.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RewriterError
from .rewriter import DecodeConfig, RewriteRequest, remote_health, remote_rewrite


@dataclass(frozen=True)
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


def run_conformance(
    endpoint: str, *, timeout: float = 30.0
) -> list[ConformanceCheck]:
    checks: list[ConformanceCheck] = []

    def record(name: str, fn) -> None:
        try:
            detail = fn() or ""
            checks.append(ConformanceCheck(name, True, detail))
        except (RewriterError, AssertionError) as e:
            checks.append(ConformanceCheck(name, False, str(e)))

    def check_health():
        tag = remote_health(endpoint, timeout=timeout)
        assert tag, "healthz returned an empty model_tag"
        return f"model_tag={tag}"

    inputs = (
        "The humidity is around 28 percent.",
        "Where are you riding to?",
        "Your ride costs $23 dollars.",
    )

    def call(req: RewriteRequest):
        return remote_rewrite(req, endpoint, timeout=timeout, retries=0)

    def check_batch_shape():
        resp = call(RewriteRequest(inputs=inputs))
        assert len(resp.outputs) == len(inputs), (
            f"expected {len(inputs)} outputs, got {len(resp.outputs)}"
        )
        assert resp.model_tag, "response model_tag is empty"

    def check_determinism():
        req = RewriteRequest(inputs=inputs)
        first = call(req).outputs
        second = call(req).outputs
        assert first == second, "identical requests returned different outputs"

    def check_empty_batch():
        resp = call(RewriteRequest(inputs=()))
        assert resp.outputs == (), "empty batch must return empty outputs"

    def check_greedy_decode():
        req = RewriteRequest(inputs=inputs[:1], decode=DecodeConfig(beam_width=1))
        resp = call(req)
        assert len(resp.outputs) == 1, "beam_width=1 request not honored"

    record("healthz_model_tag", check_health)
    record("batch_shape", check_batch_shape)
    record("determinism", check_determinism)
    record("empty_batch", check_empty_batch)
    record("greedy_decode", check_greedy_decode)
    return checks


def assert_conformant(endpoint: str, *, timeout: float = 30.0) -> None:
    failures = [c for c in run_conformance(endpoint, timeout=timeout) if not c.passed]
    if failures:
        lines = "; ".join(f"{c.name}: {c.detail}" for c in failures)
        raise AssertionError(f"endpoint {endpoint} fails conformance: {lines}")
