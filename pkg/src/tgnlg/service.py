"""Live NLG HTTP service: action payloads in, rewritten responses out.

POST /respond accepts `{service, actions[], context[]}` where each action
is `{act, slot?, values?}` exactly as in dialogue files, and `context` is
the conversation so far, oldest first, ending with the latest user
utterance. Callers thread their own prior responses into `context`; the
service itself is stateless. Every response carries the intermediate
template utterance and encoded input so slot fidelity can be audited on
live traffic.
"""

from __future__ import annotations

import time

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .actions import ActionFrame, decompose
from .catalog import Catalog
from .encoding import EncoderOptions, EncodingMode, NlgExample, encode
from .errors import (
    DataError,
    MissingTemplate,
    TgnlgError,
    TransportError,
    UnknownService,
    UnknownSlot,
)
from .rewriter import CopyRewriter, DecodeConfig, RemoteRewriter
from .templates import TemplateRegistry, render_frame


class RawAction(BaseModel):
    act: str
    slot: str | None = None
    values: list[str] = Field(default_factory=list)


class RespondRequest(BaseModel):
    service: str
    actions: list[RawAction] = Field(min_length=1)
    context: list[str] = Field(default_factory=list)


def _error_body(error: str, key: str | None, detail: str) -> dict:
    return {"error": error, "key": key, "detail": detail}


def create_app(
    catalog: Catalog,
    registry: TemplateRegistry,
    rewriter: CopyRewriter | RemoteRewriter,
    *,
    mode: EncodingMode = EncodingMode.TEMPLATE,
    opts: EncoderOptions = EncoderOptions(context_k=3),
    decode: DecodeConfig = DecodeConfig(),
) -> FastAPI:
    app = FastAPI(title="tgnlg", docs_url=None, redoc_url=None)

    def build_frame(req: RespondRequest) -> ActionFrame:
        if req.service not in catalog:
            raise UnknownService(req.service)
        schema = catalog[req.service]
        actions = []
        for raw in req.actions:
            act = raw.act.lower()
            if raw.slot is not None and schema.slot(raw.slot) is None:
                raise UnknownSlot(req.service, raw.slot)
            actions.extend(decompose(act, raw.slot, raw.values))
        return ActionFrame(service=req.service, actions=tuple(actions))

    @app.post("/respond")
    def respond(req: RespondRequest):
        started = time.perf_counter()
        try:
            frame = build_frame(req)
            schema = catalog[req.service]
            template_utterance = render_frame(frame, registry)
            example = NlgExample(
                example_id="live",
                frame=frame,
                reference="",
                context=tuple(req.context),
                service=req.service,
                domain=schema.domain,
                slot_values=tuple(
                    (a.slot, a.value, schema.slot(a.slot).is_boolean)
                    for a in frame.actions
                    if a.value is not None and a.slot is not None
                ),
            )
            encoded = encode(example, mode, registry, catalog, opts)
        except UnknownService as e:
            return JSONResponse(
                status_code=400,
                content=_error_body("unknown_service", e.service_name, str(e)),
            )
        except UnknownSlot as e:
            return JSONResponse(
                status_code=400, content=_error_body("unknown_slot", e.slot, str(e))
            )
        except MissingTemplate as e:
            key = e.act if e.slot is None else f"{e.act}({e.slot})"
            return JSONResponse(
                status_code=400, content=_error_body("missing_template", key, str(e))
            )
        except (DataError, ValueError) as e:
            return JSONResponse(
                status_code=400, content=_error_body("bad_request", None, str(e))
            )
        try:
            outputs = rewriter.rewrite([encoded], decode)
        except TgnlgError as e:
            return JSONResponse(
                status_code=502,
                content=_error_body("rewriter_unavailable", None, str(e)),
            )
        return {
            "response": outputs[0],
            "template_utterance": template_utterance,
            "encoded_input": encoded,
            "latency_ms": 1000.0 * (time.perf_counter() - started),
        }

    @app.get("/healthz")
    def healthz():
        rewriter_health: dict = {"model_tag": None, "healthy": False}
        status = "degraded"
        try:
            rewriter_health["model_tag"] = rewriter.health()
            rewriter_health["healthy"] = True
            status = "ok"
        except TgnlgError as e:
            rewriter_health["detail"] = str(e)
        return {
            "status": status,
            "model_tag": rewriter_health["model_tag"] or rewriter.model_tag,
            "rewriter": rewriter_health,
        }

    return app
