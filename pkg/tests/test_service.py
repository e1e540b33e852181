from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from tgnlg.catalog import load_schemas
from tgnlg.encoding import EncoderOptions, EncodingMode
from tgnlg.rewriter import CopyRewriter, RemoteRewriter
from tgnlg.service import create_app
from tgnlg.templates import load_template_dir

from test_rewriter import closed_port_endpoint, rewrite_server


@pytest.fixture()
def catalog(small_corpus):
    return load_schemas(small_corpus / "train")


@pytest.fixture()
def registry(template_dir):
    return load_template_dir(template_dir)


def client_for(catalog, registry, rewriter, **kwargs):
    app = create_app(catalog, registry, rewriter, **kwargs)
    return TestClient(app)


RIDE_ACTIONS = [
    {"act": "confirm", "slot": "dest", "values": ["Berkeley"]},
    {"act": "inform", "slot": "fare", "values": ["$23"]},
]

RIDE_TEMPLATE_UTTERANCE = (
    "Please confirm the following details: You are going to Berkeley. "
    "Your ride costs $23 dollars."
)


class TestRespond:
    def test_copy_rewriter_returns_template_rendering(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post(
            "/respond", json={"service": "RideSharing_1", "actions": RIDE_ACTIONS}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["response"] == RIDE_TEMPLATE_UTTERANCE
        assert body["template_utterance"] == RIDE_TEMPLATE_UTTERANCE
        assert body["encoded_input"] == RIDE_TEMPLATE_UTTERANCE
        assert body["latency_ms"] >= 0

    def test_context_threads_into_encoding_not_template(self, catalog, registry):
        client = client_for(
            catalog, registry, CopyRewriter(), opts=EncoderOptions(context_k=2)
        )
        resp = client.post(
            "/respond",
            json={
                "service": "RideSharing_1",
                "actions": RIDE_ACTIONS,
                "context": ["Book me a cab", "Where to?", "Berkeley"],
            },
        )
        body = resp.json()
        assert body["template_utterance"] == RIDE_TEMPLATE_UTTERANCE
        assert body["encoded_input"].startswith("system: Where to? user: Berkeley ")
        assert body["response"] == body["encoded_input"]

    def test_multi_value_action_decomposed(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post(
            "/respond",
            json={
                "service": "RideSharing_1",
                "actions": [{"act": "INFORM", "slot": "seats", "values": ["2", "4"]}],
            },
        )
        assert resp.status_code == 200
        assert (
            resp.json()["template_utterance"]
            == "The cab is for 2 riders. The cab is for 4 riders."
        )

    def test_unknown_service_400(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post(
            "/respond", json={"service": "Banks_1", "actions": [{"act": "goodbye"}]}
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "unknown_service"
        assert resp.json()["key"] == "Banks_1"

    def test_unknown_slot_400_names_key(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post(
            "/respond",
            json={
                "service": "RideSharing_1",
                "actions": [{"act": "inform", "slot": "color", "values": ["red"]}],
            },
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "unknown_slot"
        assert resp.json()["key"] == "color"

    def test_missing_template_400_names_key(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post(
            "/respond",
            json={
                "service": "RideSharing_1",
                "actions": [{"act": "offer", "slot": "dest", "values": ["Oakland"]}],
            },
        )
        assert resp.status_code == 400
        assert resp.json()["error"] == "missing_template"
        assert resp.json()["key"] == "offer(dest)"

    def test_rewriter_down_502(self, catalog, registry):
        rewriter = RemoteRewriter(
            closed_port_endpoint(), timeout=0.5, retries=0, backoff=0.01
        )
        client = client_for(catalog, registry, rewriter)
        resp = client.post(
            "/respond", json={"service": "RideSharing_1", "actions": RIDE_ACTIONS}
        )
        assert resp.status_code == 502
        assert resp.json()["error"] == "rewriter_unavailable"

    def test_remote_rewriter_round_trip(self, catalog, registry):
        with rewrite_server("echo", model_tag="m-1") as (_server, url):
            client = client_for(catalog, registry, RemoteRewriter(url))
            resp = client.post(
                "/respond", json={"service": "RideSharing_1", "actions": RIDE_ACTIONS}
            )
            assert resp.status_code == 200
            assert resp.json()["response"] == RIDE_TEMPLATE_UTTERANCE

    def test_validation_error_from_empty_actions(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        resp = client.post("/respond", json={"service": "RideSharing_1", "actions": []})
        assert resp.status_code == 422  # schema-level rejection


class TestHealthz:
    def test_ok_with_copy(self, catalog, registry):
        client = client_for(catalog, registry, CopyRewriter())
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["model_tag"] == "copy"
        assert body["rewriter"]["healthy"] is True

    def test_degraded_when_rewriter_down(self, catalog, registry):
        rewriter = RemoteRewriter(closed_port_endpoint(), timeout=0.5, retries=0)
        client = client_for(catalog, registry, rewriter)
        body = client.get("/healthz").json()
        assert body["status"] == "degraded"
        assert body["rewriter"]["healthy"] is False

    def test_ok_with_remote(self, catalog, registry):
        with rewrite_server("echo", model_tag="m-2") as (_server, url):
            client = client_for(catalog, registry, RemoteRewriter(url))
            body = client.get("/healthz").json()
            assert body["status"] == "ok"
            assert body["model_tag"] == "m-2"
