import json

import pytest
from fastapi.testclient import TestClient

from openfer.api.results_api import create_app


@pytest.fixture
def client(tmp_path):
    run = tmp_path / "desk"
    (run / "O5-2_r0").mkdir(parents=True)
    (run / "protocol_report.json").write_text(json.dumps({"task": "custom", "mean": {"auroc": 0.7}}))
    (run / "O5-2_r0" / "scores.json").write_text(json.dumps({"rows": [{"id": "v0", "label": 5}]}))
    (run / "O5-2_r0" / "score_distribution.png").write_bytes(b"\x89PNG\r\n\x1a\n")
    (run / "eval").mkdir()
    return TestClient(create_app(tmp_path))


def test_lists_runs(client):
    assert client.get("/runs").json() == ["desk"]


def test_report_and_scores(client):
    assert client.get("/runs/desk/report").json()["mean"]["auroc"] == 0.7
    assert client.get("/runs/desk/scores/O5-2_r0").json()["rows"][0]["id"] == "v0"
    resp = client.get("/runs/desk/plots/O5-2_r0")
    assert resp.status_code == 200 and resp.headers["content-type"] == "image/png"


@pytest.mark.parametrize("url", [
    "/runs/nope/report",
    "/runs/desk/scores/missing",
    "/runs/desk/scores/eval",
    "/runs/desk/plots/eval",
])
def test_missing_things_are_404(client, url):
    assert client.get(url).status_code == 404


def test_empty_runs_dir(tmp_path):
    assert TestClient(create_app(tmp_path / "absent")).get("/runs").json() == []
