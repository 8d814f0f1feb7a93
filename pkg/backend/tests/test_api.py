# /backend/tests/test_api.py

import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from app.main import app

PREFIX = settings.API_V1_PREFIX


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["services"] == {"scenarios": 6, "clock_states": 39}


def test_list_scenarios(client):
    response = client.get(f"{PREFIX}/scenarios")
    assert response.status_code == 200
    kinds = [item["kind"] for item in response.json()]
    assert kinds == ["mapping", "hop-algorithm", "optimization", "latency", "throughput", "connection"]


def test_run_latency_scenario(client, out_dir):
    response = client.post(f"{PREFIX}/scenarios/run", json={"scenario": "latency", "name": "api"}, params={"seed": 3})
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "latency"
    assert body["seed"] == 3
    assert body["outputs"] == []
    assert body["summary"]["plm_ms"] == 2240
    assert not out_dir.exists()


def test_run_connection_scenario(client):
    payload = {
        "scenario": "connection",
        "conn_params": {"channel_map": {"used": [15, 30]}},
        "n_events": 6,
        "acceptance": {"connected": True, "oracle_match": True},
    }
    response = client.post(f"{PREFIX}/scenarios/run", json=payload)
    assert response.status_code == 200
    checks = {check["name"]: check["passed"] for check in response.json()["checks"]}
    assert checks == {"connected": True, "oracle_match": True, "zero_off_channel": True}


def test_unknown_scenario_is_404(client):
    response = client.post(f"{PREFIX}/scenarios/run", json={"scenario": "teleport"})
    assert response.status_code == 404


@pytest.mark.parametrize(
    "payload",
    [
        {"scenario": "throughput", "channels_used": 99},
        {"scenario": "latency", "profiles": ["no_such_profile"]},
        {"scenario": "hop-algorithm", "used": {"used": [36, 36]}},
    ],
    ids=["rango", "fixture", "mapa"],
)
def test_invalid_config_is_422(client, payload):
    response = client.post(f"{PREFIX}/scenarios/run", json=payload)
    assert response.status_code == 422
