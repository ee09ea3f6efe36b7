#!/usr/bin/env python3

import sys
import os

# Adiciona o diretório do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import httpx
import pytest

from app.core.config import settings
from app.main import app


def client() -> httpx.AsyncClient:
    return httpx.AsyncClient(transport=httpx.ASGITransport(app=app), base_url="http://test")


@pytest.mark.asyncio
async def test_root_and_health():
    async with client() as http:
        root = await http.get("/")
        health = await http.get("/health")
    assert root.status_code == 200
    assert root.json()["service"] == "SkyEdge Swarm"
    assert health.json()["status"] == "healthy"


@pytest.mark.asyncio
async def test_config_defaults_lists_profile_values():
    async with client() as http:
        response = await http.get("/api/config/defaults", params={"profile": "desk"})
    assert response.status_code == 200
    body = response.json()
    keys = {entry["key"]: entry for entry in body["keys"]}
    assert keys["M"]["value"] == 4
    assert keys["M"]["default"] == 10
    assert keys["R_cov"]["section"] == "environment"
    assert body["config"]["environment"]["L"] == 150.0


@pytest.mark.asyncio
async def test_paper_profile_is_served():
    async with client() as http:
        response = await http.get("/api/config/defaults", params={"profile": "paper"})
    assert response.status_code == 200
    environment = response.json()["config"]["environment"]
    assert (environment["M"], environment["N"], environment["T"], environment["L"]) == (10, 50, 80, 250.0)


@pytest.mark.asyncio
async def test_unknown_profile_is_rejected():
    async with client() as http:
        response = await http.get("/api/config/defaults", params={"profile": "nope"})
    assert response.status_code == 422


@pytest.mark.asyncio
async def test_trace_endpoint_returns_records():
    async with client() as http:
        response = await http.post("/api/runs/trace", json={"overrides": {"T": 3}, "greedy": True})
    assert response.status_code == 200
    body = response.json()
    assert 1 <= body["slots"] <= 3
    assert len(body["records"]) == body["slots"] + 1
    assert body["records"][0]["slot"] == -1
    assert body["tasks_processed"] == sum(r["processed"] for r in body["records"][1:])


@pytest.mark.asyncio
async def test_invalid_override_maps_to_422():
    async with client() as http:
        response = await http.post("/api/runs/trace", json={"overrides": {"R_cov": -1}})
    assert response.status_code == 422
    assert response.json()["error"] == "ConfigurationError"


@pytest.mark.asyncio
async def test_evaluate_endpoint_summarizes_episodes():
    async with client() as http:
        response = await http.post("/api/runs/evaluate", json={"overrides": {"T": 2}, "episodes": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["episodes"] == 1
    assert "task_pct_mean" in body


@pytest.mark.asyncio
async def test_missing_checkpoint_maps_to_422(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "output_dir", str(tmp_path))
    async with client() as http:
        response = await http.post(
            "/api/runs/evaluate",
            json={"checkpoint": "missing.ckpt", "overrides": {"T": 2}, "episodes": 1}
        )
    assert response.status_code == 422
    assert response.json()["error"] == "CheckpointError"


@pytest.mark.asyncio
async def test_checkpoint_outside_output_dir_is_refused(tmp_path, monkeypatch):
    outside = tmp_path / "elsewhere.ckpt"
    outside.write_bytes(b"")
    monkeypatch.setattr(settings, "output_dir", str(tmp_path / "runs"))
    async with client() as http:
        for endpoint, body in (
            ("/api/runs/evaluate", {"checkpoint": str(outside), "episodes": 1}),
            ("/api/runs/evaluate", {"checkpoint": "../elsewhere.ckpt", "episodes": 1}),
            ("/api/runs/trace", {"checkpoint": str(outside), "overrides": {"T": 2}}),
        ):
            response = await http.post(endpoint, json=body)
            assert response.status_code == 422
            assert response.json()["error"] == "CheckpointError"
            assert "fora do diretório" in response.json()["detail"]
