import asyncio

import httpx
import pytest

from qrsim.meshfile import loads_mesh
from qrsim.service import create_app


@pytest.fixture(scope="module")
def client():
    transport = httpx.ASGITransport(app=create_app())

    class Client:
        def request(self, method, path, **kw):
            async def go():
                async with httpx.AsyncClient(transport=transport,
                                             base_url="http://test") as c:
                    return await c.request(method, path, **kw)
            return asyncio.run(go())

        def get(self, path, **kw):
            return self.request("GET", path, **kw)

        def post(self, path, **kw):
            return self.request("POST", path, **kw)

    return Client()


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_catalogue_endpoint(client):
    r = client.get("/catalogue")
    assert r.status_code == 200
    scenarios = r.json()["scenarios"]
    assert len(scenarios) == 18
    byname = {s["name"]: s for s in scenarios}
    assert byname["baseline"]["regions"] == []
    alt = byname["lateral_altcv_transmural"]
    assert alt["cv_reduction"] == [0.05, 0.25]
    assert byname["septal_transmural"]["territory_segments"] == [2, 3, 8, 9, 14]


def test_mesh_generate_endpoint(client):
    r = client.post("/mesh/generate", json={"resolution_cm": 0.5})
    assert r.status_code == 200
    mesh = loads_mesh(r.text)
    assert mesh.num_nodes > 500


def test_mesh_generate_invalid(client):
    r = client.post("/mesh/generate", json={"resolution_cm": -0.5})
    assert r.status_code == 400
    body = r.json()
    assert body["error"]["type"] == "GeometryError"


def test_simulate_endpoint(client, tmp_path):
    req = {"config": {"mesh": {"resolution_cm": 0.45}},
           "scenarios": ["inferior_transmural"],
           "output_dir": str(tmp_path / "svc_out"),
           "jobs": 1}
    r = client.post("/simulate", json=req, timeout=600)
    assert r.status_code == 200
    body = r.json()
    names = [e["name"] for e in body["entries"]]
    assert names == ["baseline", "inferior_transmural"]
    assert body["entries"][1]["dtw"]["dtw_avg"] > 0
    assert (tmp_path / "svc_out" / "dissimilarity.csv").exists()
    assert "qrs_inferior_transmural.csv" in body["files"]


def test_simulate_unknown_scenario(client, tmp_path):
    req = {"scenarios": ["narnia"], "output_dir": str(tmp_path / "x")}
    r = client.post("/simulate", json=req)
    assert r.status_code == 400
    assert "narnia" in r.json()["error"]["message"]
