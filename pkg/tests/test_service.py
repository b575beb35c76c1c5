import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from d2eal.harness import NumericalFailure
from d2eal.service import app, create_app

SMALL_CONFIG = {
    "n": 4,
    "horizon": 80,
    "gamma": {"kind": "constant", "values": [0.05, 0.2, 0.4, 0.8]},
    "seed": 5,
    "num_runs": 3,
}


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


class TestMeta:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"

    def test_strategies(self, client):
        r = client.get("/strategies")
        assert r.status_code == 200
        assert "d2eal" in r.json()["strategies"]
        assert len(r.json()["strategies"]) == 9

    def test_fresh_app_factory(self):
        with TestClient(create_app()) as c:
            assert c.get("/health").status_code == 200


class TestRunEndpoint:
    def test_run_returns_artifacts(self, client):
        r = client.post("/run", json={"config": SMALL_CONFIG, "seed": 9})
        assert r.status_code == 200
        body = r.json()
        assert body["summary"]["strategy"] == "d2eal"
        assert body["summary"]["seed"] == 9
        lines = body["steps_csv"].strip().split("\n")
        assert len(lines) == 1 + SMALL_CONFIG["horizon"] * SMALL_CONFIG["n"]
        assert body["linkdrops_csv"].startswith("t,dropped")
        assert body["linkdrop_hist_csv"].startswith("dropped,steps,percent")
        assert body["audit"]["regret"]["horizon"] == SMALL_CONFIG["horizon"]
        assert body["audit"]["convergence"] is not None

    def test_run_deterministic(self, client):
        a = client.post("/run", json={"config": SMALL_CONFIG}).json()
        b = client.post("/run", json={"config": SMALL_CONFIG}).json()
        assert a["steps_csv"] == b["steps_csv"]

    def test_unknown_config_key_rejected(self, client):
        r = client.post("/run", json={"config": {"n": 3, "bogus": 1}})
        assert r.status_code == 422

    def test_semantic_config_error_maps_to_400(self, client):
        r = client.post("/run", json={"config": {"n": 4, "gamma": {"kind": "table"}}})
        assert r.status_code == 400

    def test_numerical_failure_maps_to_500(self, client, monkeypatch):
        import d2eal.service as service_mod

        def boom(config, seed=None):
            raise NumericalFailure(13)

        monkeypatch.setattr(service_mod, "execute_run", boom)
        r = client.post("/run", json={"config": SMALL_CONFIG})
        assert r.status_code == 500
        assert r.json()["detail"]["step"] == 13

    def test_baseline_run_has_no_convergence_audit(self, client):
        cfg = dict(SMALL_CONFIG, fusion="kf")
        r = client.post("/run", json={"config": cfg})
        assert r.status_code == 200
        assert r.json()["audit"]["convergence"] is None


class TestCampaignEndpoints:
    def test_montecarlo(self, client):
        r = client.post("/montecarlo", json={"config": SMALL_CONFIG, "runs": 3})
        assert r.status_code == 200
        body = r.json()
        assert body["summary"]["runs"] == 3
        assert body["summary"]["strategies"] == ["d2eal"]
        assert body["curves_csv"].startswith("strategy,t,total_mean,total_std")

    def test_compare(self, client):
        r = client.post(
            "/compare",
            json={"config": SMALL_CONFIG, "runs": 2, "strategies": ["d2eal", "nocomm", "kf"]},
        )
        assert r.status_code == 200
        body = r.json()
        assert set(body["summary"]["totals"]) == {"d2eal", "nocomm", "kf"}
        assert body["comparison_csv"].count("\n") == 4  # header + 3 strategies

    def test_compare_unknown_strategy(self, client):
        r = client.post("/compare", json={"config": SMALL_CONFIG, "strategies": ["psychic"]})
        assert r.status_code == 400

    def test_sweep(self, client):
        r = client.post(
            "/sweep",
            json={
                "config": dict(SMALL_CONFIG, horizon=40),
                "n_values": [2, 3],
                "strategies": ["nocomm", "d2eal"],
                "runs": 2,
            },
        )
        assert r.status_code == 200
        body = r.json()
        assert body["n_values"] == [2, 3]
        assert body["reliability_cost"] == [0.5, 1.0 / 3.0]
        assert len(body["per_robot_avg"]["d2eal"]) == 2

    def test_sweep_rejects_small_n(self, client):
        r = client.post("/sweep", json={"config": SMALL_CONFIG, "n_values": [1]})
        assert r.status_code == 400

    def test_audit_endpoint(self, client):
        r = client.post("/audit", json={"config": SMALL_CONFIG, "seed": 2})
        assert r.status_code == 200
        body = r.json()
        assert len(body["regret"]["robots"]) == SMALL_CONFIG["n"]
        for robot in body["regret"]["robots"]:
            assert isinstance(robot["individual_holds"], bool)
