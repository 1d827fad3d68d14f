"""Test the HTTP API"""

import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from fastapi.testclient import TestClient

from api.main import app

client = TestClient(app)

SEPARABLE = {"positives": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "negatives": [[3.0, 3.0], [4.0, 3.0], [3.0, 4.0]]}
STACKED = {"positives": [[0.0], [0.0]], "negatives": [[0.0], [0.0]]}


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_bound_endpoint():
    response = client.post("/bound", json={"n_pos": 50, "n_neg": 50, "alpha_pos": 10, "alpha_neg": 10})
    assert response.status_code == 200
    body = response.json()
    assert body["exact"] == "3/5"
    assert body["bound"] == 0.6
    assert body["resilient_region"] is True


def test_bound_rejects_budget_beyond_counts():
    response = client.post("/bound", json={"n_pos": 5, "n_neg": 5, "alpha_pos": 6})
    assert response.status_code == 400


def test_regions_endpoint():
    response = client.post("/regions", json={"n_pos": 75, "n_neg": 25, "alpha_pos": 38, "alpha_neg": 0})
    assert response.status_code == 200
    assert response.json() == {
        "convex": True, "zero_one": True, "majority_zero_one": True, "any_linear": True,
    }
    response = client.post("/regions", json={"n_pos": 75, "n_neg": 25, "alpha_pos": 0, "alpha_neg": 0})
    assert not any(response.json().values())


def test_train_endpoint():
    response = client.post("/train", json={"trainer": "zero_one", "data": SEPARABLE})
    assert response.status_code == 200
    body = response.json()
    assert body["feasible"] is True
    assert body["solver_objective"] == 0.0
    assert len(body["weights"]) == 3


def test_train_rejects_unknown_trainer():
    response = client.post("/train", json={"trainer": "perceptron", "data": SEPARABLE})
    assert response.status_code == 422


def test_train_infeasible_majority():
    response = client.post("/train", json={"trainer": "majority", "data": STACKED})
    assert response.status_code == 422


def test_evaluate_endpoint():
    response = client.post("/evaluate", json={"trainer": "hinge", "clean": SEPARABLE, "tampered": SEPARABLE})
    assert response.status_code == 200
    assert response.json()["resilience"] == 0.0


def test_evaluate_rejects_tampering_beyond_budget():
    tampered = {"positives": [[9.0, 9.0]] + SEPARABLE["positives"][1:], "negatives": SEPARABLE["negatives"]}
    response = client.post("/evaluate", json={"trainer": "hinge", "clean": SEPARABLE, "tampered": tampered})
    assert response.status_code == 400
    response = client.post("/evaluate", json={
        "trainer": "hinge", "clean": SEPARABLE, "tampered": tampered, "alpha_pos": 1,
    })
    assert response.status_code == 200
