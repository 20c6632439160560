"""
Tests for the HTTP API
"""

import pytest
from fastapi.testclient import TestClient

from api.main import app
from core.models import ValuePolicy
from core.services import AnalysisService
from tests.programs import DEEP_SOURCE, IDENTITY_SOURCE, NESTED_SOURCE, WORKED_SOURCE

client = TestClient(app)


class TestRoot:
    def test_root(self):
        response = client.get("/")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ready"
        assert body["kont_policies"] == ["naive", "naive-1cfa", "aac", "p4f"]
        assert body["corpus_size"] == 11

    def test_health(self):
        body = client.get("/health").json()
        assert body["status"] == "healthy"
        assert "id-flow" in body["corpus_programs"]


class TestAnalysis:
    def test_analyze(self):
        response = client.post("/analysis", json={
            "source": WORKED_SOURCE, "value_policy": "1cfa", "kont_policy": "p4f",
        })
        assert response.status_code == 200
        body = response.json()
        assert body["report"]["flows"]["z"] == {"(z,4)": ["#f"]}
        assert body["precision"] is None

    def test_precision_check(self):
        response = client.post("/analysis", json={
            "source": WORKED_SOURCE, "value_policy": "1cfa", "kont_policy": "naive", "check_precision": True,
        })
        assert response.status_code == 200
        precision = response.json()["precision"]
        assert precision["store_violations"]
        assert precision["oracle_complete"]

    @pytest.mark.parametrize("source", ["(let ([x #t]) x", "(f #t)", "((lambda (f) (f (f #t))) (lambda (x) x))"])
    def test_bad_programs(self, source):
        assert client.post("/analysis", json={"source": source}).status_code == 400

    def test_unknown_policy(self):
        response = client.post("/analysis", json={"source": WORKED_SOURCE, "kont_policy": "2cfa"})
        assert response.status_code == 422

    def test_incomplete_oracle(self):
        response = client.post("/analysis", json={
            "source": DEEP_SOURCE, "check_precision": True, "oracle_depth": 3,
        })
        assert response.status_code == 422
        assert "stack bound" in response.json()["detail"]


class TestCorpus:
    def test_list(self):
        body = client.get("/corpus").json()
        assert body["total"] == 11
        assert all("source" not in p for p in body["programs"])
        assert body["programs"][0]["name"] == "id-flow"

    def test_report(self):
        response = client.get("/corpus/id-flow/report", params={"value_policy": "1cfa", "kont_policy": "p4f"})
        assert response.status_code == 200
        assert response.json()["flows"]["y"] == {"(y,4)": ["#t"]}

    def test_unknown_program(self):
        assert client.get("/corpus/nope/report").status_code == 404

    def test_matrix(self):
        response = client.post("/corpus/matrix", json={
            "programs": ["id-flow"], "value_policies": ["mono"], "kont_policies": ["aac", "p4f"],
        })
        assert response.status_code == 200
        (row,) = response.json()["rows"]
        assert len(row["cells"]) == 2
        assert row["precision_equal_aac_p4f"] == {"mono": True}

    def test_matrix_unknown_program(self):
        response = client.post("/corpus/matrix", json={"programs": ["nope"]})
        assert response.status_code == 404

    @pytest.mark.slow
    def test_table(self):
        response = client.get("/corpus/table")
        assert response.status_code == 200
        assert "<table>" in response.text
        assert "id-flow" in response.text


class TestAnalysisService:
    def test_oracle_cache_is_bounded(self):
        service = AnalysisService(oracle_cache_size=2)
        for text in (WORKED_SOURCE, IDENTITY_SOURCE, NESTED_SOURCE):
            service.oracle(service.parse(text), ValuePolicy.MONO)
        info = service.oracle_cache_info()
        assert info.maxsize == 2
        assert info.currsize <= 2
        service.oracle(service.parse(NESTED_SOURCE), ValuePolicy.MONO)
        assert service.oracle_cache_info().hits == info.hits + 1

    def test_report_carries_diagnostics(self):
        response = client.post("/analysis", json={"source": "(let ([a (#t #f)]) a)"})
        assert response.status_code == 200
        assert response.json()["report"]["diagnostics"] == ["#t is not callable at 0"]
