import json
import threading

import numpy as np
import pytest
import requests

from ippsm import neural, service
from ippsm.corpus import Alphabet
from ippsm.ngram import NgramModel

TINY_START = {"a": 0.75, "b": 0.25}
TINY_TRANS = {"a": {"a": 0.9, "b": 0.1}, "b": {"a": 0.5, "b": 0.5}}


def tiny_model():
    return NgramModel.from_tables(TINY_START, TINY_TRANS, length=2)


def desk_model():
    alphabet = Alphabet.from_symbols("abcdefgh")
    cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=alphabet.n_total)
    params = neural.init_params(cfg, np.random.default_rng(0))
    return neural.NeuralModel(config=cfg, alphabet=alphabet, params=params)


@pytest.fixture(scope="module")
def served():
    est = desk_model()
    srv = service.make_server(est, "127.0.0.1", 0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base, est
    srv.shutdown()
    srv.server_close()
    thread.join(timeout=5)


class TestResponseBuilder:
    def test_substitutes_satisfy_strength_criterion(self):
        est = tiny_model()
        resp = service.build_score_response(est, "bb", seed=3)
        rows = est.local_conditionals("bb")
        for i, rec in enumerate(resp["chars"]):
            here = rows[i, est.alphabet.index[rec["character"]]]
            for sub in rec["substitutes"]:
                assert rows[i, est.alphabet.index[sub]] < here

    def test_one_record_per_character(self):
        resp = service.build_score_response(desk_model(), "abcdefgh", seed=1)
        assert len(resp["chars"]) == 8
        assert "".join(c["character"] for c in resp["chars"]) == "abcdefgh"

    def test_seed_pins_every_position(self):
        est = desk_model()
        a = service.build_score_response(est, "abcdef", seed=7)
        b = service.build_score_response(est, "abcdef", seed=7)
        assert a == b

    def test_unseeded_requests_vary(self):
        est = desk_model()
        first = service.build_score_response(est, "abcdef", k=2)
        assert any(
            service.build_score_response(est, "abcdef", k=2) != first for _ in range(5)
        )


class TestRoutes:
    def test_health(self, served):
        base, _ = served
        r = requests.get(f"{base}/health", timeout=5)
        assert r.status_code == 200
        assert r.text == "ok"
        assert r.headers["Content-Type"].startswith("text/plain")

    def test_unknown_routes_404(self, served):
        base, _ = served
        assert requests.get(f"{base}/nope", timeout=5).status_code == 404
        assert requests.post(f"{base}/health", data="{}", timeout=5).status_code == 404

    def test_score_roundtrip(self, served):
        base, est = served
        r = requests.post(f"{base}/score", json={"password": "abcdef", "seed": 5}, timeout=5)
        assert r.status_code == 200
        assert r.headers["Content-Type"].startswith("application/json")
        resp = r.json()
        assert resp["schema_version"] == service.SCHEMA_VERSION
        assert resp["password"] == "abcdef"
        assert resp["model_id"] == est.model_id()
        assert resp["score"] < 0
        assert len(resp["chars"]) == 6
        for c in resp["chars"]:
            assert 0 <= c["bucket"] <= 4
            assert 0 < c["q"] < 1
            assert len(c["substitutes"]) <= service.DEFAULT_K

    def test_k_field(self, served):
        base, _ = served
        r = requests.post(f"{base}/score", json={"password": "abcdef", "k": 1, "seed": 5}, timeout=5)
        assert all(len(c["substitutes"]) <= 1 for c in r.json()["chars"])

    def test_fixed_seed_identical_suggestions(self, served):
        base, _ = served
        bodies = [
            requests.post(f"{base}/score", json={"password": "abcdef", "seed": 11}, timeout=5).text
            for _ in range(2)
        ]
        assert bodies[0] == bodies[1]


class TestRejections:
    def test_malformed_json_400(self, served):
        base, _ = served
        r = requests.post(f"{base}/score", data="{not json", timeout=5)
        assert r.status_code == 400
        assert "error" in r.json()

    @pytest.mark.parametrize(
        "body",
        [
            {},
            {"password": 3},
            {"password": "abc", "k": 0},
            {"password": "abc", "k": "two"},
            {"password": "abc", "k": True},
            {"password": "abc", "seed": -1},
            [1, 2, 3],
        ],
    )
    def test_bad_fields_400(self, served, body):
        base, _ = served
        assert requests.post(f"{base}/score", json=body, timeout=5).status_code == 400

    def test_empty_password_422(self, served):
        base, _ = served
        assert requests.post(f"{base}/score", json={"password": ""}, timeout=5).status_code == 422

    def test_over_length_422_names_limit(self, served):
        base, _ = served
        r = requests.post(f"{base}/score", json={"password": "a" * 9}, timeout=5)
        assert r.status_code == 422
        assert "8" in r.json()["error"]

    def test_alphabet_violation_422_names_character(self, served):
        base, _ = served
        r = requests.post(f"{base}/score", json={"password": "abz"}, timeout=5)
        assert r.status_code == 422
        assert "'z'" in r.json()["error"]


class TestConcurrency:
    def test_parallel_requests_all_answered(self, served):
        base, _ = served
        results = [None] * 16

        def hit(i):
            pw = "abcdef"[: 2 + (i % 5)]
            r = requests.post(f"{base}/score", json={"password": pw, "seed": i}, timeout=10)
            results[i] = (r.status_code, r.json()["password"], pw)

        threads = [threading.Thread(target=hit, args=(i,)) for i in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=15)
        for code, echoed, expected in results:
            assert code == 200 and echoed == expected
