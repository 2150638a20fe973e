import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from clonesift.embed import (
    EmbedderSpec,
    EmbeddingRecord,
    MockEmbedder,
    RemoteEmbedder,
    load_vectors,
    store_vectors,
)
from clonesift.errors import (
    DimensionMismatch,
    ServiceError,
    TransportFailure,
    ZeroVector,
)

from conftest import RENAMED_FN, TWO_FUNCTIONS_C, UNRELATED_FN, make_unit


def units_from(texts):
    return [
        make_unit(path=f"u{i}.c", start=1, end=1 + t.count("\n"), text=t)
        for i, t in enumerate(texts)
    ]


def cosine(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestMockEmbedder:
    def test_deterministic(self):
        units = units_from([TWO_FUNCTIONS_C])
        emb = MockEmbedder(dimension=64, seed=3)
        v1 = emb.transform(units)[0].as_array()
        v2 = emb.transform(units)[0].as_array()
        assert np.array_equal(v1, v2)

    def test_seeds_differ(self):
        units = units_from([TWO_FUNCTIONS_C])
        v1 = MockEmbedder(dimension=64, seed=1).transform(units)[0].as_array()
        v2 = MockEmbedder(dimension=64, seed=2).transform(units)[0].as_array()
        assert not np.array_equal(v1, v2)

    def test_rename_closer_than_unrelated(self):
        add, renamed, unrelated = units_from([
            TWO_FUNCTIONS_C.split("\n\n")[1], RENAMED_FN, UNRELATED_FN,
        ])
        emb = MockEmbedder(dimension=128, seed=0)
        va, vr, vu = (r.as_array() for r in emb.transform([add, renamed, unrelated]))
        assert cosine(va, vr) > cosine(va, vu)

    def test_unit_norm(self):
        records = MockEmbedder(dimension=32, seed=0).transform(units_from([TWO_FUNCTIONS_C]))
        assert abs(np.linalg.norm(records[0].as_array()) - 1.0) < 1e-4

    def test_truncation_invariant(self):
        shared = " ".join(f"tok{i}" for i in range(16))
        u1 = make_unit(text=shared + " tail_one extra")
        u2 = make_unit(text=shared + " other_tail entirely different")
        emb = MockEmbedder(dimension=64, code_length=16, seed=5)
        v1, v2 = (r.as_array() for r in emb.transform([u1, u2]))
        assert np.array_equal(v1, v2)

    def test_no_silent_drops(self):
        units = units_from([TWO_FUNCTIONS_C, RENAMED_FN, UNRELATED_FN])
        records = MockEmbedder(dimension=16, seed=0).transform(units)
        assert {r.unit_id for r in records} == {u.id for u in units}

    def test_zero_vector_error(self):
        with pytest.raises(ZeroVector):
            MockEmbedder(dimension=16).transform([make_unit(text="ab")])

    def test_workers_preserve_order(self):
        units = units_from([f"int f{i}(void) {{ return {i}; }}" for i in range(20)])
        serial = MockEmbedder(dimension=32, seed=1, workers=1).transform(units)
        threaded = MockEmbedder(dimension=32, seed=1, workers=4).transform(units)
        assert [r.unit_id for r in serial] == [r.unit_id for r in threaded]
        for a, b in zip(serial, threaded):
            assert a.vector == b.vector

    def test_get_params_round_trip(self):
        emb = MockEmbedder(model_id="m", dimension=8, code_length=4, seed=9)
        params = emb.get_params()
        clone = MockEmbedder(**params)
        assert clone.get_params() == params


class TestVectorStore:
    def _records(self, n=2, dim=4, model="m1"):
        rng = np.random.default_rng(0)
        out = []
        for i in range(n):
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            out.append(EmbeddingRecord(unit_id=f"id{i}", model_id=model, vector=tuple(v)))
        return out

    @pytest.mark.parametrize("encoding", ["jsonl", "binary"])
    def test_round_trip(self, tmp_path, encoding):
        records = self._records()
        path = tmp_path / f"v.{encoding}"
        store_vectors(records, path, normalized=True, encoding=encoding)
        loaded = load_vectors(path)
        assert [r.unit_id for r in loaded] == [r.unit_id for r in records]
        for a, b in zip(loaded, records):
            assert np.array_equal(a.as_array(), b.as_array())  # 32-bit identity

    def test_mixed_dimensions_rejected(self, tmp_path):
        ok = self._records(1, dim=4)[0]
        bad = EmbeddingRecord(unit_id="odd", model_id="m1", vector=(1.0, 0.0, 0.0))
        with pytest.raises(DimensionMismatch):
            store_vectors([ok, bad], tmp_path / "v.jsonl")

    def test_unknown_model_filter_gives_empty(self, tmp_path):
        path = tmp_path / "v.jsonl"
        store_vectors(self._records(), path)
        assert load_vectors(path, model_id="someone-else") == []

    def test_declared_normalized_is_checked(self, tmp_path):
        record = EmbeddingRecord(unit_id="x", model_id="m", vector=(3.0, 4.0))
        path = tmp_path / "v.jsonl"
        store_vectors([record], path, normalized=True)
        with pytest.raises(Exception, match="norm"):
            load_vectors(path)
        store_vectors([record], path, normalized=False)
        assert len(load_vectors(path)) == 1


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"
    dimension = 4
    calls: list[dict] = []

    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).calls.append(body)
        texts = body["texts"]
        if self.behavior == "wrong-dim":
            vectors = [[1.0] * (self.dimension + 1) for _ in texts]
        elif self.behavior == "bad-echo":
            body["echo"] = "nope"
            vectors = [[1.0] + [0.0] * (self.dimension - 1) for _ in texts]
        elif self.behavior == "per-text-error":
            payload = {
                "vectors": [None for _ in texts],
                "errors": [{"index": 0, "code": "EmptyTokenization", "message": "empty"}],
                "dimension": self.dimension,
                "echo": body["echo"],
            }
            self._reply(200, payload)
            return
        else:
            vectors = [
                [float(len(t))] + [1.0] * (self.dimension - 1) for t in texts
            ]
        self._reply(200, {
            "vectors": vectors, "dimension": self.dimension, "echo": body["echo"],
        })

    def _reply(self, status, payload):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_service():
    _Handler.calls = []
    _Handler.behavior = "ok"
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", _Handler
    server.shutdown()


class TestRemoteEmbedder:
    def test_batching_three_units_batch_two(self, stub_service):
        endpoint, handler = stub_service
        units = [make_unit(path=f"u{i}.c", text=f"int f{i}(void) {{ return {i}; }}")
                 for i in range(3)]
        emb = RemoteEmbedder(endpoint, model_id="remote", dimension=4,
                             batch_size=2, max_in_flight=1)
        records = emb.transform(units)
        assert [len(c["texts"]) for c in handler.calls] == [2, 1]
        assert [r.unit_id for r in records] == [u.id for u in units]

    def test_wrong_length_vector_names_unit(self, stub_service):
        endpoint, handler = stub_service
        handler.behavior = "wrong-dim"
        unit = make_unit()
        emb = RemoteEmbedder(endpoint, model_id="remote", dimension=4)
        with pytest.raises(DimensionMismatch, match=unit.id):
            emb.transform([unit])

    def test_unreachable_fails_after_attempts(self):
        emb = RemoteEmbedder("http://127.0.0.1:9", model_id="r", dimension=4,
                             attempts=3, backoff=0.01, timeout=0.2)
        with pytest.raises(TransportFailure, match="3 attempts"):
            emb.transform([make_unit()])

    def test_echo_desync_detected(self, stub_service):
        endpoint, handler = stub_service
        handler.behavior = "bad-echo"
        emb = RemoteEmbedder(endpoint, model_id="remote", dimension=4)
        with pytest.raises(ServiceError, match="echo"):
            emb.transform([make_unit()])

    def test_per_text_error_propagates_unit(self, stub_service):
        endpoint, handler = stub_service
        handler.behavior = "per-text-error"
        unit = make_unit()
        emb = RemoteEmbedder(endpoint, model_id="remote", dimension=4)
        with pytest.raises(ServiceError, match="EmptyTokenization"):
            emb.transform([unit])


class TestEmbedderSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            EmbedderSpec(backend="nope", model_id="x", dimension=4)
        with pytest.raises(ValueError):
            EmbedderSpec(backend="mock", model_id="x", dimension=0)
        with pytest.raises(ValueError):
            EmbedderSpec(backend="remote", model_id="x", dimension=4)
