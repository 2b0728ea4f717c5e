import json
import sys
import threading
from pathlib import Path

import pytest

from dcpruner.evaluators import (CachedEvaluator, EvalRequest, ProtocolError,
                                 SurrogateEvaluator, SurrogateParams,
                                 WorkerClient, WorkerError, fnv1a64)

sys.path.insert(0, str(Path(__file__).parent))
from protocol_harness import run_conformance  # noqa: E402

WORKER = Path(__file__).parent / "workers" / "reference_worker.py"


def worker_cmd(mode="ok", subnets=3):
    return [sys.executable, str(WORKER), mode, str(subnets)]


class TestFnv:
    def test_reference_vectors(self):
        # published FNV-1a 64-bit test vectors
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8


def simple_surrogate(jitter=0.01, seed=0, base=0.30):
    # params proxy: sum of genes; baseline 16 per subnet
    return SurrogateEvaluator(
        SurrogateParams((base, base), 0.5, 0.05, jitter, seed),
        lambda s, g: float(sum(g)), [16.0, 16.0])


class TestSurrogate:
    def test_half_pruned_value(self):
        value = simple_surrogate()(0, (4, 4))
        assert value == pytest.approx(0.45, abs=0.005)

    def test_jitter_free_is_exact(self):
        assert simple_surrogate(jitter=0.0)(0, (4, 4)) == pytest.approx(0.45)
        assert simple_surrogate(jitter=0.0)(0, (8, 8)) == pytest.approx(0.30)

    def test_jitter_free_monotone_in_params(self):
        ev = simple_surrogate(jitter=0.0)
        values = [ev(0, (g, g)) for g in range(1, 9)]
        assert values == sorted(values, reverse=True)

    def test_deterministic_across_instances(self):
        assert simple_surrogate()(1, (3, 5)) == simple_surrogate()(1, (3, 5))

    def test_seed_changes_jitter(self):
        a = simple_surrogate(seed=0)(0, (3, 5))
        b = simple_surrogate(seed=1)(0, (3, 5))
        assert a != b

    def test_jitter_bounded(self):
        ev = simple_surrogate()
        exact = simple_surrogate(jitter=0.0)
        for genes in [(1, 1), (2, 7), (8, 8), (5, 3)]:
            assert abs(ev(0, genes) - exact(0, genes)) <= 0.005

    def test_ratio_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="ratio"):
            simple_surrogate()(0, (16, 16))  # sum 32 > baseline 16

    def test_base_error_validation(self):
        with pytest.raises(ValueError):
            SurrogateParams((1.5,))

    def test_negative_shape_validation(self):
        with pytest.raises(ValueError):
            SurrogateParams((0.3,), amplitude=-1.0)

    def test_baseline_count_mismatch(self):
        with pytest.raises(ValueError):
            SurrogateEvaluator(SurrogateParams((0.3,)), lambda s, g: 1.0, [1.0, 2.0])


class TestCache:
    def test_memoizes(self):
        calls = []

        def inner(s, g):
            calls.append((s, g))
            return 0.5

        cache = CachedEvaluator(inner)
        for _ in range(3):
            assert cache(0, (1, 2)) == 0.5
        assert calls == [(0, (1, 2))]
        assert cache.inner_calls == 1

    def test_distinct_keys(self):
        cache = CachedEvaluator(lambda s, g: s + sum(g))
        assert cache(0, (1,)) == 1
        assert cache(1, (1,)) == 2
        assert cache.inner_calls == 2

    def test_persistence_roundtrip(self, tmp_path):
        path = tmp_path / "cache.json"
        first = CachedEvaluator(lambda s, g: 0.25, path)
        first(2, (3, 4))
        first.save()
        def explode(s, g):
            raise AssertionError("should be served from disk")
        second = CachedEvaluator(explode, path)
        assert second(2, (3, 4)) == 0.25

    def test_corrupt_cache_discarded(self, tmp_path, caplog):
        path = tmp_path / "cache.json"
        path.write_text("{ not json")
        cache = CachedEvaluator(lambda s, g: 0.75, path)
        assert cache(0, (1,)) == 0.75
        assert "corrupt" in caplog.text

    def test_thread_safety(self):
        cache = CachedEvaluator(lambda s, g: sum(g))
        threads = [threading.Thread(
            target=lambda: [cache(0, (i,)) for i in range(50)])
            for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert cache.inner_calls == 50


class TestWorkerClient:
    def test_handshake_and_single_eval(self):
        with WorkerClient(worker_cmd=worker_cmd()) as client:
            assert client.subnets == 3
            result = client.evaluate_batch([EvalRequest(1, 0, (10, 10))])[0]
            assert result.status == "ok"
            assert result.error == pytest.approx(0.02)

    def test_out_of_order_replies_matched_by_id(self):
        with WorkerClient(worker_cmd=worker_cmd("shuffle")) as client:
            reqs = [EvalRequest(7, 0, (10,)), EvalRequest(8, 2, (20,))]
            results = client.evaluate_batch(reqs)
            assert [r.request_id for r in results] == [7, 8]
            assert results[0].error == pytest.approx(0.01)
            assert results[1].error == pytest.approx(0.22)

    def test_failure_reply_surfaces_reason(self):
        with WorkerClient(worker_cmd=worker_cmd("fail")) as client:
            ok, bad = client.evaluate_batch([
                EvalRequest(1, 0, (5,)), EvalRequest(2, 1, (5,))])
            assert ok.status == "ok"
            assert (bad.status, bad.reason) == ("failed", "diverged")

    def test_timeout_then_retry_recovers(self):
        with WorkerClient(worker_cmd=worker_cmd("drop-first"),
                          timeout=0.5, retries=1) as client:
            result = client.evaluate_batch([EvalRequest(5, 0, (30,))])[0]
            assert result.status == "ok"

    def test_timeout_without_retry_fails(self):
        with WorkerClient(worker_cmd=worker_cmd("drop-first"),
                          timeout=0.5, retries=0) as client:
            result = client.evaluate_batch([EvalRequest(5, 0, (30,))])[0]
            assert (result.status, result.reason) == ("failed", "timeout")

    def test_bad_handshake_rejected(self):
        with pytest.raises(ProtocolError):
            WorkerClient(worker_cmd=worker_cmd("bad-handshake"))

    def test_garbage_line_raises_protocol_error(self):
        with WorkerClient(worker_cmd=worker_cmd("garbage")) as client:
            with pytest.raises(ProtocolError):
                client.evaluate_batch([EvalRequest(1, 0, (5,))])

    def test_as_evaluator_adapter(self):
        with WorkerClient(worker_cmd=worker_cmd()) as client:
            evaluate = client.as_evaluator()
            assert evaluate(1, (10, 10)) == pytest.approx(0.12)

    def test_as_evaluator_raises_on_failure(self):
        with WorkerClient(worker_cmd=worker_cmd("fail")) as client:
            with pytest.raises(WorkerError, match="diverged"):
                client.as_evaluator()(1, (5,))

    def test_requires_one_transport(self):
        with pytest.raises(ValueError):
            WorkerClient()


class TestConformanceHarness:
    def test_reference_worker_passes(self):
        checks = run_conformance(worker_cmd(), {0: (10, 10), 1: (20,), 2: (5, 5)},
                                 timeout=30.0)
        failed = [c for c in checks if not c[1]]
        assert not failed, failed
        assert {name for name, _, _ in checks} == {
            "handshake", "batch-matched-by-id", "repeat-determinism",
            "malformed-request-fails-gracefully", "alive-after-failure"}
