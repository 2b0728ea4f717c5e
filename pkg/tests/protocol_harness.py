"""Reusable conformance checks for external evaluator workers.

``run_conformance`` drives any stdio worker through the wire protocol:
handshake, id-matched batch replies, determinism on repeated codings,
and the malformed-request failure path.  It returns one (name, passed,
detail) triple per check so callers can print a line per result.
"""

from __future__ import annotations

import json
from typing import Sequence

from dcpruner.evaluators import PROTOCOL_NAME, EvalRequest, WorkerClient


def run_conformance(worker_cmd: Sequence[str],
                    genes_by_subnet: dict[int, tuple[int, ...]],
                    timeout: float = 60.0,
                    check_determinism: bool = True,
                    ) -> list[tuple[str, bool, str]]:
    checks: list[tuple[str, bool, str]] = []
    client = WorkerClient(worker_cmd=list(worker_cmd), timeout=timeout)
    try:
        checks.append(("handshake", client.subnets >= 1,
                       f"protocol={PROTOCOL_NAME} subnets={client.subnets}"))

        subnets = sorted(genes_by_subnet)
        reqs = [EvalRequest(100 + i, s, tuple(genes_by_subnet[s]))
                for i, s in enumerate(subnets)]
        results = client.evaluate_batch(reqs)
        ok = all(r.status == "ok" and r.error is not None
                 and 0.0 <= r.error <= 1.0 for r in results)
        matched = [r.request_id for r in results] == [q.request_id for q in reqs]
        checks.append(("batch-matched-by-id", ok and matched,
                       f"errors={[r.error for r in results]}"))

        if check_determinism:
            s0 = subnets[0]
            twice = client.evaluate_batch([
                EvalRequest(201, s0, tuple(genes_by_subnet[s0])),
                EvalRequest(202, s0, tuple(genes_by_subnet[s0])),
            ])
            same = (twice[0].status == twice[1].status == "ok"
                    and twice[0].error == twice[1].error)
            checks.append(("repeat-determinism", same,
                           f"errors={[r.error for r in twice]}"))

        # malformed request: worker must answer failed and stay alive
        client._transport.send_line(json.dumps({"id": 999}))
        msg = client._next_message(timeout)
        failed_ok = msg.get("id") == 999 and msg.get("status") == "failed" \
            and bool(msg.get("reason"))
        checks.append(("malformed-request-fails-gracefully", failed_ok,
                       f"reply={msg}"))

        s0 = subnets[0]
        after = client.evaluate_batch(
            [EvalRequest(301, s0, tuple(genes_by_subnet[s0]))])
        checks.append(("alive-after-failure", after[0].status == "ok",
                       f"status={after[0].status}"))
    finally:
        client.close()
    return checks
