"""Line-delimited JSON bridge hosting score handlers for a foreign runtime.

One request per stdin line, one response per stdout line, matched by ``id``.
The boundary carries only scalars, index lists, and flat arrays; every
exception crosses back as ``{"type": ..., "message": ...}`` so the host can
rethrow it typed.  All scoring, selection, and sampling stays on this side.
"""

from __future__ import annotations

import json
import sys
from collections import deque

from batchscore.handler import ScoreHandler
from batchscore.pruning import (
    CycleSchedule,
    NoPrune,
    Sampler,
    ThresholdSoftPrune,
    WindowSelect,
)
from batchscore.scores import EmaConfig

PROTOCOL_VERSION = 1


def _policy_from(params: dict):
    kind = params.get("kind", "none")
    if kind == "none":
        return NoPrune()
    if kind == "threshold":
        return ThresholdSoftPrune(
            prune_prob=float(params["prune_prob"]),
            rescale=bool(params.get("rescale", True)),
            anneal_tail=float(params.get("anneal_tail", 0.125)),
        )
    if kind == "window":
        return WindowSelect(
            keep_fraction=float(params["keep_fraction"]),
            progress_mode=str(params.get("progress_mode", "easy-to-hard")),
        )
    raise ValueError(f"unknown policy kind {kind!r}")


class HandleState:
    """One hosted handler plus its epoch counter and queued batch stream."""

    __slots__ = ("handler", "epoch", "queue")

    def __init__(self, handler: ScoreHandler):
        self.handler = handler
        self.epoch = 0
        self.queue: deque = deque()

    def next_epoch_indices(self, batch_size: int, seed: int) -> list[list[int]]:
        cycle = self.handler.schedule.cycle_of_epoch(self.epoch)
        active = self.handler.active
        if active is None or active.cycle_index != cycle:
            active = self.handler.start_cycle(cycle)
        if active.kept_count == 0:
            raise RuntimeError("active set is empty")
        sampler = Sampler(active.kept_ids, batch_size, seed)
        batches = sampler.epoch(self.epoch)
        self.epoch += 1
        self.queue = deque(batches)
        return [batch.tolist() for batch in batches]

    def install_batch(self, indices: list[int]) -> None:
        if self.queue:
            raise RuntimeError("an epoch batch stream is still pending; drain it with update() first")
        self.handler.install_batch(indices)

    def update(self, mean_loss: float) -> float:
        if not self.handler.has_pending and self.queue:
            self.handler.install_batch(self.queue.popleft())
        return self.handler.update(mean_loss)

    def snapshot(self) -> dict:
        view = self.handler.snapshot()
        return {
            "scores": [float(v) for v in view.scores],
            "update_count": [int(v) for v in view.update_count],
            "initialized": [bool(v) for v in view.initialized],
        }


class Bridge:
    def __init__(self) -> None:
        self.handles: dict[int, HandleState] = {}
        self.next_handle = 1

    def dispatch(self, op: str, req: dict):
        if op == "create":
            ema = EmaConfig(
                alpha=float(req["alpha"]),
                init_policy=str(req.get("init_policy", "first-observed")),
                init_value=float(req.get("init_value", 0.0)),
            )
            handler = ScoreHandler(
                int(req["n_samples"]),
                ema,
                _policy_from(req.get("policy", {})),
                CycleSchedule(
                    cycle_len_epochs=int(req.get("cycle_len_epochs", 1)),
                    total_epochs=int(req.get("total_epochs", 1)),
                ),
                seed=int(req.get("seed", 0)),
            )
            handle = self.next_handle
            self.next_handle += 1
            self.handles[handle] = HandleState(handler)
            return {"handle": handle}
        if op == "stats":
            return {"live_handles": len(self.handles)}
        if op == "shutdown":
            return {"closing": True}

        handle = int(req["handle"])
        state = self.handles.get(handle)
        if state is None:
            raise KeyError(f"no such handle {handle}")
        if op == "next_epoch_indices":
            return {"batches": state.next_epoch_indices(int(req["batch_size"]), int(req.get("seed", 0)))}
        if op == "install_batch":
            state.install_batch(req["indices"])
            return {}
        if op == "update":
            return {"scaled_loss": state.update(float(req["mean_loss"]))}
        if op == "snapshot":
            return state.snapshot()
        if op == "dispose":
            del self.handles[handle]
            return {}
        raise ValueError(f"unknown op {op!r}")


def main() -> int:
    bridge = Bridge()
    out = sys.stdout
    out.write(json.dumps({"ready": True, "protocol": PROTOCOL_VERSION}) + "\n")
    out.flush()
    for line in sys.stdin:
        if not line.strip():
            continue
        rid = None
        try:
            req = json.loads(line)
            rid = req.get("id")
            op = req["op"]
            result = bridge.dispatch(op, req)
            out.write(json.dumps({"id": rid, "ok": True, "result": result}) + "\n")
            out.flush()
            if op == "shutdown":
                return 0
        except Exception as exc:  # every failure crosses the boundary typed
            payload = {"type": type(exc).__name__, "message": str(exc)}
            out.write(json.dumps({"id": rid, "ok": False, "error": payload}) + "\n")
            out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
