"""Deterministic message-passing executor for SPMD worker programs.

Programs run in synchronized supersteps: every worker takes a step, the
messages it emitted are routed, and the next superstep begins with each
worker's inbox sorted by sender.  Workers own their state and exchange
values only through messages, so results are identical whether the
workers of a superstep run sequentially or on a thread pool.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .counters import CommRecorder


def payload_words(payload) -> int:
    """Word count of the float payload(s) in a message."""
    if payload is None:
        return 0
    if isinstance(payload, np.ndarray):
        return int(payload.size)
    if isinstance(payload, (int, float, np.floating, np.integer)):
        return 1
    if isinstance(payload, dict):
        return sum(payload_words(v) for v in payload.values())
    if isinstance(payload, (tuple, list)):
        return sum(payload_words(v) for v in payload)
    return 0


@dataclass
class Message:
    src: int
    dst: int
    tag: str
    payload: object
    words: int = field(default=-1)

    def __post_init__(self):
        if self.words < 0:
            self.words = payload_words(self.payload)


class ExecutorError(RuntimeError):
    pass


class LocalExecutor:
    """Runs an SPMD program; ``threads > 1`` computes each superstep's
    workers concurrently (message routing stays synchronous either way)."""

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ValueError("threads must be >= 1")
        self.threads = threads

    def run(self, program):
        P = program.n_workers
        states = [program.setup(w) for w in range(P)]
        recorders = [CommRecorder() for _ in range(P)]
        inboxes: list[list[Message]] = [[] for _ in range(P)]

        def take_step(w: int, step: int, inbox: list[Message]):
            try:
                return program.step(w, states[w], step, inbox)
            except Exception as exc:
                raise ExecutorError(f"worker {w} failed at step {step}: {exc}") from exc

        for step in range(program.n_steps):
            if self.threads > 1 and P > 1:
                with ThreadPoolExecutor(max_workers=min(self.threads, P)) as pool:
                    outs = list(pool.map(lambda w: take_step(w, step, inboxes[w]), range(P)))
            else:
                outs = [take_step(w, step, inboxes[w]) for w in range(P)]
            inboxes = [[] for _ in range(P)]
            for w, msgs in enumerate(outs):
                for msg in msgs or ():
                    if msg.src != w:
                        raise ExecutorError(f"worker {w} forged a message from {msg.src}")
                    if not 0 <= msg.dst < P:
                        raise ExecutorError(f"message to unknown worker {msg.dst}")
                    recorders[w].record_send(msg.words)
                    inboxes[msg.dst].append(msg)
            for dst, box in enumerate(inboxes):
                box.sort(key=lambda m: (m.src, m.tag))
                for msg in box:
                    recorders[dst].record_recv(msg.words, stage=(step, msg.tag))

        results = [program.finish(w, states[w]) for w in range(P)]
        return results, recorders
