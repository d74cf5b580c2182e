"""Instrumentation counters for arithmetic and communication.

Flops are floating-point additions and multiplications only; divisions
are tallied separately and never folded into the flop total.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class FlopCounter:
    """Running tally of adds+muls (``flops``) and divisions.

    A multiply-accumulate pair counts as 2 flops.  Square roots are not
    counted at all.
    """

    __slots__ = ("flops", "divs")

    def __init__(self) -> None:
        self.flops = 0
        self.divs = 0

    def add(self, flops: int, divs: int = 0) -> None:
        self.flops += int(flops)
        self.divs += int(divs)

    def add_gemm(self, m: int, k: int, n: int = 1) -> None:
        """Count a dense (m x k) @ (k x n) product: k muls + k-1 adds per entry."""
        if k > 0:
            self.flops += m * n * (2 * k - 1)

    def add_axpy(self, n: int) -> None:
        """Count y += a*x on vectors of length n."""
        self.flops += 2 * n

    def snapshot(self) -> tuple[int, int]:
        return (self.flops, self.divs)

    def __repr__(self) -> str:
        return f"FlopCounter(flops={self.flops}, divs={self.divs})"


class NullFlopCounter(FlopCounter):
    """Counter that ignores everything (no instrumentation overhead logic)."""

    def add(self, flops: int, divs: int = 0) -> None:
        pass

    def add_gemm(self, m: int, k: int, n: int = 1) -> None:
        pass

    def add_axpy(self, n: int) -> None:
        pass


@dataclass
class CommRecorder:
    """Per-worker message/word tally plus per-stage history.

    ``stages`` maps a stage label to (messages_received, words_received)
    for this worker; critical-path aggregation sums the per-stage maxima
    across workers.
    """

    messages_sent: int = 0
    words_sent: int = 0
    messages_received: int = 0
    words_received: int = 0
    stages: dict = field(default_factory=dict)

    def record_send(self, words: int, stage=None) -> None:
        self.messages_sent += 1
        self.words_sent += int(words)

    def record_recv(self, words: int, stage=None) -> None:
        self.messages_received += 1
        self.words_received += int(words)
        if stage is not None:
            m, w = self.stages.get(stage, (0, 0))
            self.stages[stage] = (m + 1, w + int(words))


def critical_path(recorders: list[CommRecorder]) -> tuple[int, int]:
    """Critical-path (messages, words) across synchronized stages.

    Each stage contributes the maximum per-worker receive count (and word
    count) of that stage; stages execute one after another, so the totals
    add up along the path.
    """
    labels: set = set()
    for rec in recorders:
        labels.update(rec.stages)
    msgs = 0
    words = 0
    for label in labels:
        msgs += max(rec.stages.get(label, (0, 0))[0] for rec in recorders)
        words += max(rec.stages.get(label, (0, 0))[1] for rec in recorders)
    return msgs, words
