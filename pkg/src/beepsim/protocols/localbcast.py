"""B-bit Local Broadcast: every node sends a distinct B-bit message to each neighbour."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._prf import MESSAGE, derive_seed
from ..beepnet import Graph
from ..program import CongestProgram
from ..simcast import congest_over_broadcast


@dataclass(frozen=True)
class LocalBroadcastTask:
    """``inputs[v]`` maps neighbour ID to the message v sends it;
    ``expected[v]`` is the set of (sender ID, message) pairs v must learn."""

    graph: Graph
    B: int
    inputs: tuple
    expected: tuple

    @classmethod
    def from_inputs(cls, g: Graph, B, inputs):
        inputs = tuple(dict(d) for d in inputs)
        if len(inputs) != g.n:
            raise ValueError("need one input map per node")
        expected = [set() for _ in range(g.n)]
        for v, sends in enumerate(inputs):
            nbr_ids = {g.ids[u] for u in g.neighbors(v)}
            if set(sends) != nbr_ids:
                raise ValueError(f"node {g.ids[v]} inputs must address exactly its neighbours")
            for dest, m in sends.items():
                if not 0 <= m < (1 << B):
                    raise ValueError(f"message {m} is not {B} bits")
                expected[g.index_of(dest)].add((g.ids[v], m))
        return cls(g, B, inputs, tuple(frozenset(e) for e in expected))

    def check(self, outputs):
        """Per-node flags: output set equals expected set."""
        return [frozenset(o or ()) == e for o, e in zip(outputs, self.expected)]


def gen_local_broadcast_task(g: Graph, B, seed) -> LocalBroadcastTask:
    if B < 1:
        raise ValueError("B must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, MESSAGE))
    inputs = []
    for v in range(g.n):
        inputs.append({g.ids[u]: int(rng.integers(1 << B)) for u in g.neighbors(v)})
    return LocalBroadcastTask.from_inputs(g, B, inputs)


class LocalBroadcastCongest(CongestProgram):
    """One CONGEST round: send each neighbour its message, output what arrived."""

    def __init__(self, B):
        self.message_bits = B

    def init(self, node_id, neighbor_ids, node_input, seed):
        return {"input": dict(node_input or {}), "sent": False, "got": None}

    def on_round(self, state, received):
        if not state["sent"]:
            state["sent"] = True
            return state, dict(state["input"]), False
        state["got"] = dict(received)
        return state, {}, True

    def output(self, state):
        return frozenset((state["got"] or {}).items())


def local_broadcast_program(task: LocalBroadcastTask, n=None, L=None):
    """Broadcast CONGEST program solving ``task`` in 1 + Δ rounds."""
    return congest_over_broadcast(LocalBroadcastCongest(task.B), task.graph, L)


def format_task(task: LocalBroadcastTask) -> str:
    """Lines ``v u m_bits``: node ID v sends the B-bit string to neighbour ID u."""
    g = task.graph
    lines = []
    for v, sends in enumerate(task.inputs):
        for u in sorted(sends):
            lines.append(f"{g.ids[v]} {u} {sends[u]:0{task.B}b}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_task(g: Graph, text: str) -> LocalBroadcastTask:
    inputs = [dict() for _ in range(g.n)]
    B = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3 or set(parts[2]) - {"0", "1"}:
            raise ValueError(f"line {lineno}: expected 'v u m_bits'")
        if B is None:
            B = len(parts[2])
        elif len(parts[2]) != B:
            raise ValueError(f"line {lineno}: message width {len(parts[2])} != {B}")
        inputs[g.index_of(int(parts[0]))][int(parts[1])] = int(parts[2], 2)
    if B is None:
        raise ValueError("task has no messages; cannot infer B")
    return LocalBroadcastTask.from_inputs(g, B, inputs)
