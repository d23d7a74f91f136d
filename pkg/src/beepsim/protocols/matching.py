"""Randomized maximal matching in Broadcast CONGEST, plus output checkers."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .._prf import derive_seed, randbelow_big, stream_key
from ..beepnet import Graph
from ..program import NodeProgram

NOOP = 0  # also carries ID announcements (hello) with x field 1
PROPOSE = 1
REPLY = 2
CONFIRM = 3
TAG_NAMES = {NOOP: "hello", PROPOSE: "propose", REPLY: "reply", CONFIRM: "confirm"}

MAX_N = 10 ** 6


def id_bits_for(n):
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def x_space(n):
    return max(1, n) ** 9


@dataclass(frozen=True)
class MatchMessage:
    tag: int
    hi: int
    lo: int = 0
    x: int = 0

    @property
    def edge(self):
        return (self.hi, self.lo)


@dataclass(frozen=True)
class MatchCodec:
    """Fixed-width layout ``tag(2) | hi | lo | x`` (most significant first)."""

    id_bits: int
    x_bits: int

    @classmethod
    def for_n(cls, n, id_bits=None):
        return cls(id_bits or id_bits_for(n), max(1, (x_space(n) - 1).bit_length()))

    @property
    def width(self):
        return 2 + 2 * self.id_bits + self.x_bits

    def encode(self, msg: MatchMessage) -> int:
        ib, xb = self.id_bits, self.x_bits
        if not 0 <= msg.tag < 4:
            raise ValueError(f"bad tag {msg.tag}")
        for name, val, bits in (("hi", msg.hi, ib), ("lo", msg.lo, ib), ("x", msg.x, xb)):
            if not 0 <= val < (1 << bits):
                raise ValueError(f"{name}={val} does not fit in {bits} bits")
        return (msg.tag << (2 * ib + xb)) | (msg.hi << (ib + xb)) | (msg.lo << xb) | msg.x

    def decode(self, payload: int) -> MatchMessage:
        ib, xb = self.id_bits, self.x_bits
        if not 0 <= payload < (1 << self.width):
            raise ValueError(f"payload {payload} wider than {self.width} bits")
        return MatchMessage(
            payload >> (2 * ib + xb),
            (payload >> (ib + xb)) & ((1 << ib) - 1),
            (payload >> xb) & ((1 << ib) - 1),
            payload & ((1 << xb) - 1),
        )

    def hello(self, node_id):
        return self.encode(MatchMessage(NOOP, node_id, 0, 1))


def matching_gamma(n, id_bits=None):
    """Message multiplier so that L = ceil(gamma log2 n) holds one matching message."""
    width = MatchCodec.for_n(n, id_bits).width
    return width / math.log2(n), width


@dataclass
class MatchState:
    node_id: int
    seed: int
    phase: str = "start"
    iteration: int = 0
    E: set = field(default_factory=set)
    H: set = field(default_factory=set)
    proposal: tuple | None = None  # (lo id, x)
    replied: int | None = None  # hi id of the edge we replied to
    partner: int | None = None
    matched_iteration: int | None = None
    capped: bool = False
    done: bool = False
    samples: list = field(default_factory=list)  # (iteration, x)
    tie_skips: int = 0


class MaximalMatchingProgram(NodeProgram):
    """Four broadcast rounds per iteration: propose, reply, confirm, confirm relay."""

    def __init__(self, n, seed=0, id_bits=None, iteration_cap=None):
        if n > MAX_N:
            raise ValueError(f"n={n} exceeds supported maximum {MAX_N}")
        self.n = n
        self.seed = seed
        self.codec = MatchCodec.for_n(n, id_bits)
        self.message_bits = self.codec.width
        self.iteration_cap = iteration_cap or 4 * max(1, math.ceil(math.log2(max(n, 2))))
        self.space = x_space(n)

    def init(self, node_id, node_input, seed):
        if node_id >= (1 << self.codec.id_bits):
            raise ValueError(f"ID {node_id} does not fit in {self.codec.id_bits} bits")
        return MatchState(node_id, derive_seed(seed, self.seed))

    def _finish(self, st):
        st.done = True
        st.phase = "done"
        return st, None, True

    def _begin_iteration(self, st):
        if not st.E:
            return self._finish(st)
        if st.iteration >= self.iteration_cap:
            st.capped = True
            return self._finish(st)
        st.iteration += 1
        st.replied = None
        st.proposal = None
        key = stream_key(st.seed, st.iteration)
        ctr = 0
        drawn = []
        for u in sorted(st.H):
            x, ctr = randbelow_big(key, ctr, self.space)
            drawn.append((x, u))
            st.samples.append((st.iteration, x))
        st.phase = "propose"
        if not drawn:
            return st, None, False
        best = min(drawn)
        if sum(1 for x, _ in drawn if x == best[0]) > 1:
            st.tie_skips += 1
            return st, None, False
        st.proposal = (best[1], best[0])
        msg = MatchMessage(PROPOSE, st.node_id, best[1], best[0])
        return st, self.codec.encode(msg), False

    def _remove_confirmed(self, st, msgs):
        for m in msgs:
            if m.tag == CONFIRM and st.node_id not in (m.hi, m.lo):
                for u in (m.hi, m.lo):
                    st.E.discard(u)
                    st.H.discard(u)

    def on_round(self, st, received):
        if received is None:
            st.phase = "hello"
            return st, self.codec.hello(st.node_id), False
        msgs = [self.codec.decode(p) for p in received]
        if st.phase == "hello":
            st.E = {m.hi for m in msgs if m.tag == NOOP and m.x == 1 and m.hi != st.node_id}
            st.H = {u for u in st.E if u < st.node_id}
            return self._begin_iteration(st)
        if st.phase == "propose":
            props = [m for m in msgs if m.tag == PROPOSE and m.lo == st.node_id and m.hi in st.E]
            st.phase = "reply"
            if props:
                best = min(props, key=lambda m: (m.x, m.hi))
                if st.proposal is None or best.x < st.proposal[1]:
                    st.replied = best.hi
                    return st, self.codec.encode(MatchMessage(REPLY, best.hi, st.node_id)), False
            return st, None, False
        if st.phase == "reply":
            st.phase = "confirm"
            if st.proposal is not None and st.replied is None:
                lo = st.proposal[0]
                if any(m.tag == REPLY and m.hi == st.node_id and m.lo == lo for m in msgs):
                    st.partner = lo
                    st.matched_iteration = st.iteration
                    st.done = True
                    st.phase = "done"
                    return st, self.codec.encode(MatchMessage(CONFIRM, st.node_id, lo)), True
            return st, None, False
        if st.phase == "confirm":
            if st.replied is not None and any(
                    m.tag == CONFIRM and m.hi == st.replied and m.lo == st.node_id for m in msgs):
                st.partner = st.replied
                st.matched_iteration = st.iteration
                st.done = True
                st.phase = "done"
                return st, self.codec.encode(MatchMessage(CONFIRM, st.replied, st.node_id)), True
            self._remove_confirmed(st, msgs)
            st.phase = "relay"
            return st, None, False
        if st.phase == "relay":
            self._remove_confirmed(st, msgs)
            return self._begin_iteration(st)
        raise RuntimeError(f"on_round called in phase {st.phase!r}")

    def output(self, st):
        return st.partner


def maximal_matching_program(n, seed=0, id_bits=None, iteration_cap=None):
    return MaximalMatchingProgram(n, seed, id_bits, iteration_cap)


# --------------------------------------------------------------------------
# instrumentation over final states


def adjacent_join_violations(g: Graph, states):
    """Pairs of matched edges that joined in the same iteration and share an endpoint,
    or matched claims that are not reciprocated in the same iteration."""
    by_id = {st.node_id: st for st in states}
    problems = []
    joined = {}
    for st in states:
        if st.partner is None:
            continue
        other = by_id.get(st.partner)
        if other is None or other.partner != st.node_id or \
                other.matched_iteration != st.matched_iteration:
            problems.append(("unreciprocated", st.node_id, st.partner))
            continue
        joined.setdefault(st.matched_iteration, set()).add(
            (max(st.node_id, st.partner), min(st.node_id, st.partner)))
    for it, edges in joined.items():
        seen = Counter(v for e in edges for v in e)
        for v, c in seen.items():
            if c > 1:
                problems.append(("adjacent", it, v))
    return problems


def x_collisions(states):
    """Number of (iteration, x) values sampled more than once network-wide."""
    counts = Counter(s for st in states for s in st.samples)
    return sum(1 for c in counts.values() if c > 1)


def iterations_used(states):
    return max((st.iteration for st in states), default=0)


# --------------------------------------------------------------------------
# checkers


@dataclass(frozen=True)
class MatchingVerdict:
    symmetry: bool
    maximality: bool
    is_matching: bool

    @property
    def ok(self):
        return self.symmetry and self.maximality


def verify_matching(g: Graph, out) -> MatchingVerdict:
    """``out[v]`` is the partner ID of node index v, or None for Unmatched."""
    if len(out) != g.n:
        raise ValueError("need one output per node")
    known = set(g.ids)
    symmetry = True
    for v in range(g.n):
        p = out[v]
        if p is None:
            continue
        if p not in known or p == g.ids[v]:
            symmetry = False
            continue
        u = g.index_of(p)
        if out[u] != g.ids[v] or not g.has_edge(u, v):
            symmetry = False
    maximality = all(out[u] is not None or out[v] is not None for u, v in g.edges())
    return MatchingVerdict(symmetry, maximality, symmetry)


def brute_force_maximal_check(g: Graph, edge_set) -> bool:
    """Independent edge set of g (node-index pairs) to which no edge of g can be added."""
    edges = {(min(u, v), max(u, v)) for u, v in edge_set}
    used = set()
    for u, v in edges:
        if not g.has_edge(u, v) or u in used or v in used:
            return False
        used.update((u, v))
    for u, v in g.edges():
        if (u, v) not in edges and u not in used and v not in used:
            return False
    return True


def output_edges(g: Graph, out):
    """Node-index pairs claimed by the output (both directions merged)."""
    edges = set()
    for v, p in enumerate(out):
        if p is not None:
            u = g.index_of(p)
            edges.add((min(u, v), max(u, v)))
    return edges


def outputs_from_edges(g: Graph, edges):
    out = [None] * g.n
    for u, v in edges:
        out[u], out[v] = g.ids[v], g.ids[u]
    return out


def brute_force_output_check(g: Graph, out) -> bool:
    """True iff ``out`` is exactly the per-node encoding of a maximal matching of g."""
    if len(out) != g.n or any(p is not None and p not in g.ids for p in out):
        return False
    edges = output_edges(g, out)
    return brute_force_maximal_check(g, edges) and outputs_from_edges(g, edges) == list(out)


def format_matching(g: Graph, out) -> str:
    """One line per node: ``id matched-id`` or ``id -``."""
    return "".join(f"{g.ids[v]} {'-' if p is None else p}\n" for v, p in enumerate(out))


def parse_matching(g: Graph, text: str):
    out = [None] * g.n
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'id matched-id'")
        v = g.index_of(int(parts[0]))
        out[v] = None if parts[1] == "-" else int(parts[1])
    return out
