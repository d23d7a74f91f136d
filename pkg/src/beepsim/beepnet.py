"""Graphs, the noisy beeping channel, and schedule execution."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._prf import GRAPH, bernoulli_threshold, derive_seed
from .codes import BitString


class GraphFormatError(ValueError):
    """Malformed edge-list text; carries the offending line number."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes 0..n-1 with distinct integer IDs."""

    n: int
    adjacency: tuple
    ids: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(cls, n, edges, ids=None):
        if n < 0:
            raise ValueError("n must be non-negative")
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if v in nbrs[u]:
                raise ValueError(f"duplicate edge ({u}, {v})")
            nbrs[u].add(v)
            nbrs[v].add(u)
        ids = tuple(range(n)) if ids is None else tuple(int(i) for i in ids)
        if len(ids) != n:
            raise ValueError("need one ID per node")
        if len(set(ids)) != n:
            raise ValueError("node IDs must be distinct")
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs), ids)

    def with_ids(self, ids):
        return Graph.from_edges(self.n, self.edges(), ids)

    def neighbors(self, v):
        return self.adjacency[v]

    def closed_neighborhood(self, v):
        return tuple(sorted((v,) + self.adjacency[v]))

    def degree(self, v):
        return len(self.adjacency[v])

    @property
    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    @property
    def m(self):
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self):
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def has_edge(self, u, v):
        return v in self.adjacency[u]

    def index_of(self, node_id):
        lookup = self._cache.get("index")
        if lookup is None:
            lookup = {i: v for v, i in enumerate(self.ids)}
            self._cache["index"] = lookup
        return lookup[node_id]

    def closed_matrix(self) -> np.ndarray:
        """n x n 0/1 matrix of closed neighbourhoods (diagonal set)."""
        mat = self._cache.get("closed")
        if mat is None:
            mat = np.eye(self.n, dtype=np.int32)
            for u, v in self.edges():
                mat[u, v] = mat[v, u] = 1
            mat.setflags(write=False)
            self._cache["closed"] = mat
        return mat

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n, self.adjacency, self.ids) == (other.n, other.adjacency, other.ids)

    def __hash__(self):
        return hash((self.n, self.adjacency, self.ids))


# --------------------------------------------------------------------------
# channel


@dataclass(frozen=True)
class NoiseChannel:
    """Independent Bernoulli(epsilon) flips keyed by (seed, node, round).

    With ``self_knowledge`` on, rounds in which a node beeped are exempt
    from noise at that node.
    """

    epsilon: float = 0.0
    seed: int = 0
    self_knowledge: bool = False

    def __post_init__(self):
        if not 0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 1/2)")

    @property
    def noiseless(self):
        return self.epsilon == 0

    def flips(self, nodes, start_round, length):
        return kernels.noise_flips(self.seed, nodes, start_round, length,
                                   bernoulli_threshold(self.epsilon))


BEEP = 1
LISTEN = 0


@dataclass
class Transcript:
    """Append-only record of executed beep rounds."""

    chunks: list = field(default_factory=list)

    @property
    def length(self):
        return sum(c[1].shape[1] for c in self.chunks)

    def append(self, start_round, actions, received):
        self.chunks.append((start_round, np.array(actions, dtype=np.uint8),
                            np.array(received, dtype=np.uint8)))

    def rounds(self):
        for start, act, rec in self.chunks:
            for j in range(act.shape[1]):
                yield start + j, act[:, j], rec[:, j]

    def dump(self):
        """One line per round: ``t | actions-bitstring | received-bitstring``."""
        lines = []
        for t, act, rec in self.rounds():
            lines.append(f"{t} | {_bits_str(act)} | {_bits_str(rec)}")
        return "\n".join(lines) + ("\n" if lines else "")


def _bits_str(row):
    return (np.asarray(row, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def _as_schedule_matrix(schedules, n):
    if isinstance(schedules, np.ndarray):
        mat = schedules
    else:
        rows = [BitString(s).bits if not isinstance(s, np.ndarray) else s for s in schedules]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise ValueError(f"schedule length mismatch: {sorted(lengths)}")
        mat = np.array(rows, dtype=np.uint8).reshape(len(rows), -1)
    if mat.shape[0] != n:
        raise ValueError(f"need one schedule per node ({n}), got {mat.shape[0]}")
    return mat.astype(np.uint8, copy=False)


def run_schedule(g: Graph, schedules, noise: NoiseChannel, start_round=0, transcript=None):
    """Run consecutive beep rounds; node v beeps in round i iff its schedule bit i is 1.

    Returns the n x L matrix of received bits. A node receives 1 when it or a
    neighbour beeped, then the bit is flipped with probability epsilon.
    """
    sched = _as_schedule_matrix(schedules, g.n)
    length = sched.shape[1]
    if g.n == 0 or length == 0:
        received = np.zeros((g.n, length), dtype=np.uint8)
    else:
        packed = np.packbits(sched, axis=1)
        heard = np.empty_like(packed)
        for v in range(g.n):
            heard[v] = np.bitwise_or.reduce(packed[list(g.closed_neighborhood(v))], axis=0)
        received = np.unpackbits(heard, axis=1, count=length)
        if not noise.noiseless:
            flips = noise.flips(np.arange(g.n), start_round, length)
            if noise.self_knowledge:
                flips &= sched == 0
            received ^= flips.astype(np.uint8)
    if transcript is not None:
        transcript.append(start_round, sched, received)
    return received


def run_beep_round(g: Graph, actions, noise: NoiseChannel, round_index=0, transcript=None):
    """Single beep round; ``actions[v]`` is BEEP or LISTEN. Returns per-node bits."""
    act = np.asarray([1 if a else 0 for a in actions], dtype=np.uint8)
    if len(act) != g.n:
        raise ValueError("actions must cover every node exactly once")
    return run_schedule(g, act[:, None], noise, round_index, transcript)[:, 0]


# --------------------------------------------------------------------------
# generators


def gen_random_graph(n, delta_cap, edge_prob, seed):
    """Erdos-Renyi sample, then drop each over-cap node's highest-index edges."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(derive_seed(seed, GRAPH))
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < edge_prob
    nbrs = [set() for _ in range(n)]
    for u, v in zip(iu[keep].tolist(), ju[keep].tolist()):
        nbrs[u].add(v)
        nbrs[v].add(u)
    for v in range(n):
        while len(nbrs[v]) > delta_cap:
            u = max(nbrs[v])
            nbrs[v].discard(u)
            nbrs[u].discard(v)
    edges = [(u, v) for u in range(n) for v in nbrs[u] if u < v]
    return Graph.from_edges(n, edges)


def gen_hard_instance(delta, n):
    """K_{delta,delta} on nodes 0..2delta-1 (left part first) plus isolated nodes."""
    if n < 2 * delta:
        raise ValueError(f"n={n} is smaller than 2*delta={2 * delta}")
    edges = [(u, delta + v) for u in range(delta) for v in range(delta)]
    return Graph.from_edges(n, edges)


def random_ids(g: Graph, seed, space=None):
    """Distinct IDs drawn uniformly from [space] (default n^4)."""
    space = space or max(2, g.n) ** 4
    rng = np.random.default_rng(derive_seed(seed, GRAPH, 1))
    ids = set()
    out = []
    while len(out) < g.n:
        x = int(rng.integers(space))
        if x not in ids:
            ids.add(x)
            out.append(x)
    return g.with_ids(out)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(k):
    return Graph.from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def complete_graph(n):
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def _kv(text):
    out = {}
    for part in filter(None, text.split(",")):
        key, _, value = part.partition("=")
        out[key.strip()] = value.strip()
    return out


def graph_from_spec(spec: str, seed=0) -> Graph:
    """Build a graph from a file path or a generator spec.

    Specs: ``k44`` (K_{4,4}), ``hard:delta=3,n=10``, ``path3``, ``cycle5``,
    ``star4``, ``complete5``, ``triangle``, ``empty8``, ``single``,
    ``rand:n=32,dcap=6,p=0.2[,seed=1]``.
    """
    if os.path.exists(spec):
        return read_graph(spec)
    s = spec.strip().lower()
    if s.startswith("rand:"):
        kv = _kv(s[5:])
        n = int(kv["n"])
        return gen_random_graph(n, int(kv.get("dcap", n)), float(kv.get("p", 0.5)),
                                int(kv.get("seed", seed)))
    if s.startswith("hard:"):
        kv = _kv(s[5:])
        return gen_hard_instance(int(kv["delta"]), int(kv["n"]))
    if s == "triangle":
        return complete_graph(3)
    if s == "single":
        return Graph.from_edges(2, [(0, 1)])
    m = re.fullmatch(r"k(\d+)", s)
    if m and len(m.group(1)) % 2 == 0:
        digits = m.group(1)
        half = len(digits) // 2
        if digits[:half] == digits[half:]:
            d = int(digits[:half])
            return gen_hard_instance(d, 2 * d)
    m = re.fullmatch(r"(path|cycle|star|complete|empty)(\d+)", s)
    if m:
        kind, k = m.group(1), int(m.group(2))
        return {
            "path": path_graph,
            "cycle": cycle_graph,
            "star": star_graph,
            "complete": complete_graph,
            "empty": lambda n: Graph.from_edges(n, []),
        }[kind](k)
    raise ValueError(f"unrecognised graph spec {spec!r}")


# --------------------------------------------------------------------------
# edge-list text format


def parse_graph(text: str) -> Graph:
    """Parse ``n m [ids]`` then an optional ID line then m lines ``u v``."""
    lines = text.splitlines()
    if not lines:
        raise GraphFormatError(1, "empty input")
    header = lines[0].split()
    if len(header) not in (2, 3):
        raise GraphFormatError(1, "header must be 'n m' or 'n m ids'")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise GraphFormatError(1, "n and m must be integers") from None
    if n < 0 or m < 0:
        raise GraphFormatError(1, "n and m must be non-negative")
    pos = 1
    ids = None
    if len(header) == 3:
        if pos >= len(lines):
            raise GraphFormatError(pos + 1, "missing ID line")
        try:
            ids = [int(t) for t in lines[pos].split()]
        except ValueError:
            raise GraphFormatError(pos + 1, "IDs must be integers") from None
        if len(ids) != n:
            raise GraphFormatError(pos + 1, f"expected {n} IDs, got {len(ids)}")
        if len(set(ids)) != n:
            raise GraphFormatError(pos + 1, "IDs must be distinct")
        pos += 1
    edges = []
    seen = set()
    for k in range(m):
        lineno = pos + k + 1
        if pos + k >= len(lines):
            raise GraphFormatError(lineno, f"expected {m} edges, found {k}")
        parts = lines[pos + k].split()
        if len(parts) != 2:
            raise GraphFormatError(lineno, "edge line must be 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(lineno, "edge endpoints must be integers") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(lineno, f"endpoint out of range 0..{n - 1}")
        if u == v:
            raise GraphFormatError(lineno, "self-loop")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(lineno, "duplicate edge")
        seen.add(key)
        edges.append(key)
    for k in range(pos + m, len(lines)):
        if lines[k].strip():
            raise GraphFormatError(k + 1, "trailing content after the edge list")
    return Graph.from_edges(n, edges, ids)


def format_graph(g: Graph) -> str:
    edges = g.edges()
    explicit = g.ids != tuple(range(g.n))
    out = [f"{g.n} {len(edges)}" + (" ids" if explicit else "")]
    if explicit:
        out.append(" ".join(str(i) for i in g.ids))
    out.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(out) + "\n"


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(g: Graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_graph(g))


def log2n(n):
    return math.log2(n) if n > 1 else 0.0
