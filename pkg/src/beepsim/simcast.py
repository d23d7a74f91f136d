"""Broadcast CONGEST over noisy beeps: the two-phase round, its decoders,
multi-round drivers, and the CONGEST-over-Broadcast wrapper."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._prf import PAYLOAD_DRAW, PROGRAM, derive_seed, random_bits, stream_key
from .beepnet import Graph, NoiseChannel, run_schedule
from .codes import (
    EMPIRICAL,
    THEORY,
    BeepCode,
    BeepCodeParams,
    BitString,
    DistanceCode,
    DistanceCodeParams,
    ExhaustiveLimitError,
    _check_mode,
    find_verified_distance_code,
)
from .program import CongestProgram, NodeProgram

EXHAUSTIVE = "exhaustive"
RESTRICTED = "restricted"
# restricted set decoding, exhaustive message decoding
RESTRICTED_SETS = "restricted-sets"
POLICIES = (EXHAUSTIVE, RESTRICTED, RESTRICTED_SETS)

DEFAULT_A_MAX = 20
DEFAULT_L_MAX = 16
DISTANCE_DELTA = 1 / 3


def min_c_epsilon(epsilon):
    """Smallest integer constant satisfying every decoding constraint at noise ``epsilon``."""
    e = float(epsilon)
    if not 0 < e < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    terms = (
        6 / e * (1 / (4 * e) - 0.5) ** -2,
        54 / ((1 - 2 * e) ** 2 * e) + 5,
        60 / (1 - 2 * e),
        30 / (e * (1 - 2 * e)),
        6 * ((1 - e) * (1 - 2 * e) / (e * (7 - 2 * e))) ** -2,
    )
    return math.ceil(max(terms) - 1e-9)


def separation_floor(L, epsilon=0.0):
    """Smallest c at which the per-instance intersection bound implies Phase-1 separation.

    A non-member payload is rejected when its codeword meets the superimposed
    neighbourhood in fewer than 5cL positions; with no noise it is accepted only
    if more than w - tau_set positions meet, so we need 5cL - 1 <= w - tau_set.
    """
    frac = 1 - (2 * epsilon + 1) / 4
    c = 1
    while 5 * c * L - 1 > frac * c * c * L:
        c += 1
    return c


@dataclass(frozen=True)
class SimParams:
    n: int
    delta: int
    epsilon: float
    c_eps: int
    L: int
    gamma: float
    mode: str = EMPIRICAL

    @classmethod
    def create(cls, n, delta, epsilon, c_eps, gamma=None, L=None, mode=EMPIRICAL):
        if L is None:
            if n < 2:
                raise ValueError("n must be >= 2 unless L is given explicitly")
            gamma = 1.0 if gamma is None else float(gamma)
            L = math.ceil(gamma * math.log2(n) - 1e-9)
        else:
            L = int(L)
            if gamma is None:
                gamma = L / math.log2(n) if n >= 2 else float(L)
        return cls(int(n), int(delta), float(epsilon), int(c_eps), int(L), float(gamma), mode)

    def __post_init__(self):
        _check_mode(self.mode)
        if self.L < 1:
            raise ValueError("message width L must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.c_eps < 1:
            raise ValueError("c_eps must be >= 1")
        if not 0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 1/2)")
        if self.mode == THEORY:
            need = min_c_epsilon(self.epsilon) if self.epsilon > 0 else 108
            if self.c_eps < need:
                raise ValueError(f"theory mode needs c_eps >= {need} at epsilon={self.epsilon}")

    @property
    def a_beep(self):
        return self.c_eps * self.L

    @property
    def b_dist(self):
        return self.c_eps * self.c_eps * self.L

    @property
    def w(self):
        return self.b_dist

    @property
    def k(self):
        return self.delta + 1

    @property
    def b_beep(self):
        return self.c_eps * self.c_eps * self.k * self.a_beep

    @property
    def tau_set(self):
        return (2 * self.epsilon + 1) / 4 * self.b_dist

    @property
    def t_intersect(self):
        """Per-instance intersection bound 5 c L (= 5 a_beep)."""
        return 5 * self.a_beep

    @property
    def rounds_per_round(self):
        return 2 * self.b_beep

    def as_dict(self):
        return {
            "n": self.n, "delta": self.delta, "eps": self.epsilon, "gamma": self.gamma,
            "c_eps": self.c_eps, "L": self.L, "mode": self.mode,
        }


@dataclass(frozen=True)
class SimCodes:
    beep: BeepCode
    dist: DistanceCode
    verified: bool = False


def build_codes(params: SimParams, seed, verify=False, a_max=14) -> SimCodes:
    """Instantiate both codes; with ``verify`` the distance code is resampled until verified."""
    beep = BeepCode(BeepCodeParams(params.a_beep, params.k, params.c_eps, mode=EMPIRICAL), seed)
    dparams = DistanceCodeParams(params.L, DISTANCE_DELTA, params.c_eps ** 2, mode=params.mode)
    if verify:
        dist = find_verified_distance_code(dparams, seed, a_max=a_max)
        return SimCodes(beep, dist, True)
    return SimCodes(beep, DistanceCode(dparams, seed), False)


# --------------------------------------------------------------------------
# decoders


def _check_policy(policy):
    if policy not in POLICIES:
        raise ValueError(f"candidate_policy must be one of {POLICIES}")


def _decode_sets(beep: BeepCode, notx, tau, policy, candidates, a_max):
    """Per row of ``notx``: sorted payloads whose codeword meets it fewer than tau times."""
    _check_policy(policy)
    if policy == EXHAUSTIVE:
        if beep.a > a_max:
            raise ExhaustiveLimitError(
                f"exhaustive set decoding needs a_beep <= {a_max}, got {beep.a}")
        hits = kernels.scan_candidates(beep.kernel_seed, 0, 1 << beep.a, beep.b, beep.w,
                                       notx, tau)
        return [h.tolist() for h in hits]
    if candidates is None:
        raise ValueError("restricted decoding needs a candidate list")
    cand = sorted(set(int(c) for c in candidates))
    if not cand:
        return [[] for _ in range(notx.shape[0])]
    sup = beep.supports(cand)
    counts = np.empty((notx.shape[0], len(cand)), dtype=np.int64)
    step = max(1, (1 << 22) // max(1, len(cand) * beep.w))
    for s in range(0, notx.shape[0], step):
        counts[s:s + step] = notx[s:s + step][:, sup].sum(axis=2, dtype=np.int64)
    return [[cand[j] for j in np.flatnonzero(row < tau)] for row in counts]


def decode_neighbor_set(x_tilde, code: BeepCode, tau_set, candidate_policy=EXHAUSTIVE,
                        candidates=None, a_max=DEFAULT_A_MAX):
    """Payloads r whose codeword meets NOT x_tilde in fewer than ``tau_set`` positions."""
    x = BitString(x_tilde).bits
    if len(x) != code.b:
        raise ValueError(f"x_tilde has length {len(x)}, code length is {code.b}")
    notx = (1 - x)[None, :].astype(np.uint8)
    return set(_decode_sets(code, notx, tau_set, candidate_policy, candidates, a_max)[0])


@dataclass(frozen=True)
class MessageDecode:
    message: int
    ambiguous: bool
    distance: int


def _nearest(ysub, book, values):
    """Hamming-nearest row of ``book`` for each row of ``ysub``; ties go to the smallest value."""
    y = ysub.astype(np.float32)
    cb = book.astype(np.float32)
    dist = y.sum(axis=1)[:, None] + cb.sum(axis=1)[None, :] - 2 * (y @ cb.T)
    dist = np.rint(dist).astype(np.int64)
    order = np.argsort(values, kind="stable")
    dist = dist[:, order]
    best = dist.min(axis=1)
    idx = dist.argmin(axis=1)
    ties = (dist == best[:, None]).sum(axis=1) > 1
    vals = np.asarray(values)[order]
    return [MessageDecode(int(vals[i]), bool(t), int(d)) for i, t, d in zip(idx, ties, best)]


def _message_book(dist: DistanceCode, candidates, l_max):
    if candidates is None:
        if dist.a > l_max:
            raise ExhaustiveLimitError(
                f"exhaustive message decoding needs L <= {l_max}, got {dist.a}")
        return dist.codebook(limit=l_max), np.arange(1 << dist.a)
    values = sorted(set(int(c) for c in candidates))
    if not values:
        raise ValueError("empty candidate message list")
    return dist.rows(values), np.array(values, dtype=np.int64 if dist.a < 63 else object)


def decode_message(y_tilde, r, beep: BeepCode, dist: DistanceCode, candidates=None,
                   l_max=DEFAULT_L_MAX) -> MessageDecode:
    """Nearest distance codeword to y_tilde restricted to the support of C(r)."""
    y = BitString(y_tilde).bits
    if len(y) != beep.b:
        raise ValueError(f"y_tilde has length {len(y)}, beep code length is {beep.b}")
    if beep.w != dist.b:
        raise ValueError(f"beep weight {beep.w} != distance length {dist.b}")
    book, values = _message_book(dist, candidates, l_max)
    ysub = y[beep.support(r)][None, :]
    return _nearest(ysub, book, values)[0]


def intersection_condition(g: Graph, beep: BeepCode, r_values, active, t, candidates,
                           receivers=None, a_max=DEFAULT_A_MAX):
    """Per receiver: no candidate codeword meets the other neighbourhood codewords t times.

    ``candidates=None`` checks all 2^a payloads (a <= a_max).
    """
    n = g.n
    receivers = np.ones(n, dtype=bool) if receivers is None else np.asarray(receivers, bool)
    act = np.flatnonzero(active)
    sched = np.zeros((n, beep.b), dtype=np.int32)
    if len(act):
        sup = beep.supports([r_values[v] for v in act])
        for row, v in enumerate(act):
            sched[v, sup[row]] = 1
    cover = g.closed_matrix() @ sched
    ok = np.ones(n, dtype=bool)
    for v in np.flatnonzero(receivers):
        members = {r_values[u] for u in g.closed_neighborhood(v) if active[u]}
        union = (cover[v] >= 1).astype(np.uint8)
        if candidates is None:
            if beep.a > a_max:
                raise ExhaustiveLimitError(f"exhaustive check needs a_beep <= {a_max}")
            # payloads meeting the union fewer than t times; everything else violates
            below = kernels.scan_candidates(beep.kernel_seed, 0, 1 << beep.a, beep.b, beep.w,
                                            union[None, :], t)[0]
            outside_ok = len(set(below.tolist()) | members) == (1 << beep.a)
        else:
            others = sorted(set(int(c) for c in candidates) - members)
            outside_ok = True
            if others:
                s = beep.supports(others)
                outside_ok = bool((union[s].sum(axis=1) < t).all())
        inside_ok = True
        for r in members:
            mult = sum(1 for u in g.closed_neighborhood(v) if active[u] and r_values[u] == r)
            s = beep.support(r)
            # positions covered by someone other than the copies of r itself
            if (cover[v, s] > mult).sum() >= t:
                inside_ok = False
                break
        ok[v] = outside_ok and inside_ok
    return ok


# --------------------------------------------------------------------------
# one simulated round


@dataclass(frozen=True)
class DecodedMessage:
    r: int
    message: int
    ambiguous: bool
    distance: int
    self_decode: bool = False


@dataclass
class RoundResult:
    r: list
    x_tilde: np.ndarray
    y_tilde: np.ndarray
    R_tilde: list
    decoded: list
    delivered: list
    set_ok: np.ndarray
    msg_ok: np.ndarray
    cardinality_mismatch: np.ndarray
    receivers: np.ndarray
    collision: bool
    ambiguity_count: int
    condition_ok: np.ndarray | None
    rounds_used: int
    candidate_policy: str

    @property
    def all_set_ok(self):
        return bool(self.set_ok[self.receivers].all())

    @property
    def all_msg_ok(self):
        return bool(self.msg_ok[self.receivers].all())

    @property
    def success(self):
        return self.all_set_ok and self.all_msg_ok

    @property
    def condition_holds(self):
        if self.condition_ok is None:
            return None
        return bool(self.condition_ok[self.receivers].all())

    def x_tilde_of(self, v) -> BitString:
        return BitString(self.x_tilde[v])


def draw_payloads(seed, n, bits):
    """Uniform ``bits``-bit payload per node, keyed by (seed, node index)."""
    base = derive_seed(seed, PAYLOAD_DRAW)
    return [random_bits(stream_key(base, v), 0, bits)[0] for v in range(n)]


def _as_message(m, L):
    if m is None:
        return 0
    if isinstance(m, (BitString, str)):
        m = BitString(m)
        if len(m) != L:
            raise ValueError(f"message has {len(m)} bits, expected {L}")
        return m.to_int()
    m = int(m)
    if not 0 <= m < (1 << L):
        raise ValueError(f"message {m} does not fit in {L} bits")
    return m


def simulate_broadcast_round(g: Graph, messages, params: SimParams, noise: NoiseChannel, seed,
                             codes: SimCodes | None = None, start_round=0,
                             candidate_policy=RESTRICTED, active=None, receivers=None,
                             include_self=True, a_max=DEFAULT_A_MAX, l_max=DEFAULT_L_MAX,
                             check_condition=True, transcript=None) -> RoundResult:
    """One Broadcast CONGEST round as two beep phases of b_beep rounds each.

    ``messages[v]`` is an L-bit int/BitString or None (sent as the all-zero
    message). Only ``active`` nodes beep; only ``receivers`` decode.
    """
    n = g.n
    if len(messages) != n:
        raise ValueError(f"need one message per node ({n}), got {len(messages)}")
    if g.max_degree > params.delta:
        raise ValueError(f"graph max degree {g.max_degree} exceeds params.delta={params.delta}")
    _check_policy(candidate_policy)
    codes = codes or build_codes(params, seed)
    beep, dist = codes.beep, codes.dist
    if beep.b != params.b_beep or dist.b != params.b_dist or dist.a != params.L:
        raise ValueError("codes do not match params")
    active = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    receivers = active.copy() if receivers is None else np.asarray(receivers, dtype=bool)
    msgs = [_as_message(m, params.L) for m in messages]
    r = draw_payloads(seed, n, params.a_beep)
    act = np.flatnonzero(active)
    act_r = [r[v] for v in act]
    collision = len(set(act_r)) != len(act_r)

    b = params.b_beep
    s1 = np.zeros((n, b), dtype=np.uint8)
    s2 = np.zeros((n, b), dtype=np.uint8)
    if len(act):
        sup = beep.supports(act_r)
        drows = dist.rows([msgs[v] for v in act])
        for i, v in enumerate(act):
            s1[v, sup[i]] = 1
            s2[v, sup[i]] = drows[i]
    x = run_schedule(g, s1, noise, start_round, transcript)
    y = run_schedule(g, s2, noise, start_round + b, transcript)

    recv = np.flatnonzero(receivers)
    tau = params.tau_set
    sets = _decode_sets(beep, (1 - x[recv]).astype(np.uint8), tau, candidate_policy,
                        act_r, a_max)
    R_tilde = [None] * n
    for i, v in enumerate(recv):
        R_tilde[v] = frozenset(sets[i])

    # batched Phase-2 decoding over every (receiver, decoded payload) pair
    jobs = [(v, rr) for v in recv for rr in sorted(R_tilde[v])]
    decoded = [[] if receivers[v] else None for v in range(n)]
    ambiguity = 0
    if jobs:
        if candidate_policy in (EXHAUSTIVE, RESTRICTED_SETS):
            book, values = _message_book(dist, None, l_max)
        else:
            book, values = _message_book(dist, [msgs[v] for v in act], l_max)
        jsup = beep.supports([rr for _, rr in jobs])
        ysub = y[np.array([v for v, _ in jobs])[:, None], jsup]
        results = _nearest(ysub, book, values)
        for (v, rr), res in zip(jobs, results):
            is_self = active[v] and rr == r[v]
            decoded[v].append(DecodedMessage(rr, res.message, res.ambiguous, res.distance, is_self))
            if res.ambiguous and not is_self:
                ambiguity += 1

    set_ok = np.ones(n, dtype=bool)
    msg_ok = np.ones(n, dtype=bool)
    card = np.zeros(n, dtype=bool)
    delivered = [None] * n
    for v in recv:
        nb = [u for u in g.closed_neighborhood(v) if active[u]]
        truth = {r[u] for u in nb}
        got = set(R_tilde[v])
        own = r[v] if active[v] else None
        if not include_self and own is not None:
            truth.discard(own)
            got.discard(own)
        set_ok[v] = got == truth
        card[v] = len(R_tilde[v]) != len(nb)
        out = [msgs[v]] if active[v] else []
        out += [d.message for d in decoded[v] if not d.self_decode]
        delivered[v] = sorted(out)
        msg_ok[v] = delivered[v] == sorted(msgs[u] for u in nb)

    cond = None
    if check_condition:
        cond = intersection_condition(
            g, beep, r, active, params.t_intersect,
            None if candidate_policy == EXHAUSTIVE else act_r, receivers, a_max)
    return RoundResult(r, x, y, R_tilde, decoded, delivered, set_ok, msg_ok, card, receivers,
                       collision, ambiguity, cond, 2 * b, candidate_policy)


# --------------------------------------------------------------------------
# program drivers


@dataclass(frozen=True)
class RoundLog:
    round: int
    set_ok: bool
    msg_ok: bool
    collision: bool
    ambiguity_count: int
    cardinality_mismatch: int
    condition_ok: bool | None

    @property
    def ok(self):
        return self.set_ok and self.msg_ok


@dataclass
class BroadcastProgramRun:
    outputs: list
    states: list
    rounds: int
    beep_rounds: int
    terminated: bool
    outcome: str
    round_log: list = field(default_factory=list)

    @property
    def all_rounds_ok(self):
        return all(entry.ok for entry in self.round_log)


def node_seed(program_seed, node_id):
    return derive_seed(program_seed, PROGRAM, node_id)


def _check_payload(p, bits, rnd, node_id):
    if p is None:
        return None
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise TypeError(f"round {rnd}, node {node_id}: payload must be an int, got {type(p).__name__}")
    p = int(p)
    if p == 0:
        raise ValueError(f"round {rnd}, node {node_id}: payload 0 is reserved for silence")
    if p < 0 or (bits is not None and p >= (1 << bits)):
        raise ValueError(f"round {rnd}, node {node_id}: payload {p} overflows {bits} bits")
    return p


def _drive(g, program, T_max, program_seed, inputs, bits, deliver, abort_on_failure=False):
    n = g.n
    inputs = [None] * n if inputs is None else list(inputs)
    states = [program.init(g.ids[v], inputs[v], node_seed(program_seed, g.ids[v]))
              for v in range(n)]
    pending = [None] * n
    active = [True] * n
    halting = [False] * n

    def step(v, received, rnd):
        st, p, h = program.on_round(states[v], received)
        states[v] = st
        pending[v] = _check_payload(p, bits, rnd, g.ids[v])
        halting[v] = bool(h)
        if h and pending[v] is None:
            active[v] = False

    for v in range(n):
        step(v, None, 0)
    rounds = 0
    outcome = "completed"
    while any(active):
        if rounds >= T_max:
            outcome = "round-cap"
            break
        senders = list(active)
        listeners = [active[v] and not halting[v] for v in range(n)]
        received, ok = deliver(rounds, senders, listeners, list(pending))
        rounds += 1
        for v in range(n):
            if senders[v] and halting[v]:
                active[v] = False
        if abort_on_failure and not ok:
            outcome = "aborted"
            break
        for v in range(n):
            if active[v]:
                step(v, received[v], rounds)
    outputs = [program.output(s) for s in states]
    return outputs, states, rounds, outcome


def run_native_broadcast(g: Graph, program: NodeProgram, T_max, program_seed=0, inputs=None):
    """Ideal Broadcast CONGEST execution with lossless delivery."""
    bits = program.message_bits

    def deliver(rnd, senders, listeners, pending):
        out = [None] * g.n
        for v in range(g.n):
            if listeners[v]:
                out[v] = sorted(pending[u] for u in g.closed_neighborhood(v)
                                if senders[u] and pending[u] is not None)
        return out, True

    outputs, states, rounds, outcome = _drive(g, program, T_max, program_seed, inputs, bits, deliver)
    return BroadcastProgramRun(outputs, states, rounds, 0, outcome == "completed", outcome)


def run_broadcast_program(g: Graph, program: NodeProgram, T_max, params: SimParams,
                          noise: NoiseChannel, seed, program_seed=0, inputs=None,
                          codes: SimCodes | None = None, candidate_policy=RESTRICTED,
                          abort_on_failure=False, check_condition=False,
                          a_max=DEFAULT_A_MAX, l_max=DEFAULT_L_MAX, transcript=None):
    """Run ``program`` with every broadcast round simulated over noisy beeps."""
    bits = program.message_bits
    if bits is not None and bits > params.L:
        raise ValueError(f"program needs {bits}-bit messages but L={params.L}")
    codes = codes or build_codes(params, seed)
    log = []

    def deliver(rnd, senders, listeners, pending):
        res = simulate_broadcast_round(
            g, pending, params, noise, derive_seed(seed, rnd), codes,
            start_round=rnd * params.rounds_per_round, candidate_policy=candidate_policy,
            active=senders, receivers=listeners, a_max=a_max, l_max=l_max,
            check_condition=check_condition, transcript=transcript)
        log.append(RoundLog(rnd, res.all_set_ok, res.all_msg_ok, res.collision,
                            res.ambiguity_count, int(res.cardinality_mismatch[res.receivers].sum()),
                            res.condition_holds))
        out = [None if d is None else [m for m in d if m != 0] for d in res.delivered]
        return out, res.success

    outputs, states, rounds, outcome = _drive(g, program, T_max, program_seed, inputs, bits,
                                              deliver, abort_on_failure)
    return BroadcastProgramRun(outputs, states, rounds, rounds * params.rounds_per_round,
                               outcome == "completed", outcome, log)


# --------------------------------------------------------------------------
# CONGEST over Broadcast CONGEST


@dataclass
class _WrapState:
    node_id: int
    node_input: object
    seed: int
    neighbors: tuple | None = None
    inner: object = None
    slots: list = field(default_factory=list)
    slot: int = 0
    inbox: dict = field(default_factory=dict)
    stop_after_batch: bool = False


class CongestOverBroadcast(NodeProgram):
    """Broadcast program running a CONGEST program: one ID round, then Δ rounds per CONGEST round.

    Each broadcast payload is ``1 | sender ID | dest ID | message``; the leading
    flag keeps it non-zero and the sender ID lets receivers attribute it.
    """

    def __init__(self, inner: CongestProgram, g: Graph, max_local_rounds=10_000):
        self.inner = inner
        self.delta = g.max_degree
        self.id_bits = max(1, max(g.ids, default=0).bit_length())
        self.B = inner.message_bits
        self.message_bits = 1 + 2 * self.id_bits + self.B
        self.max_local_rounds = max_local_rounds

    def pack(self, sender, dest, m):
        ib, B = self.id_bits, self.B
        return (1 << (2 * ib + B)) | (sender << (ib + B)) | (dest << B) | m

    def unpack(self, p):
        ib, B = self.id_bits, self.B
        return (p >> (ib + B)) & ((1 << ib) - 1), (p >> B) & ((1 << ib) - 1), p & ((1 << B) - 1)

    def init(self, node_id, node_input, seed):
        return _WrapState(node_id, node_input, seed)

    def _start_batch(self, st, out, halted):
        if halted and not out:
            return st, None, True
        for dest, m in out.items():
            if dest not in st.neighbors:
                raise ValueError(f"node {st.node_id} addressed non-neighbour {dest}")
            if not 0 <= m < (1 << self.B):
                raise ValueError(f"node {st.node_id}: message {m} overflows {self.B} bits")
        if self.delta == 0:
            for _ in range(self.max_local_rounds):
                st.inner, out, halted = self.inner.on_round(st.inner, {})
                if halted:
                    return st, None, True
            raise RuntimeError("CONGEST program did not halt on a graph without edges")
        slots = [self.pack(st.node_id, d, out[d]) for d in sorted(out)]
        st.slots = slots + [None] * (self.delta - len(slots))
        st.slot = 0
        st.stop_after_batch = bool(halted)
        return st, st.slots[0], False

    def on_round(self, st, received):
        if received is None:
            return st, st.node_id + 1, False
        if st.neighbors is None:
            st.neighbors = tuple(sorted(p - 1 for p in received if p - 1 != st.node_id))
            st.inner = self.inner.init(st.node_id, st.neighbors, st.node_input, st.seed)
            st.inner, out, halted = self.inner.on_round(st.inner, {})
            return self._start_batch(st, out, halted)
        for p in received:
            sender, dest, m = self.unpack(p)
            if dest == st.node_id and sender != st.node_id and sender in st.neighbors:
                st.inbox[sender] = m
        st.slot += 1
        if st.slot < self.delta:
            return st, st.slots[st.slot], False
        if st.stop_after_batch:
            return st, None, True
        inbox, st.inbox = st.inbox, {}
        st.inner, out, halted = self.inner.on_round(st.inner, inbox)
        return self._start_batch(st, out, halted)

    def output(self, st):
        if st.inner is None:
            return None
        return self.inner.output(st.inner)


def congest_over_broadcast(congest_program: CongestProgram, g: Graph, L=None) -> NodeProgram:
    wrapped = CongestOverBroadcast(congest_program, g)
    if L is not None and wrapped.message_bits > L:
        raise ValueError(f"pair needs {wrapped.message_bits} bits but L={L}; raise gamma")
    return wrapped


def wrapper_rounds(T, delta):
    """Broadcast rounds used by the wrapper for a T-round CONGEST program."""
    return 1 + T * delta
