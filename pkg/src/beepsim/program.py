"""Node-program interfaces for Broadcast CONGEST and CONGEST algorithms."""

from __future__ import annotations

from abc import ABC, abstractmethod


class NodeProgram(ABC):
    """Per-node state machine for Broadcast CONGEST.

    ``on_round`` is first called with ``received=None`` to obtain the node's
    first broadcast. Afterwards it receives the sorted multiset (a list) of
    payloads delivered from the closed neighbourhood, own payload included,
    silence omitted. It returns ``(state, payload_or_None, halted)``; a
    halting node with a payload still sends it in the next round.

    Payloads are positive integers below ``2**message_bits``. Zero is reserved
    for silence.
    """

    message_bits: int | None = None

    @abstractmethod
    def init(self, node_id, node_input, seed):
        ...

    @abstractmethod
    def on_round(self, state, received):
        ...

    @abstractmethod
    def output(self, state):
        ...


class CongestProgram(ABC):
    """Per-node state machine for CONGEST (one message per neighbour per round).

    ``on_round`` first receives an empty dict, later a dict mapping sender ID
    to message. It returns ``(state, {dest_id: message}, halted)``. Messages
    are integers in ``[0, 2**message_bits)``.
    """

    message_bits: int = 1

    @abstractmethod
    def init(self, node_id, neighbor_ids, node_input, seed):
        ...

    @abstractmethod
    def on_round(self, state, received):
        ...

    @abstractmethod
    def output(self, state):
        ...
