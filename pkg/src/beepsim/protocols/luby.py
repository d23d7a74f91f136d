"""Centralised Luby-style matching used as a reference and for halving statistics."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .._prf import derive_seed
from ..beepnet import Graph
from .matching import x_space


@dataclass(frozen=True)
class LubyResult:
    matching: frozenset
    iterations: int
    removed_per_iteration: tuple
    edges_per_iteration: tuple  # edge count at the start of each iteration

    @property
    def removed_fractions(self):
        return [r / m for r, m in zip(self.removed_per_iteration, self.edges_per_iteration)]


def luby_matching_oracle(g: Graph, seed) -> LubyResult:
    """Repeatedly add every edge whose random priority beats all adjacent edges."""
    rng = random.Random(derive_seed(seed, 11))
    space = x_space(g.n)
    live = set(g.edges())
    matching = set()
    removed, sizes = [], []
    while live:
        sizes.append(len(live))
        x = {e: rng.randrange(space) for e in sorted(live)}
        incident = {}
        for e in live:
            for v in e:
                incident.setdefault(v, []).append(e)
        joined = [e for e in live
                  if all(x[e] < x[f] for v in e for f in incident[v] if f != e)]
        matching.update(joined)
        ends = {v for e in joined for v in e}
        gone = {e for e in live if e[0] in ends or e[1] in ends}
        removed.append(len(gone))
        live -= gone
    return LubyResult(frozenset(matching), len(sizes), tuple(removed), tuple(sizes))
