"""Search for the smallest practical constant c reaching a target success rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..protocols.matching import matching_gamma
from ..simcast import separation_floor
from .trials import matching_trial, rate, round_trial, run_trials


class UnreachableTarget(ValueError):
    pass


@dataclass
class TuneResult:
    c: int | None
    rate: float
    reached: bool
    floor: int
    history: list = field(default_factory=list)  # (c, rate) in evaluation order

    @property
    def best(self):
        return max(self.history, key=lambda h: (h[1], -h[0])) if self.history else (None, math.nan)


def trial_success(rec, eps, task="round"):
    """Round trials count only when every node decodes; at eps=0 the intersection
    condition must also hold. Matching trials need a verified output and every
    simulated round decoded, so a robust protocol cannot mask a failing simulation."""
    if task == "matching":
        return bool(rec.verified) and rec.success
    ok = rec.success
    if eps == 0:
        ok = ok and bool(rec.condition_ok)
    return ok


def _message_width(cfg):
    if cfg.get("task", "round") == "matching":
        return matching_gamma(cfg["n"])[1]
    if cfg.get("L"):
        return cfg["L"]
    return math.ceil((cfg.get("gamma") or 1.0) * math.log2(cfg["n"]) - 1e-9)


def tune_constants(cfg, target, trials, c_max=64, jobs=1):
    """Doubling then bisection over integer c; assumes success is monotone in c."""
    if not 0 <= target <= 1:
        raise UnreachableTarget(f"target {target} is unreachable (rates lie in [0, 1])")
    eps = cfg["eps"]
    floor = separation_floor(_message_width(cfg), 0.0) if eps == 0 else 1
    fn = matching_trial if cfg.get("task", "round") == "matching" else round_trial
    history = []
    cache = {}

    def evaluate(c):
        if c not in cache:
            sub = dict(cfg, ceps=c)
            if fn is matching_trial:
                sub["via"] = "beeps"
            recs = run_trials(fn, sub, trials, jobs)
            cache[c] = rate([trial_success(r, eps, cfg.get("task", "round")) for r in recs])[0]
            history.append((c, cache[c]))
        return cache[c]

    lo, c = floor - 1, floor
    while evaluate(c) < target:
        lo = c
        if c >= c_max:
            best = max(history, key=lambda h: (h[1], -h[0]))
            return TuneResult(None, best[1], False, floor, history)
        c = min(2 * c, c_max)
    hi = c
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid) >= target:
            hi = mid
        else:
            lo = mid
    return TuneResult(hi, cache[hi], True, floor, history)


def default_graph_spec(n, delta, p=None):
    p = p if p is not None else min(1.0, 1.5 * delta / max(1, n - 1))
    return f"rand:n={n},dcap={delta},p={p:g}"
