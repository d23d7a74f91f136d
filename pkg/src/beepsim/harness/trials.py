"""Trial runners and result records shared by the CLI subcommands."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import lru_cache

import numpy as np

from .._prf import NOISE, TRIAL, derive_seed
from ..beepnet import NoiseChannel, graph_from_spec
from ..protocols.localbcast import gen_local_broadcast_task, local_broadcast_program
from ..protocols.matching import (
    adjacent_join_violations,
    brute_force_output_check,
    iterations_used,
    matching_gamma,
    maximal_matching_program,
    verify_matching,
    x_collisions,
)
from ..simcast import (
    SimParams,
    build_codes,
    run_broadcast_program,
    run_native_broadcast,
    simulate_broadcast_round,
)

SCHEMA = 1


@dataclass
class TrialRecord:
    trial: int
    seed: int
    n: int
    delta: int
    eps: float | None = None
    gamma: float | None = None
    c_eps: int | None = None
    mode: str | None = None
    candidate_policy: str | None = None
    rounds_used: int | None = None
    set_decode_ok: bool | None = None
    msg_decode_ok: bool | None = None
    collision_flag: bool | None = None
    ambiguity_count: int | None = None
    condition_ok: bool | None = None
    verified: bool | None = None
    terminated: bool | None = None
    iterations: int | None = None
    sim_rounds: int | None = None
    task_ok: bool | None = None
    native_agree: bool | None = None
    wall_time: float | None = None

    @property
    def success(self):
        return bool(self.set_decode_ok) and bool(self.msg_decode_ok)


FIELDS = [f.name for f in fields(TrialRecord)]


def trial_seed(seed, trial):
    return derive_seed(seed, TRIAL, trial)


def code_seed(seed):
    return derive_seed(seed, 0xC0DE)


_graph_cache = {}


def trial_graph(spec, tseed):
    """Random specs without an explicit seed are resampled per trial."""
    s = spec.strip().lower()
    if s.startswith("rand:") and "seed=" not in s:
        return graph_from_spec(spec, seed=tseed)
    g = _graph_cache.get(spec)
    if g is None:
        g = _graph_cache[spec] = graph_from_spec(spec)
    return g


@lru_cache(maxsize=16)
def shared_codes(params: SimParams, seed, verify):
    return build_codes(params, seed, verify=verify)


def make_params(cfg, n, delta, L=None):
    return SimParams.create(n, delta, cfg["eps"], cfg["ceps"], gamma=cfg.get("gamma"),
                            L=L if L is not None else cfg.get("L"), mode=cfg.get("mode", "empirical"))


def graph_delta(cfg, g):
    if cfg.get("delta") is not None:
        return cfg["delta"]
    s = cfg["graph"].strip().lower()
    if s.startswith("rand:"):
        for part in s[5:].split(","):
            k, _, v = part.partition("=")
            if k.strip() == "dcap":
                return int(v)
    return g.max_degree


def _noise(cfg, tseed):
    return NoiseChannel(cfg["eps"], derive_seed(tseed, NOISE), cfg.get("self_knowledge", False))


# --------------------------------------------------------------------------
# single-round trials


def round_trial(cfg, trial):
    t0 = time.perf_counter()
    tseed = trial_seed(cfg["seed"], trial)
    g = trial_graph(cfg["graph"], tseed)
    params = make_params(cfg, cfg.get("n") or g.n, graph_delta(cfg, g))
    codes = shared_codes(params, code_seed(cfg["seed"]), cfg.get("verify_codes", False))
    rng = np.random.default_rng(derive_seed(tseed, 2))
    msgs = [int(x) for x in rng.integers(0, 1 << min(params.L, 62), size=g.n)]
    res = simulate_broadcast_round(
        g, msgs, params, _noise(cfg, tseed), derive_seed(tseed, 3), codes,
        candidate_policy=cfg.get("policy", "restricted"),
        check_condition=cfg.get("check_condition", True))
    return TrialRecord(
        trial, tseed, g.n, params.delta, params.epsilon, params.gamma, params.c_eps, params.mode,
        res.candidate_policy, res.rounds_used, res.all_set_ok, res.all_msg_ok, res.collision,
        res.ambiguity_count, res.condition_holds, codes.verified,
        wall_time=time.perf_counter() - t0)


# --------------------------------------------------------------------------
# matching trials


def matching_params(cfg, n, delta):
    gamma, width = matching_gamma(n)
    return SimParams.create(n, delta, cfg["eps"], cfg["ceps"], L=width,
                            mode=cfg.get("mode", "empirical"))


def matching_trial(cfg, trial):
    t0 = time.perf_counter()
    tseed = trial_seed(cfg["seed"], trial)
    g = trial_graph(cfg["graph"], tseed)
    n = max(g.n, 2)
    prog_seed = derive_seed(tseed, 4)
    native = run_native_broadcast(g, maximal_matching_program(n), cfg.get("t_max", 10_000),
                                  program_seed=prog_seed)
    rec = TrialRecord(trial, tseed, g.n, graph_delta(cfg, g))
    if cfg.get("via", "native") == "native":
        run = native
    else:
        params = matching_params(cfg, n, graph_delta(cfg, g))
        codes = shared_codes(params, code_seed(cfg["seed"]), False)
        run = run_broadcast_program(
            g, maximal_matching_program(n), cfg.get("t_max", 10_000), params, _noise(cfg, tseed),
            derive_seed(tseed, 3), program_seed=prog_seed, codes=codes,
            candidate_policy=cfg.get("policy", "restricted"))
        rec.eps, rec.gamma, rec.c_eps, rec.mode = params.epsilon, params.gamma, params.c_eps, params.mode
        rec.candidate_policy = cfg.get("policy", "restricted")
        rec.rounds_used = run.beep_rounds
        rec.set_decode_ok = all(e.set_ok for e in run.round_log)
        rec.msg_decode_ok = all(e.msg_ok for e in run.round_log)
        rec.ambiguity_count = sum(e.ambiguity_count for e in run.round_log)
        rec.native_agree = run.outputs == native.outputs
    verdict = verify_matching(g, run.outputs)
    brute = brute_force_output_check(g, run.outputs)
    capped = any(getattr(s, "capped", False) for s in run.states)
    rec.terminated = run.terminated and not capped
    rec.verified = verdict.ok
    rec.task_ok = verdict.ok == brute and not adjacent_join_violations(g, run.states)
    rec.collision_flag = x_collisions(run.states) > 0
    rec.iterations = iterations_used(run.states)
    rec.sim_rounds = run.rounds
    rec.wall_time = time.perf_counter() - t0
    return rec


def matching_outputs(cfg, trial):
    """Outputs of one matching trial (for the text output format)."""
    tseed = trial_seed(cfg["seed"], trial)
    g = trial_graph(cfg["graph"], tseed)
    run = run_native_broadcast(g, maximal_matching_program(max(g.n, 2)),
                               cfg.get("t_max", 10_000), program_seed=derive_seed(tseed, 4))
    return g, run.outputs


# --------------------------------------------------------------------------
# local broadcast trials


def localbcast_params(cfg, g, delta):
    width = 1 + 2 * max(1, max(g.ids).bit_length()) + cfg["B"]
    L = cfg.get("L")
    if L is not None and L < width:
        raise ValueError(f"an (ID, ID, {cfg['B']}-bit message) pair needs {width} bits but L={L};"
                         " multi-chunk messages are not supported")
    return SimParams.create(max(g.n, 2), delta, cfg["eps"], cfg["ceps"], L=L or width,
                            mode=cfg.get("mode", "empirical"))


def localbcast_trial(cfg, trial):
    t0 = time.perf_counter()
    tseed = trial_seed(cfg["seed"], trial)
    g = trial_graph(cfg["graph"], tseed)
    task = gen_local_broadcast_task(g, cfg["B"], derive_seed(tseed, 5))
    delta = graph_delta(cfg, g)
    rec = TrialRecord(trial, tseed, g.n, delta)
    params = localbcast_params(cfg, g, delta)
    prog = local_broadcast_program(task, g.n, params.L)
    if cfg.get("via", "native") == "native":
        run = run_native_broadcast(g, prog, cfg.get("t_max", 10_000), inputs=task.inputs)
    else:
        codes = shared_codes(params, code_seed(cfg["seed"]), cfg.get("verify_codes", False))
        run = run_broadcast_program(
            g, prog, cfg.get("t_max", 10_000), params, _noise(cfg, tseed), derive_seed(tseed, 3),
            inputs=task.inputs, codes=codes, candidate_policy=cfg.get("policy", "restricted"))
        rec.eps, rec.gamma, rec.c_eps, rec.mode = params.epsilon, params.gamma, params.c_eps, params.mode
        rec.candidate_policy = cfg.get("policy", "restricted")
        rec.rounds_used = run.beep_rounds
        rec.set_decode_ok = all(e.set_ok for e in run.round_log)
        rec.msg_decode_ok = all(e.msg_ok for e in run.round_log)
        rec.collision_flag = any(e.collision for e in run.round_log)
        rec.ambiguity_count = sum(e.ambiguity_count for e in run.round_log)
        rec.verified = codes.verified
    rec.sim_rounds = run.rounds
    rec.terminated = run.terminated
    rec.task_ok = all(task.check(run.outputs))
    rec.wall_time = time.perf_counter() - t0
    return rec


# --------------------------------------------------------------------------
# orchestration and output


def _call(job):
    fn, cfg, trial = job
    return fn(cfg, trial)


def run_trials(fn, cfg, trials, jobs=1):
    """Records in trial-index order regardless of ``jobs``."""
    work = [(fn, cfg, t) for t in range(trials)]
    if jobs <= 1 or trials <= 1:
        return [_call(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, work, chunksize=max(1, trials // (4 * jobs))))


def rate(flags):
    """(mean, standard error) of a list of booleans; (nan, nan) when empty."""
    k = len(flags)
    if not k:
        return math.nan, math.nan
    p = sum(bool(f) for f in flags) / k
    return p, math.sqrt(p * (1 - p) / k)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_records(records, config, fmt="csv"):
    if fmt == "json":
        lines = [json.dumps({"schema": SCHEMA, "config": config}, sort_keys=True)]
        lines += [json.dumps(asdict(r)) for r in records]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    buf.write(f"# config={json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in records:
        w.writerow([_cell(getattr(r, f)) for f in FIELDS])
    return buf.getvalue()


def _parse_cell(name, text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    kind = TrialRecord.__dataclass_fields__[name].type
    if "float" in str(kind):
        return float(text)
    if "int" in str(kind):
        return int(text)
    return text


def read_records(text):
    """Parse CSV or JSON-lines output back into (config, records)."""
    lines = text.splitlines()
    if lines and lines[0].startswith("{"):
        head = json.loads(lines[0])
        return head["config"], [TrialRecord(**json.loads(x)) for x in lines[1:] if x.strip()]
    config = None
    body = []
    for line in lines:
        if line.startswith("# config="):
            config = json.loads(line[len("# config="):])
        elif not line.startswith("#"):
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return config, []
    header = rows[0]
    return config, [TrialRecord(**{k: _parse_cell(k, v) for k, v in zip(header, row)})
                    for row in rows[1:]]


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        config, _ = read_records(fh.read())
    if config is None:
        raise ValueError(f"{path} has no config header")
    return config
