"""Benchmark harness: mutation-based fault seeding over the shipped corpus
and end-to-end comparison against the spectrum baselines."""

from __future__ import annotations

import copy
import json
import random
import time
from dataclasses import dataclass, field, replace
from importlib import resources

from .errors import NoViableMutants
from .lang import ast as A
from .lang import format_program, parse
from .pipeline import RunConfig, localize
from .ranking import DSTAR, OCHIAI, sbfl_report, topk_eval
from .tracing import profile

# operator -> replacement; both directions listed explicitly
OP_SWAPS = {
    "<=": "<", "<": "<=",
    ">=": ">", ">": ">=",
    "==": "!=", "!=": "==",
    "+": "-", "-": "+",
    "*": "/", "/": "*",
    "&&": "||", "||": "&&",
}


@dataclass(frozen=True)
class MutationPoint:
    sid: int
    slot: str  # which expression of the statement ("expr", "cond", "index")
    path: tuple  # child indices from the slot root to the mutated node
    rewrite: str  # human-readable description, e.g. "<= -> <"


@dataclass
class FaultSeed:
    base_path: str
    sid: int
    rewrite: str
    source: str  # full mutant program text
    rng_seed: int

    @property
    def ground_truth(self):
        return {self.sid}


def _expr_children(expr):
    if isinstance(expr, A.Binary):
        return [expr.left, expr.right]
    if isinstance(expr, A.Unary):
        return [expr.operand]
    if isinstance(expr, A.Call):
        return list(expr.args)
    if isinstance(expr, A.Index):
        return [expr.base, expr.index]
    if isinstance(expr, A.ArrayLit):
        return list(expr.items)
    return []


def _replace_child(expr, i, child):
    if isinstance(expr, A.Binary):
        return replace(expr, left=child) if i == 0 else replace(expr, right=child)
    if isinstance(expr, A.Unary):
        return replace(expr, operand=child)
    if isinstance(expr, A.Call):
        args = list(expr.args)
        args[i] = child
        return replace(expr, args=tuple(args))
    if isinstance(expr, A.Index):
        return replace(expr, base=child) if i == 0 else replace(expr, index=child)
    if isinstance(expr, A.ArrayLit):
        items = list(expr.items)
        items[i] = child
        return replace(expr, items=tuple(items))
    raise TypeError(f"no children: {expr!r}")


def _points_in_expr(expr, path):
    points = []
    if isinstance(expr, A.Binary) and expr.op in OP_SWAPS:
        points.append((path, f"{expr.op} -> {OP_SWAPS[expr.op]}"))
    if isinstance(expr, A.IntLit):
        points.append((path, f"{expr.value} -> {expr.value + 1}"))
        points.append((path, f"{expr.value} -> {expr.value - 1}"))
    for i, child in enumerate(_expr_children(expr)):
        points.extend(_points_in_expr(child, path + (i,)))
    return points


def _statement_slots(stmt):
    if isinstance(stmt, A.If) or isinstance(stmt, A.While):
        return [("cond", stmt.cond)]
    if isinstance(stmt, A.IndexAssign):
        return [("index", stmt.index), ("expr", stmt.expr)]
    expr = getattr(stmt, "expr", None)
    return [("expr", expr)] if expr is not None else []


def enumerate_mutations(program) -> list:
    points = []
    for fn in program.functions.values():
        if fn.name.startswith("test_"):
            continue
        for stmt in A.walk_statements(fn.body):
            for slot, expr in _statement_slots(stmt):
                for path, rewrite in _points_in_expr(expr, ()):
                    points.append(MutationPoint(stmt.sid, slot, path, rewrite))
    return points


def _mutate_node(expr, path, rewrite):
    if not path:
        if isinstance(expr, A.Binary):
            return replace(expr, op=OP_SWAPS[expr.op])
        if isinstance(expr, A.IntLit):
            target = rewrite.split(" -> ")[1]
            if target not in (str(expr.value + 1), str(expr.value - 1)):
                raise ValueError(f"bad literal rewrite {rewrite!r}")
            return A.IntLit(int(target))
        raise TypeError(f"cannot mutate {expr!r}")
    child = _expr_children(expr)[path[0]]
    return _replace_child(expr, path[0], _mutate_node(child, path[1:], rewrite))


def apply_mutation(program, point: MutationPoint) -> str:
    """Return mutant source text; statement ids are preserved because the
    mutation never changes program shape."""
    mutant = copy.deepcopy(program)
    for fn in mutant.functions.values():
        for stmt in A.walk_statements(fn.body):
            if stmt.sid != point.sid:
                continue
            if point.slot == "cond":
                stmt.cond = _mutate_node(stmt.cond, point.path, point.rewrite)
            elif point.slot == "index":
                stmt.index = _mutate_node(stmt.index, point.path, point.rewrite)
            else:
                stmt.expr = _mutate_node(stmt.expr, point.path, point.rewrite)
            return format_program(mutant)
    raise ValueError(f"statement {point.sid} not found")


def seed_faults(program, n, rng_seed, step_budget=1_000_000) -> list:
    """Draw up to n single-statement mutants with mixed test outcomes."""
    points = enumerate_mutations(program)
    rng = random.Random(rng_seed)
    rng.shuffle(points)
    seeds = []
    for point in points:
        if len(seeds) >= n:
            break
        source = apply_mutation(program, point)
        try:
            mutant = parse(source, program.source_path)
            prof = profile(mutant, step_budget=step_budget)
        except Exception:
            continue
        if prof.num_failing == 0 or prof.num_passing == 0:
            continue
        seeds.append(FaultSeed(program.source_path, point.sid,
                               point.rewrite, source, rng_seed))
    if not seeds:
        raise NoViableMutants(
            f"no mutation of {program.source_path} flips some tests "
            "while keeping others passing")
    return seeds


# --- corpus ---

def corpus_dir():
    return resources.files("semfl") / "corpus"


def load_manifest() -> list:
    """Manifest entries: {"name", "file", "tests"} per shipped program."""
    text = (corpus_dir() / "manifest.json").read_text()
    return json.loads(text)


def load_corpus_program(name):
    for entry in load_manifest():
        if entry["name"] == name:
            path = corpus_dir() / entry["file"]
            return parse(path.read_text(), entry["file"])
    raise KeyError(f"no corpus program named {name!r}")


def corpus_seeds(per_program, rng_seed) -> list:
    seeds = []
    for entry in load_manifest():
        program = load_corpus_program(entry["name"])
        seeds.extend(seed_faults(program, per_program, rng_seed))
    return seeds


# --- batch runs ---

@dataclass
class CaseResult:
    case: str
    config: str
    error: str = ""
    hits: dict = field(default_factory=dict)  # ranker -> {k: bool}
    ranks: dict = field(default_factory=dict)  # ranker -> best rank
    timings: dict = field(default_factory=dict)

    def to_record(self):
        return {"case": self.case, "config": self.config, "error": self.error,
                "hits": {r: {str(k): v for k, v in h.items()}
                         for r, h in self.hits.items()},
                "ranks": self.ranks}


def _best_rank(report, ground_truth):
    ranks = [e.rank for e in report.entries if e.sid in ground_truth]
    return min(ranks) if ranks else None


def run_case(seed: FaultSeed, cfg: RunConfig, ks=(1, 3, 5, 10)) -> CaseResult:
    case = f"{seed.base_path}#s{seed.sid}[{seed.rewrite}]"
    result = CaseResult(case=case, config="")
    t0 = time.perf_counter()
    try:
        program = parse(seed.source, seed.base_path)
        res = localize(program, cfg)
        gt = seed.ground_truth
        result.hits["semfl"] = topk_eval(res.report, gt, ks)
        result.ranks["semfl"] = _best_rank(res.report, gt)
        for name, formula in (("ochiai", OCHIAI), ("dstar", DSTAR)):
            rep = sbfl_report(res.profile, formula, program)
            result.hits[name] = topk_eval(rep, gt, ks)
            result.ranks[name] = _best_rank(rep, gt)
        result.timings = dict(res.timings)
    except Exception as exc:  # record, never abort the batch
        result.error = f"{type(exc).__name__}: {exc}"
    result.timings["total"] = time.perf_counter() - t0
    return result


def run_benchmark(seeds, configs, ks=(1, 3, 5, 10)) -> dict:
    """configs: list of (name, RunConfig). Returns rows plus aggregate
    top-k hit counts per (config, ranker)."""
    rows = []
    for name, cfg in configs:
        for seed in seeds:
            r = run_case(seed, cfg, ks)
            r.config = name
            rows.append(r)
    aggregate = {}
    for name, _ in configs:
        for ranker in ("semfl", "ochiai", "dstar"):
            counts = {k: 0 for k in ks}
            for r in rows:
                if r.config == name and not r.error:
                    for k in ks:
                        counts[k] += bool(r.hits.get(ranker, {}).get(k))
            aggregate[(name, ranker)] = counts
    return {"rows": rows, "aggregate": aggregate, "ks": list(ks)}


def format_results(results) -> str:
    ks = results["ks"]
    lines = [f"{'config':<24} {'ranker':<8} " +
             " ".join(f"top-{k:<3}" for k in ks) + " cases"]
    seen_configs = []
    for (cfg, ranker), counts in results["aggregate"].items():
        if cfg not in seen_configs:
            seen_configs.append(cfg)
        n = sum(1 for r in results["rows"] if r.config == cfg and not r.error)
        lines.append(f"{cfg:<24} {ranker:<8} " +
                     " ".join(f"{counts[k]:<7}" for k in ks) + f" {n}")
    errors = [r for r in results["rows"] if r.error]
    for r in errors:
        lines.append(f"error: {r.case} [{r.config}]: {r.error}")
    return "\n".join(lines) + "\n"


def results_to_json(results) -> str:
    doc = {
        "ks": results["ks"],
        "rows": [r.to_record() for r in results["rows"]],
        "aggregate": [
            {"config": cfg, "ranker": ranker,
             "hits": {str(k): v for k, v in counts.items()}}
            for (cfg, ranker), counts in results["aggregate"].items()
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
