"""Loopy belief propagation over the fault network.

The network is bipartite: variables on one side, noisy-conjunction factors
on the other. Messages are length-2 vectors over (correct, incorrect),
normalized after every update. Factor messages have a closed form that is
linear in the factor degree; a naive enumeration variant and an exact
joint-enumeration oracle exist for cross-checking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import DegreeTooLarge, TooLarge
from .model import FaultNet

_HALF = (0.5, 0.5)


@dataclass
class InferenceConfig:
    mode: str = "optimized"  # "optimized" | "naive"
    max_iterations: int = 100
    convergence_eps: float = 1e-6
    naive_degree_cap: int = 20
    damping: float = 0.0


@dataclass
class InferenceResult:
    marginals: dict  # variable index -> P(correct)
    converged: bool
    iterations: int
    log: list = field(default_factory=list)

    def p_faulty(self, idx):
        return 1.0 - self.marginals[idx]


def _normalize(t, f):
    s = t + f
    if s <= 0.0:
        return _HALF
    return (t / s, f / s)


def _base_message(var):
    if var.evidence is not None:
        return (1.0, 0.0) if var.evidence else (0.0, 1.0)
    return (var.prior, 1.0 - var.prior)


def var_to_factor(prior, evidence, incoming) -> tuple:
    """Message a variable sends to one factor: its prior (or clamped
    evidence) times the messages arriving from every other factor."""
    if evidence is not None:
        return (1.0, 0.0) if evidence else (0.0, 1.0)
    t, f = prior, 1.0 - prior
    for mt, mf in incoming:
        t *= mt
        f *= mf
    return _normalize(t, f)


def factor_to_child_optimized(p0, parent_msgs) -> tuple:
    """Closed form of the sum over parent assignments for the child side."""
    prod_true = 1.0
    for mt, _ in parent_msgs:
        prod_true *= mt
    t = (1.0 - p0) * prod_true + p0
    f = (1.0 - p0) * (1.0 - prod_true)
    return _normalize(t, f)


def factor_to_parent_optimized(p0, child_msg, other_parent_msgs) -> tuple:
    """Closed form for one parent: everything except the all-true case
    collapses into a constant."""
    ct, cf = child_msg
    b = p0 * ct + (1.0 - p0) * cf
    prod_true = 1.0
    for mt, _ in other_parent_msgs:
        prod_true *= mt
    t = (ct - b) * prod_true + b
    return _normalize(t, b)


def _cpd(p0, child_val, parent_vals):
    if all(parent_vals):
        return 1.0 if child_val else 0.0
    return p0 if child_val else 1.0 - p0


def factor_to_var_naive(p0, msgs, target_pos) -> tuple:
    """Brute-force message: enumerate every assignment of the other
    variables attached to the factor. msgs[0] is the child's message."""
    n = len(msgs)
    others = [i for i in range(n) if i != target_pos]
    out = [0.0, 0.0]
    for combo in itertools.product((True, False), repeat=len(others)):
        weight = 1.0
        for i, val in zip(others, combo):
            weight *= msgs[i][0] if val else msgs[i][1]
        vals = [None] * n
        for i, val in zip(others, combo):
            vals[i] = val
        for target_val in (True, False):
            vals[target_pos] = target_val
            p = _cpd(p0, vals[0], vals[1:])
            out[0 if target_val else 1] += weight * p
    return _normalize(out[0], out[1])


class _Engine:
    def __init__(self, net: FaultNet, cfg: InferenceConfig):
        self.net = net
        self.cfg = cfg
        if cfg.mode == "naive":
            deg = net.max_factor_degree()
            if deg > cfg.naive_degree_cap:
                raise DegreeTooLarge(
                    f"factor of degree {deg} exceeds the naive-mode cap "
                    f"of {cfg.naive_degree_cap}")
        # incident[v] = [(factor index, position in factor.variables)]
        self.incident = [[] for _ in net.variables]
        for a, fac in enumerate(net.factors):
            for pos, v in enumerate(fac.variables):
                self.incident[v].append((a, pos))
        self.f2v = [[_HALF] * len(f.variables) for f in net.factors]
        self.v2f = [[_HALF] * len(f.variables) for f in net.factors]
        self.base = [_base_message(v) for v in net.variables]

    def _update_v2f(self):
        for v, inc in enumerate(self.incident):
            if not inc:
                continue
            if self.net.variables[v].evidence is not None:
                msg = self.base[v]
                for a, pos in inc:
                    self.v2f[a][pos] = msg
                continue
            msgs = [self.f2v[a][pos] for a, pos in inc]
            n = len(msgs)
            # Exclude-one products via prefix/suffix sweeps.
            pre = [(1.0, 1.0)] * (n + 1)
            for i, (mt, mf) in enumerate(msgs):
                pre[i + 1] = (pre[i][0] * mt, pre[i][1] * mf)
            suf = [(1.0, 1.0)] * (n + 1)
            for i in range(n - 1, -1, -1):
                mt, mf = msgs[i]
                suf[i] = (suf[i + 1][0] * mt, suf[i + 1][1] * mf)
            bt, bf = self.base[v]
            for i, (a, pos) in enumerate(inc):
                t = bt * pre[i][0] * suf[i + 1][0]
                f = bf * pre[i][1] * suf[i + 1][1]
                self.v2f[a][pos] = _normalize(t, f)

    def _update_f2v(self):
        delta = 0.0
        naive = self.cfg.mode == "naive"
        damping = self.cfg.damping
        for a, fac in enumerate(self.net.factors):
            inbox = self.v2f[a]
            old = self.f2v[a]
            new = [None] * len(inbox)
            if naive:
                for pos in range(len(inbox)):
                    new[pos] = factor_to_var_naive(fac.p0, inbox, pos)
            else:
                parents = inbox[1:]
                n = len(parents)
                pre = [1.0] * (n + 1)
                for i, (mt, _) in enumerate(parents):
                    pre[i + 1] = pre[i] * mt
                suf = [1.0] * (n + 1)
                for i in range(n - 1, -1, -1):
                    suf[i] = suf[i + 1] * parents[i][0]
                p0 = fac.p0
                t = (1.0 - p0) * pre[n] + p0
                f = (1.0 - p0) * (1.0 - pre[n])
                new[0] = _normalize(t, f)
                ct, cf = inbox[0]
                b = p0 * ct + (1.0 - p0) * cf
                for i in range(n):
                    t = (ct - b) * pre[i] * suf[i + 1] + b
                    new[i + 1] = _normalize(t, b)
            for pos, msg in enumerate(new):
                if damping > 0.0:
                    msg = _normalize(
                        (1.0 - damping) * msg[0] + damping * old[pos][0],
                        (1.0 - damping) * msg[1] + damping * old[pos][1])
                delta = max(delta, abs(msg[0] - old[pos][0]),
                            abs(msg[1] - old[pos][1]))
                old[pos] = msg
        return delta

    def run(self) -> InferenceResult:
        converged = False
        iterations = 0
        for it in range(1, self.cfg.max_iterations + 1):
            iterations = it
            self._update_v2f()
            delta = self._update_f2v()
            if delta < self.cfg.convergence_eps:
                converged = True
                break
        marginals = {}
        for v, var in enumerate(self.net.variables):
            if var.evidence is not None:
                marginals[v] = 1.0 if var.evidence else 0.0
                continue
            t, f = self.base[v]
            for a, pos in self.incident[v]:
                mt, mf = self.f2v[a][pos]
                t *= mt
                f *= mf
                if t + f > 0.0:
                    t, f = _normalize(t, f)
            marginals[v] = _normalize(t, f)[0]
        log = [f"belief propagation: {iterations} iterations, "
               f"{'converged' if converged else 'did not converge'}"]
        return InferenceResult(marginals, converged, iterations, log)


def run_lbp(net: FaultNet, cfg: InferenceConfig | None = None) -> InferenceResult:
    return _Engine(net, cfg or InferenceConfig()).run()


def exact_marginals(net: FaultNet, cap: int = 20) -> dict:
    """Exact posterior P(correct) per variable by joint enumeration."""
    n = len(net.variables)
    if n > cap:
        raise TooLarge(f"{n} variables exceed the exact-enumeration cap {cap}")
    children = {f.child for f in net.factors}
    total = 0.0
    acc = [0.0] * n
    for bits in itertools.product((True, False), repeat=n):
        weight = 1.0
        ok = True
        for v, var in enumerate(net.variables):
            if var.evidence is not None and bits[v] != var.evidence:
                ok = False
                break
            if v not in children:
                weight *= var.prior if bits[v] else 1.0 - var.prior
        if not ok or weight == 0.0:
            continue
        for f in net.factors:
            weight *= _cpd(f.p0, bits[f.child], [bits[p] for p in f.parents])
            if weight == 0.0:
                break
        if weight == 0.0:
            continue
        total += weight
        for v in range(n):
            if bits[v]:
                acc[v] += weight
    if total == 0.0:
        raise TooLarge("evidence has zero probability under the model")
    return {v: acc[v] / total for v in range(n)}
