"""Dependency-graph tests: data and control edges, virtual call edges,
exception control, acyclicity, and malformed-trace rejection."""

import pytest

from semfl.ddg import build_ddg, dump_ddg
from semfl.errors import MalformedTrace
from semfl.lang import parse
from semfl.tracing import CALL_EXIT, CALL_SUMMARY, EXEC, Trace, TraceEvent, trace

COND_TEST = """
fn foo(a) {
    if (a <= 2) {
        a = a + 1;
    }
    return a <= 2;
}

fn test_pass() {
    assert(foo(1));
}

fn test_fail() {
    assert(foo(2));
}
"""


def _cond_graph():
    prog = parse(COND_TEST)
    traces = [trace(prog, t, {"foo"}) for t in ("test_pass", "test_fail")]
    return prog, traces, build_ddg(prog, traces)


def test_cond_example_statement_nodes():
    prog, _, g = _cond_graph()
    assert g.statement_nodes == list(prog.functions["foo"].statement_ids())


def test_cond_example_value_chain_per_test():
    prog, traces, g = _cond_graph()
    cond_sid, assign_sid, ret_sid = prog.functions["foo"].statement_ids()
    for tr in traces:
        enter, cond, assign, ret = tr.events[:4]
        a_in = (tr.test, enter.aux["params"][0])
        v_cond = (tr.test, cond.writes[0])
        v_assign = (tr.test, assign.writes[0])
        v_ret = (tr.test, ret.writes[0])
        # the argument is an input: no producer, prior-1 value
        assert a_in in g.value_nodes and a_in not in g.producer
        assert g.producer[v_cond] == cond_sid
        assert g.producer[v_assign] == assign_sid
        assert g.producer[v_ret] == ret_sid
        # condition reads a; assignment reads a under the condition's
        # control; return reads only the assigned value (the branch
        # predicate is popped at its immediate post-dominator)
        assert g.value_parents[v_cond] == [a_in]
        assert g.value_parents[v_assign] == [a_in, v_cond]
        assert g.value_parents[v_ret] == [v_assign]
        assert ("ctrl", v_cond, v_assign) in g.edges
        assert ("ctrl", v_cond, v_ret) not in g.edges


def test_cond_example_evidence_anchors():
    _, traces, g = _cond_graph()
    anchors = dict(g.evidence_anchors)
    expected = {(tr.test, tr.events[3].writes[0]): tr.test == "test_pass"
                for tr in traces}
    assert anchors == expected


def test_straight_line_has_no_ctrl_edges():
    prog = parse("""
fn f(a) {
    let x = a + 1;
    let y = x * 2;
    return y;
}

fn test_f() {
    assert(f(1) == 4);
}
""")
    g = build_ddg(prog, [trace(prog, "test_f", {"f"})])
    assert all(kind != "ctrl" for kind, _, _ in g.edges)
    assert g.check_acyclic()


def test_while_predicate_is_replaced_on_top():
    prog = parse("""
fn count(n) {
    let i = 0;
    while (i < n) {
        i = i + 1;
    }
    return i;
}

fn test_count() {
    assert(count(2) == 2);
}
""")
    tr = trace(prog, "test_count", {"count"})
    g = build_ddg(prog, [tr])
    fn = prog.functions["count"]
    _, cond_sid, body_sid, ret_sid = fn.statement_ids()
    conds = [e for e in tr.events if e.kind == EXEC and e.stmt == cond_sid]
    bodies = [e for e in tr.events if e.kind == EXEC and e.stmt == body_sid]
    assert len(conds) == 3 and len(bodies) == 2
    t = tr.test
    # each body execution is controlled by the latest condition value only
    for cond_ev, body_ev in zip(conds, bodies):
        key = (t, body_ev.writes[0])
        ctrl = [p for p in g.value_parents[key]
                if ("ctrl", p, key) in g.edges]
        assert ctrl == [(t, cond_ev.writes[0])]
    # the predicate is popped at the loop's post-dominator: the return
    # reads the final counter but is not controlled by the condition
    ret_ev = next(e for e in tr.events if e.kind == EXEC and e.stmt == ret_sid)
    ret_key = (t, ret_ev.writes[0])
    assert g.value_parents[ret_key] == [(t, bodies[-1].writes[0])]


NESTED = """
fn callback(x) {
    return x * 2;
}

fn driver(x) {
    let y = callback(x + 1);
    return y + 3;
}

fn test_nested() {
    assert(driver(1) == 7);
}
"""


def test_virtual_call_edges_bridge_untraced_driver():
    prog = parse(NESTED)
    tr = trace(prog, "test_nested", {"callback"})
    g = build_ddg(prog, [tr])
    t = tr.test
    enter, ret, _, summary = tr.events[:4]
    param = (t, enter.aux["params"][0])
    cb_ret = (t, ret.writes[0])
    drv_ret = (t, summary.aux["ret"])
    # the summary's output reads the nested traced call's return value
    assert cb_ret in g.value_parents[drv_ret]
    # and the nested call's argument is produced by the summary statement
    assert g.producer[param] == summary.stmt
    assert g.check_acyclic()


def test_virtual_call_edges_can_be_disabled():
    prog = parse(NESTED)
    tr = trace(prog, "test_nested", {"callback"})
    g_on = build_ddg(prog, [tr], virtual_call_edges=True)
    g_off = build_ddg(prog, [tr], virtual_call_edges=False)
    assert g_off.edge_count() < g_on.edge_count()
    t = tr.test
    param = (t, tr.events[0].aux["params"][0])
    assert param not in g_off.producer  # argument degrades to an input


EXCEPTIONAL = """
fn risky(x) {
    if (x < 0) {
        throw 7;
    }
    return x;
}

fn test_catch() {
    let z = 0;
    try {
        z = risky(0 - 1);
    } catch (e) {
        z = 5;
    }
    assert(z == 5);
}
"""


def test_caught_exception_controls_handler():
    prog = parse(EXCEPTIONAL)
    tr = trace(prog, "test_catch", {"risky"})
    g = build_ddg(prog, [tr])
    t = tr.test
    catch = next(e for e in tr.events if e.kind == "exception_catch")
    exc = (t, catch.aux["value"])
    handler_writes = [e for e in tr.events
                      if e.kind == EXEC and e.reads == () and e.writes
                      and tr.events.index(e) > tr.events.index(catch)]
    key = (t, handler_writes[0].writes[0])
    assert ("ctrl", exc, key) in g.edges
    g_off = build_ddg(prog, [tr], exception_control=False)
    assert ("ctrl", exc, key) not in g_off.edges


def test_multi_test_graphs_are_acyclic_and_disjoint():
    prog, traces, g = _cond_graph()
    assert g.check_acyclic()
    # no edge crosses tests
    for kind, src, dst in g.edges:
        if kind != "stmt":
            assert src[0] == dst[0]


def test_unknown_statement_rejected():
    prog = parse(COND_TEST)
    bad = Trace(test="test_x", status="fail",
                events=[TraceEvent(EXEC, 999, (), (1,))])
    with pytest.raises(MalformedTrace):
        build_ddg(prog, [bad])


def test_unmatched_call_exit_rejected():
    prog = parse(COND_TEST)
    bad = Trace(test="test_x", status="fail",
                events=[TraceEvent(CALL_EXIT, 0,
                                   aux={"callee": "foo", "ret": None,
                                        "aborted": False,
                                        "array_versions": []})])
    with pytest.raises(MalformedTrace):
        build_ddg(prog, [bad])


def test_dump_ddg_lists_everything():
    _, _, g = _cond_graph()
    text = dump_ddg(g)
    assert text.count("stmt ") >= 3
    assert text.count("evidence ") == len(g.evidence_anchors)
    assert text.count("edge ") == g.edge_count()
