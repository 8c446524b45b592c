import json
import random

import pytest

from metricfire.exactnum import SQRT2
from metricfire.gadgets import build_euclid
from metricfire.instances import random_divisor, random_graph
from metricfire.traceio import TraceFormatError, check, dumps, loads, trace_from_rows
from metricfire.transfinite import Budget, Chain, DharStrategy, RandomGreedyStrategy, run

LAM = SQRT2 - 1


def rows(t):
    return [json.loads(line) for line in dumps(t).splitlines()]


@pytest.fixture(scope="module")
def euclid_trace():
    return build_euclid(LAM, 1, pivot=0).run(phases=6)


def test_round_trip(euclid_trace):
    text = dumps(euclid_trace)
    again = loads(text)
    assert again == euclid_trace
    assert dumps(again) == text


def test_engine_traces_pass_check(euclid_trace):
    assert check(euclid_trace) == []
    rng = random.Random(8)
    for seed in range(10):
        g = random_graph(rng)
        d = random_divisor(rng, g)
        t = run(g, d, Chain(RandomGreedyStrategy(seed), DharStrategy()))
        assert check(loads(dumps(t))) == []


def test_header_required():
    with pytest.raises(TraceFormatError):
        trace_from_rows([{"kind": "end"}])


def test_degree_jump_detected(euclid_trace):
    r = rows(euclid_trace)
    lim = next(x for x in r if x["kind"] == "limit")
    lim["divisor"] = lim["divisor"][1:]
    problems = check(trace_from_rows(r))
    assert problems and "degree" in problems[0]


def test_wrong_cum_detected(euclid_trace):
    r = rows(euclid_trace)
    r[2]["cum"] = "7"
    assert any("cumulative" in p for p in check(trace_from_rows(r)))


def test_clock_tampering_detected(euclid_trace):
    r = rows(euclid_trace)
    r[1]["ord"] = "2"
    assert any("clock" in p for p in check(trace_from_rows(r)))


def test_snapshot_mismatch_detected():
    t = build_euclid(LAM, 1).run(Budget(max_fires=60, max_limits=0))
    r = rows(t)
    snap = next(i for i, x in enumerate(r) if x.get("kind") == "fire" and "divisor" in x)
    r[snap]["divisor"] = r[0]["divisor"]
    assert any("snapshot" in p for p in check(trace_from_rows(r)))
