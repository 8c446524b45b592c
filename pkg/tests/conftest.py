import pytest

from metricfire.exactnum import QF2
from metricfire.metric_graph import Edge, MetricGraph


def single_edge(length=1) -> MetricGraph:
    return MetricGraph(["q", "v"], [Edge("e", "q", "v", QF2.of(length))], "q")


def parallel_pair(length=1) -> MetricGraph:
    return MetricGraph(["q", "v"], [Edge("e1", "q", "v", QF2.of(length)), Edge("e2", "q", "v", QF2.of(length))], "q")


@pytest.fixture
def edge_graph():
    return single_edge()


@pytest.fixture
def pair_graph():
    return parallel_pair()
