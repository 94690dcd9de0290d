import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from modules.codes import CodeSpec, build_elongated_code  # noqa: E402
from modules.decoder_graph import DecoderGraph, GraphEdge  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo anchors")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@functools.lru_cache(maxsize=None)
def cached_code(L, ell, deformation="NONE"):
    return build_elongated_code(CodeSpec(L, ell, deformation))


def code_grid(sizes=(3, 5, 7, 9, 11), max_ell=6):
    return [(L, ell) for L in sizes for ell in range(2, min(max_ell, L - 1) + 1)]


def make_graph(num_checks, edges, side="X"):
    """Hand-built decoder graph; ``edges`` are (u, v, weight) with v == num_checks for the boundary."""
    graph_edges = tuple(GraphEdge(q, u, v, 0.1, float(w)) for q, (u, v, w) in enumerate(edges))
    positions = tuple((0.0, float(i)) for i in range(num_checks))
    return DecoderGraph(side, 3, num_checks, graph_edges, positions)


@pytest.fixture
def surface3():
    return cached_code(3, 2)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
