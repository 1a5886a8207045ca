import json

import pytest

from app.models.graph import InterferenceGraph


def make_graph(n, edges=()):
    return InterferenceGraph(n=n, edges=list(edges))


@pytest.fixture
def single_node():
    return make_graph(1)


@pytest.fixture
def edge():
    return make_graph(2, [(0, 1)])


@pytest.fixture
def path3():
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def k3():
    return make_graph(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def write_config(tmp_path):
    """Escribir un documento JSON en tmp_path y devolver su ruta"""
    def _write(document, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)
    return _write
