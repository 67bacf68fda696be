import io as stdio
import json
from importlib import resources

import numpy as np
import pytest

from graphfeyn import io
from graphfeyn.errors import GraphParseError, InputError
from graphfeyn.exact import assemble_operator, unitary_kernel_exact
from graphfeyn.graph import validate

from conftest import random_instance

K2_TEXT = """{
  "vertices": [{"id": "a", "m": 1.0, "v": 0.0}, {"id": "b"}],
  "edges": [{"u": "a", "w": "b", "b": 1.0, "theta": 0.25}]
}"""


def test_parse_basic():
    g, th, v = io.parse_graph(K2_TEXT)
    assert g.vertices == ("a", "b")
    assert g.b("a", "b") == 1.0
    assert th("b", "a") == -0.25
    assert v("b") == 0.0
    assert validate(g, th, v) == []


def test_bundled_k2():
    text = resources.files("graphfeyn").joinpath("data/k2.json").read_text()
    g, th, v = io.parse_graph(text)
    assert g.vertices == ("a", "b") and validate(g, th, v) == []


def test_malformed_json_reports_position():
    with pytest.raises(GraphParseError, match="line 2"):
        io.parse_graph('{"vertices": [\n  {"id": "a",}]}')


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"edges": []}, "<root>"),
        ({"vertices": [{"id": 3}]}, "vertices/0/id"),
        ({"vertices": [{"id": "a"}], "edges": [{"u": "a", "w": "a"}]}, "edges/0"),
        ({"vertices": [{"id": "a", "m": "x"}]}, "vertices/0/m"),
    ],
)
def test_schema_errors_name_the_field(doc, field):
    with pytest.raises(GraphParseError, match=field):
        io.parse_graph(json.dumps(doc))


def test_unknown_vertex_is_input_error():
    doc = {"vertices": [{"id": "a"}], "edges": [{"u": "a", "w": "z", "b": 1.0}]}
    with pytest.raises(InputError):
        io.parse_graph(json.dumps(doc))


def test_theta_on_zero_weight_pair_is_flagged():
    doc = {"vertices": [{"id": "a"}, {"id": "b"}], "edges": [{"u": "a", "w": "b", "b": 0.0, "theta": 1.0}]}
    g, th, v = io.parse_graph(json.dumps(doc))
    assert [x.kind for x in validate(g, th, v)] == ["theta on non-edge"]


def test_missing_file(tmp_path):
    with pytest.raises(GraphParseError):
        io.load_graph(tmp_path / "nope.json")


def test_roundtrip_is_exact():
    g, th, v = random_instance(np.random.default_rng(11), 8)
    text = io.to_text(io.dump_graph, g, th, v)
    g2, th2, v2 = io.parse_graph(text)
    assert g2.vertices == g.vertices
    np.testing.assert_array_equal(g2.m, g.m)
    np.testing.assert_array_equal(g2.dense_weights(), g.dense_weights())
    np.testing.assert_array_equal(th2.dense(g2), th.dense(g))
    np.testing.assert_array_equal(v2.array(g2), v.array(g))


def test_kernel_csv_roundtrip():
    g, th, v = random_instance(np.random.default_rng(12), 5)
    K = unitary_kernel_exact(assemble_operator(g, th, v), 0.8)
    buf = stdio.StringIO()
    io.write_kernel_csv(K, buf)
    buf.seek(0)
    back = io.read_kernel_csv(buf)
    for i, x in enumerate(g.vertices):
        for j, y in enumerate(g.vertices):
            assert back[(x, y)] == K.K[i, j]
