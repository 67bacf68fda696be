import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphfeyn.errors import InputError
from graphfeyn.graph import (
    ElectricPotential,
    MagneticPotential,
    WeightedGraph,
    ball,
    ball_exhaustion,
    build_standard,
    connected_component,
    cycle_graph,
    degree,
    harper_box,
    landau_gauge,
    lattice_box,
    parse_descriptor,
    path_graph,
    restrict,
    validate,
    warn_if_degree_unbounded,
)

from conftest import k2, random_instance


def kinds(violations):
    return sorted(v.kind for v in violations)


def test_degree_examples():
    g, _, _ = k2()
    assert degree(g, "a") == 1.0
    g2 = WeightedGraph(["a", "b"], {("a", "b"): 3.0}, m={"a": 2.0, "b": 0.5})
    assert degree(g2, "a") == 1.5
    assert degree(g2, "b") == 6.0
    g3, _, _ = cycle_graph(3)
    assert all(degree(g3, x) == 2.0 for x in g3.vertices)
    lone = WeightedGraph(["z"])
    assert degree(lone, "z") == 0.0


def test_b_is_symmetric_and_zero_weights_are_dropped():
    g = WeightedGraph(["a", "b", "c"], [("a", "b", 2.0), ("b", "c", 0.0)])
    assert g.b("a", "b") == g.b("b", "a") == 2.0
    assert g.b("b", "c") == 0.0
    assert g.neighbors("b") == ["a"]
    assert g.b("a", "a") == 0.0


def test_structural_errors_raise():
    with pytest.raises(InputError):
        WeightedGraph(["a", "a"])
    with pytest.raises(InputError):
        WeightedGraph(["a", "b"], [("a", "b", 1.0), ("b", "a", 1.0)])
    with pytest.raises(InputError):
        WeightedGraph(["a"], [("a", "q", 1.0)])
    g, _, _ = k2()
    with pytest.raises(InputError):
        degree(g, "q")


def test_magnetic_potential_is_antisymmetric():
    th = MagneticPotential({("a", "b"): 0.7})
    assert th("a", "b") == 0.7
    assert th("b", "a") == -0.7
    assert th("a", "c") == 0.0


def test_validate_clean_instance():
    assert validate(*k2(theta=0.3)) == []


def test_validate_reports_each_breach():
    g = WeightedGraph(["a", "b", "c"], [("a", "b", -1.0), ("b", "c", math.nan), ("c", "c", 1.0)],
                      m={"a": 0.0, "b": math.inf})
    theta = MagneticPotential({("a", "c"): 1.0, ("a", "z"): 1.0})
    v = ElectricPotential({"a": math.nan, "q": 0.0})
    found = set(kinds(validate(g, theta, v)))
    assert {
        "nonpositive measure",
        "nonfinite measure",
        "self-loop",
        "negative edge weight",
        "nonfinite edge weight",
        "theta on non-edge",
        "theta on unknown vertex",
        "nonfinite v",
        "v missing",
        "v on unknown vertex",
    } <= found


def test_validate_antisymmetry_breach():
    g, _, v = k2()
    theta = MagneticPotential({("a", "b"): 0.5, ("b", "a"): 0.4})
    assert "theta antisymmetry breach" in kinds(validate(g, theta, v))
    consistent = MagneticPotential({("a", "b"): 0.5, ("b", "a"): -0.5})
    assert validate(g, consistent, v) == []


def test_restrict_keeps_ambient_degree():
    g, th, v = path_graph(4)
    gw, thw, vw = restrict(g, th, v, ["1", "2"])
    assert gw.vertices == ("1", "2")
    assert gw.is_restriction()
    np.testing.assert_array_equal(gw.operator_degree, [2.0, 2.0])
    np.testing.assert_array_equal(gw.degree_array, [1.0, 1.0])


def test_restrict_is_transitive():
    rng = np.random.default_rng(3)
    g, th, v = random_instance(rng, 9)
    once = restrict(g, th, v, g.vertices[:4])[0]
    twice = restrict(*restrict(g, th, v, g.vertices[:6]), g.vertices[:4])[0]
    assert once.vertices == twice.vertices
    np.testing.assert_array_equal(once.operator_degree, twice.operator_degree)
    np.testing.assert_array_equal(once.dense_weights(), twice.dense_weights())


def test_restrict_rejects_bad_sets():
    g, th, v = k2()
    with pytest.raises(InputError):
        restrict(g, th, v, [])
    with pytest.raises(InputError):
        restrict(g, th, v, ["q"])


def test_balls_on_path():
    g, _, _ = path_graph(10)
    assert ball(g, "5", 0) == ("5",)
    assert ball(g, "5", 2) == ("3", "4", "5", "6", "7")
    balls = ball_exhaustion(g, "0", [1, 3, 20])
    assert [len(b) for b in balls] == [2, 4, 10]
    assert all(set(a) <= set(b) for a, b in zip(balls, balls[1:]))
    with pytest.raises(InputError):
        ball_exhaustion(g, "0", [3, 3])
    with pytest.raises(InputError):
        ball_exhaustion(g, "0", [-1, 2])


def test_connected_component():
    g = WeightedGraph(["a", "b", "c"], [("a", "b", 1.0)])
    assert connected_component(g, "a") == ("a", "b")
    assert connected_component(g, "c") == ("c",)


def test_builders():
    g, th, v = path_graph(2)
    assert len(g) == 2 and g.b("0", "1") == 1.0
    g, _, _ = cycle_graph(5)
    assert len(g.edge_index) == 5 and g.b("4", "0") == 1.0
    g, _, _ = cycle_graph(2)
    assert len(g.edge_index) == 1
    g, _, _ = lattice_box(2, 3)
    assert len(g) == 9 and len(g.edge_index) == 12
    assert degree(g, "1_1") == 4.0 and degree(g, "0_0") == 2.0
    g, _, _ = lattice_box(3, 2)
    assert len(g) == 8 and len(g.edge_index) == 12


def test_harper_zero_flux_is_free():
    g, th, v = harper_box(4, 0.0)
    assert np.all(th.edge_array(g) == 0.0)
    assert validate(g, th, v) == []


def test_landau_gauge_plaquette_flux():
    alpha = 0.3
    g, th, _ = harper_box(4, alpha)
    for x1 in range(3):
        for x2 in range(3):
            loop = [f"{x1}_{x2}", f"{x1 + 1}_{x2}", f"{x1 + 1}_{x2 + 1}", f"{x1}_{x2 + 1}", f"{x1}_{x2}"]
            flux = sum(th(a, c) for a, c in zip(loop, loop[1:]))
            assert flux == pytest.approx(2 * math.pi * alpha)


def test_landau_gauge_needs_lattice_ids():
    g, _, _ = cycle_graph(4)
    with pytest.raises(InputError):
        landau_gauge(g, 0.1)


def test_build_standard_and_descriptor():
    g, _, _ = build_standard("cycle", 6)
    assert len(g) == 6
    g, th, _ = parse_descriptor("harper_box:3:0.25")
    assert len(g) == 9 and th("0_1", "0_2") == 0.0 and th("1_0", "1_1") == pytest.approx(math.pi / 2)
    with pytest.raises(InputError):
        build_standard("torus", 3)
    with pytest.raises(InputError):
        parse_descriptor("cycle:x")


def test_degree_growth_warning():
    stars = []
    for k in (2, 3, 4):
        ids = ["c"] + [f"l{i}" for i in range(k)]
        stars.append(WeightedGraph(ids, [("c", f"l{i}", 1.0) for i in range(k)]))
    with pytest.warns(RuntimeWarning):
        assert warn_if_degree_unbounded(stars)
    boxes = [lattice_box(2, s)[0] for s in (3, 4, 5)]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not warn_if_degree_unbounded(boxes)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_degree_is_weighted_row_sum(n, seed):
    g, _, _ = random_instance(np.random.default_rng(seed), n)
    B = g.dense_weights()
    np.testing.assert_allclose(g.degree_array, B.sum(axis=1) / g.m, rtol=1e-14)
    np.testing.assert_array_equal(B, B.T)
