import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from graphfeyn.errors import InputError, ResourceLimitError
from graphfeyn.exact import (
    apply_formal,
    assemble_operator,
    compose_kernels,
    generator_limit_residual,
    greens_identity_residual,
    identity_kernel,
    propagate,
    quadratic_form,
    scattering_kernel_exact,
    semigroup_kernel_exact,
    unitary_kernel_exact,
)
from graphfeyn.graph import ElectricPotential, MagneticPotential, WeightedGraph, path_graph, restrict

from conftest import cycle5_random_theta, k2, random_instance


def expm_kernel(op, z):
    """Independent oracle: Pade ``expm`` of the raw operator matrix, divided by ``m``."""
    return scipy.linalg.expm(z * op.H) / op.m[None, :]


def suite():
    rng = np.random.default_rng(2)
    return [k2(), cycle5_random_theta(), random_instance(rng, 10), random_instance(rng, 7, m_range=(0.3, 3.0))]


def test_k2_closed_forms():
    op = assemble_operator(*k2())
    K = unitary_kernel_exact(op, math.pi / 2)
    assert abs(K("a", "b") - 1) < 1e-12
    assert abs(K("a", "a")) < 1e-12
    K1 = unitary_kernel_exact(op, 1.0)
    # exp(-i) cos(1) on the diagonal, i exp(-i) sin(1) off it
    assert abs(K1("a", "a") - np.exp(-1j) * math.cos(1)) < 1e-14
    assert abs(K1("a", "b") - 1j * np.exp(-1j) * math.sin(1)) < 1e-14


def test_k2_semigroup_closed_forms():
    S = semigroup_kernel_exact(assemble_operator(*k2(v=(-1.0, -1.0))), 1.0)
    assert S("a", "a") == pytest.approx(math.cosh(1), abs=1e-14)
    assert S("a", "b") == pytest.approx(math.sinh(1), abs=1e-14)
    S0 = semigroup_kernel_exact(assemble_operator(*k2()), 1.0)
    assert S0("a", "b") == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-14)


def test_operator_matrix_entries():
    g = WeightedGraph(["a", "b"], {("a", "b"): 2.0}, m={"a": 4.0, "b": 1.0})
    op = assemble_operator(g, MagneticPotential({("a", "b"): 0.3}), ElectricPotential({"a": 1.0, "b": -1.0}))
    np.testing.assert_allclose(op.H, [[0.5 + 1.0, -0.5 * np.exp(0.3j)], [-2.0 * np.exp(-0.3j), 2.0 - 1.0]])


def test_dirichlet_diagonal_uses_ambient_degree():
    g, th, v = path_graph(3)
    op = assemble_operator(g, th, v, W=["0", "1"])
    np.testing.assert_allclose(op.H, [[1.0, -1.0], [-1.0, 2.0]])


@pytest.mark.parametrize("idx", range(4))
@pytest.mark.parametrize("t", [0.25, 1.0, -0.7, math.pi / 2])
def test_unitary_kernel_matches_expm(idx, t):
    op = assemble_operator(*suite()[idx])
    np.testing.assert_allclose(unitary_kernel_exact(op, t).K, expm_kernel(op, -1j * t), atol=1e-12)


@pytest.mark.parametrize("idx", range(4))
def test_semigroup_kernel_matches_expm(idx):
    op = assemble_operator(*suite()[idx])
    np.testing.assert_allclose(semigroup_kernel_exact(op, 1.3).K, expm_kernel(op, -1.3), atol=1e-12)


@pytest.mark.parametrize("idx", range(4))
def test_unitarity_group_law_adjoint(idx):
    g, th, v = suite()[idx]
    op = assemble_operator(g, th, v)
    ident = identity_kernel(op.vertices, op.m).K
    times = (0.1, 0.7, -0.4)
    for t in times:
        U, Uback = unitary_kernel_exact(op, t), unitary_kernel_exact(op, -t)
        np.testing.assert_allclose(compose_kernels(U, Uback).K, ident, atol=1e-10)
        # adjoint w.r.t. l^2(m): U(-t)(x, y) = conj(U(t)(y, x))
        np.testing.assert_allclose(Uback.K, U.K.conj().T, atol=1e-12)
        for s in times:
            lhs = compose_kernels(unitary_kernel_exact(op, s), U).K
            np.testing.assert_allclose(lhs, unitary_kernel_exact(op, s + t).K, atol=1e-10)


def test_identity_at_time_zero():
    g, th, v = suite()[3]
    op = assemble_operator(g, th, v)
    np.testing.assert_allclose(unitary_kernel_exact(op, 0.0).K, identity_kernel(g.vertices, g.m).K, atol=1e-13)


def test_semigroup_is_positivity_preserving_without_field():
    g, _, v = random_instance(np.random.default_rng(5), 10)
    S = semigroup_kernel_exact(assemble_operator(g, MagneticPotential(), v), 0.9).K
    assert np.all(S.real > -1e-14)
    assert np.max(np.abs(S.imag)) < 1e-14


@pytest.mark.parametrize("idx", range(4))
def test_spectrum_lies_in_form_bounds(idx):
    g, th, v = suite()[idx]
    lam, _ = assemble_operator(g, th, v).spectrum
    va = v.array(g)
    assert lam.min() >= va.min() - 1e-12
    assert lam.max() <= 2 * g.degree_array.max() + va.max() + 1e-12


def test_semigroup_rejects_negative_time():
    with pytest.raises(InputError):
        semigroup_kernel_exact(assemble_operator(*k2()), -0.1)


def test_dense_cap():
    g = WeightedGraph([str(k) for k in range(4097)])
    with pytest.raises(ResourceLimitError):
        assemble_operator(g, MagneticPotential(), ElectricPotential.constant(g, 0.0))


def test_apply_formal_matches_matrix():
    rng = np.random.default_rng(8)
    g, th, v = random_instance(rng, 9)
    f = rng.normal(size=9) + 1j * rng.normal(size=9)
    Hf = assemble_operator(g, th, v).apply(f)
    direct = [apply_formal(g, th, v, f, x) for x in g.vertices]
    np.testing.assert_allclose(direct, Hf, atol=1e-13)


def _random_support(rng, g, k):
    xs = rng.choice(len(g), size=min(k, len(g)), replace=False)
    return {g.vertices[i]: complex(rng.normal(), rng.normal()) for i in xs}


def test_greens_identity_on_random_instances():
    rng = np.random.default_rng(20)
    for _ in range(50):
        g, th, v = random_instance(rng, int(rng.integers(2, 13)), m_range=(0.2, 5.0))
        f, h = _random_support(rng, g, 4), _random_support(rng, g, 4)
        assert greens_identity_residual(g, th, v, f, h) < 1e-10


def test_greens_identity_on_restriction():
    rng = np.random.default_rng(21)
    g, th, v = random_instance(rng, 10)
    gw, thw, vw = restrict(g, th, v, g.vertices[:6])
    f, h = _random_support(rng, gw, 4), _random_support(rng, gw, 4)
    assert greens_identity_residual(gw, thw, vw, f, h) < 1e-10


def test_quadratic_form_is_hermitian_and_bounded_below():
    rng = np.random.default_rng(22)
    g, th, v = random_instance(rng, 8)
    f, h = _random_support(rng, g, 5), _random_support(rng, g, 5)
    assert quadratic_form(g, th, v, f, h) == pytest.approx(np.conj(quadratic_form(g, th, v, h, f)), abs=1e-12)
    q = quadratic_form(g, th, v, f, f)
    norm2 = sum(abs(val) ** 2 * g.m[g.index[x]] for x, val in f.items())
    assert abs(q.imag) < 1e-12
    assert q.real >= v.array(g).min() * norm2 - 1e-12


def test_scattering_identity_when_potentials_agree():
    g, th, v = random_instance(np.random.default_rng(9), 8)
    K = scattering_kernel_exact(g, th, v, th, v, None, 0.8)
    np.testing.assert_allclose(K.K, identity_kernel(g.vertices, g.m).K, atol=1e-10)


def test_scattering_k2_reference_values():
    g, th, v = k2()
    v2 = ElectricPotential({"a": 1.0, "b": 0.0})
    K = scattering_kernel_exact(g, th, v, th, v2, None, 0.3)
    ref = np.array(
        [
            [0.95698195 + 0.28685938j, 0.04334256 + 0.00432067j],
            [-0.04268358 - 0.0086809j, 0.99901252 + 0.00876027j],
        ]
    )
    np.testing.assert_allclose(K.K, ref, atol=1e-8)


def test_scattering_on_subset():
    g, th, v = path_graph(4)
    v2 = ElectricPotential.constant(g, 0.5)
    K = scattering_kernel_exact(g, th, v, th, v2, ["1", "2"], 0.6)
    # a constant shift only changes the phase: exp(-itL) exp(it(L + c)) = exp(itc)
    np.testing.assert_allclose(K.K, np.exp(0.3j) * np.eye(2), atol=1e-12)


@pytest.mark.parametrize("instance", [k2, cycle5_random_theta])
def test_generator_residual_is_linear_in_t(instance):
    op = assemble_operator(*instance())
    f = np.zeros(len(op.vertices), dtype=complex)
    f[0] = 1.0
    res = [generator_limit_residual(op, f, t) for t in (1e-2, 5e-3, 2.5e-3)]
    assert all(b / a <= 0.6 for a, b in zip(res, res[1:]))
    with pytest.raises(InputError):
        generator_limit_residual(op, f, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1), st.floats(-2.0, 2.0))
def test_propagate_matches_eigendecomposition(n, seed, t):
    rng = np.random.default_rng(seed)
    g, th, v = random_instance(rng, n, m_range=(0.3, 3.0))
    op = assemble_operator(g, th, v)
    f = rng.normal(size=n) + 1j * rng.normal(size=n)
    U = op.function(lambda lam: np.exp(-1j * t * lam))
    np.testing.assert_allclose(propagate(op, f, -1j * t), U @ f, atol=1e-12)
    S = op.function(lambda lam: np.exp(-abs(t) * lam))
    np.testing.assert_allclose(propagate(op, f, -abs(t)), S @ f, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_unitarity_property(n, seed, t):
    g, th, v = random_instance(np.random.default_rng(seed), n, m_range=(0.3, 3.0))
    op = assemble_operator(g, th, v)
    U = op.function(lambda lam: np.exp(-1j * t * lam))
    D = np.diag(op.m)
    np.testing.assert_allclose(U.conj().T @ D @ U, D, atol=1e-10)
