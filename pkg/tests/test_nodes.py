"""Tests for node sets and finite-difference weight generation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epbm.nodes import (
    NodeSet,
    fd_weights,
    imaginary_equispaced_nodes,
    lagrange_eval,
    legendre_epbm_nodes,
)


def test_legendre_nodes_closed_forms():
    assert np.allclose(legendre_epbm_nodes(2).nodes, [-1.0, 0.0], atol=1e-15)
    assert np.allclose(
        legendre_epbm_nodes(3).nodes,
        [-1.0, -math.sqrt(1.0 / 3.0), math.sqrt(1.0 / 3.0)],
        atol=1e-14,
    )
    assert np.allclose(
        legendre_epbm_nodes(4).nodes,
        [-1.0, -math.sqrt(0.6), 0.0, math.sqrt(0.6)],
        atol=1e-14,
    )


def test_legendre_nodes_match_gauss_rule():
    # the interior nodes are the Gauss-Legendre abscissae of order q-1
    for q in range(2, 13):
        got = legendre_epbm_nodes(q)
        assert got.kind == "legendre-epbm"
        assert got.nodes[0] == -1.0
        ref = np.polynomial.legendre.leggauss(q - 1)[0]
        assert np.max(np.abs(got.nodes[1:].real - ref)) < 1e-13


def test_legendre_nodes_range_check():
    for bad in (1, 13, 0, -2):
        with pytest.raises(ValueError):
            legendre_epbm_nodes(bad)


def test_imaginary_nodes_formula():
    assert np.allclose(imaginary_equispaced_nodes(2).nodes, [1j, -1j])
    assert np.allclose(imaginary_equispaced_nodes(3).nodes, [1j, 0.0, -1j])
    assert imaginary_equispaced_nodes(5).nodes[1] == 0.5j
    with pytest.raises(ValueError):
        imaginary_equispaced_nodes(1)
    with pytest.raises(ValueError):
        imaginary_equispaced_nodes(13)


def test_node_set_validation():
    with pytest.raises(ValueError):
        NodeSet(nodes=np.array([0.0, 1.5]))  # out of the unit disk
    with pytest.raises(ValueError):
        NodeSet(nodes=np.array([0.3, 0.3]))  # duplicate
    with pytest.raises(ValueError):
        NodeSet(nodes=np.array([0.5, -0.5]))  # real but decreasing
    with pytest.raises(ValueError):
        NodeSet(nodes=np.array([0.0]), kind="mystery")
    ok = NodeSet(nodes=np.array([-1.0, 0.0, 1.0]), kind="equispaced-real")
    assert ok.q == 3
    with pytest.raises(ValueError):
        ok.nodes[0] = 9.0


def test_fd_weights_golden_rows():
    rows = fd_weights([0.5], 0.5, 0)
    assert np.allclose(rows[0].weights, [1.0])
    rows = fd_weights([-1.0, 0.0, 1.0], 0.0, 2)
    assert np.allclose(rows[1].weights, [-0.5, 0.0, 0.5], atol=1e-14)
    assert np.allclose(rows[2].weights, [1.0, -2.0, 1.0], atol=1e-13)


def test_fd_weights_sum_rules():
    rng = np.random.default_rng(2)
    nodes = np.sort(rng.uniform(-1, 1, 6))
    rows = fd_weights(nodes, 0.2, 4)
    assert abs(rows[0].weights.sum() - 1.0) < 1e-12
    for nu in range(1, 5):
        assert abs(rows[nu].weights.sum()) < 1e-11


def test_fd_weights_validation():
    with pytest.raises(ValueError):
        fd_weights([0.0, 0.0, 1.0], 0.0, 1)
    with pytest.raises(ValueError):
        fd_weights([0.0, 1.0], 0.0, 2)
    with pytest.raises(ValueError):
        fd_weights([0.0, 1.0], 0.0, -1)


def test_fornberg_matches_vandermonde_on_real_stencils():
    rng = np.random.default_rng(4)
    for trial in range(40):
        n = rng.integers(2, 10)
        nodes = np.sort(rng.uniform(-1, 1, n))
        if np.min(np.diff(nodes)) < 0.05:
            continue
        x0 = rng.uniform(-1, 1)
        real_rows = fd_weights(nodes, x0, n - 1)
        # a denormal imaginary part forces the complex code path
        cplx_rows = fd_weights(nodes + 1e-300j, x0, n - 1)
        for a, b in zip(real_rows, cplx_rows):
            scale = max(1.0, np.max(np.abs(a.weights)))
            assert np.max(np.abs(a.weights - b.weights)) < 1e-10 * scale


def test_fd_weights_monomial_exactness():
    rng = np.random.default_rng(6)
    for trial in range(30):
        n = int(rng.integers(1, 10))
        nodes = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        nodes /= max(1.0, np.max(np.abs(nodes)))
        if n > 1:
            gaps = np.abs(nodes[:, None] - nodes[None, :])
            if gaps[~np.eye(n, dtype=bool)].min() < 0.05:
                continue
        x0 = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        rows = fd_weights(nodes, x0, n - 1)
        for m in range(n):
            samples = (nodes - x0) ** m
            for nu in range(n):
                got = rows[nu].weights @ samples
                # nu-th derivative of (x-x0)^m at x0: m! when nu == m, else 0
                want = float(math.factorial(m)) if nu == m else 0.0
                scale = max(1.0, abs(want), np.sum(np.abs(rows[nu].weights * samples)))
                assert abs(got - want) < 1e-10 * scale


def test_lagrange_eval_examples():
    v = np.array([2.0, 3.0])
    assert np.allclose(lagrange_eval([0.0], [v], 5.0), v)
    assert abs(lagrange_eval([-1.0, 1.0], [0.0, 2.0], 0.0) - 1.0) < 1e-14
    assert abs(lagrange_eval([-1.0, 0.0, 1.0], [1.0, 0.0, 1.0], 2.0) - 4.0) < 1e-12


def test_lagrange_eval_validation():
    with pytest.raises(ValueError):
        lagrange_eval([0.0, 0.0], [1.0, 2.0], 0.5)
    with pytest.raises(ValueError):
        lagrange_eval([0.0, 1.0], [1.0], 0.5)


def test_lagrange_polynomial_reproduction():
    rng = np.random.default_rng(8)
    for q in (2, 4, 7):
        nodes = np.sort(rng.uniform(-1, 1, q))
        coeffs = rng.standard_normal(q)
        values = [np.polyval(coeffs, z) for z in nodes]
        for tau in rng.uniform(-1.5, 1.5, 20):
            want = np.polyval(coeffs, tau)
            got = lagrange_eval(nodes, values, tau)
            assert abs(got - want) < 1e-11 * max(1.0, abs(want))


@settings(max_examples=40, deadline=None)
@given(
    q=st.integers(min_value=2, max_value=8),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_weight_rows_reproduce_lagrange_values(q, seed):
    """The nu=0 weight row is the Lagrange cardinal basis at x0."""
    rng = np.random.default_rng(seed)
    nodes = np.sort(rng.uniform(-1, 1, q))
    if q > 1 and np.min(np.diff(nodes)) < 0.05:
        return
    x0 = rng.uniform(-1, 1)
    row = fd_weights(nodes, x0, 0)[0]
    values = rng.standard_normal(q)
    direct = lagrange_eval(nodes, list(values), x0)
    assert abs(row.weights @ values - direct) < 1e-10 * max(1.0, abs(direct))
