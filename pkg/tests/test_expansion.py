"""Tests for block-method coefficient generation."""

import math

import numpy as np
import pytest

from epbm.coefficients import (
    MethodSpec,
    eab_coefficients,
    generate_coefficients,
    index_sets,
    legendre_method,
)
from epbm.errors import ConfigurationError
from epbm.nodes import NodeSet, legendre_epbm_nodes
from epbm.phi import build_phi_table


def test_index_set_formulas():
    sets = index_sets("PMFC", 2, 4)
    for s in sets:
        assert s.input == (2, 3, 4)
        assert s.output == ()
    assert index_sets("SMVC", 1, 3)[1].input == (1, 2, 3)
    assert index_sets("SMVC", 1, 3)[1].output == (1,)
    assert index_sets("SMFC", 1, 3)[2].input == (3,)
    assert index_sets("SMFC", 1, 3)[2].output == (1, 2)


def test_index_set_smfc_constant_cardinality():
    for ell in (1, 2, 3):
        for q in (3, 4, 6):
            sizes = {
                len(s.input) + len(s.output) for s in index_sets("SMFC", ell, q)
            }
            assert len(sizes) == 1


def test_index_set_validation():
    with pytest.raises(ValueError):
        index_sets("PMFC", 0, 3)
    with pytest.raises(ValueError):
        index_sets("PMFC", 4, 3)
    with pytest.raises(ValueError):
        index_sets("AMFC", 1, 3)


def test_legendre_golden_q2():
    c = legendre_method(2, 2.0)
    assert np.allclose(c.eta, [2.0, 3.0], atol=1e-14)
    assert np.allclose(c.deriv_weights[1], [[1.0]], atol=1e-13)


def test_legendre_golden_q3():
    c = legendre_method(3, 2.0)
    s3 = math.sqrt(3.0)
    want = np.array([[(1 + s3) / 2, (1 - s3) / 2], [-s3 / 2, s3 / 2]])
    for j in range(3):
        assert np.max(np.abs(c.deriv_weights[j] - want)) < 1e-13


def test_legendre_golden_q4():
    c = legendre_method(4, 2.0)
    s15 = math.sqrt(15.0)
    want = np.array(
        [
            [(5 + s15) / 6, -2.0 / 3.0, (5 - s15) / 6],
            [(-10 - s15) / 6, 10.0 / 3.0, (s15 - 10) / 6],
            [5.0 / 3.0, -10.0 / 3.0, 5.0 / 3.0],
        ]
    )
    for j in range(4):
        assert np.max(np.abs(c.deriv_weights[j] - want)) < 1e-13
    # the weights do not depend on alpha, only eta does
    c5 = legendre_method(4, 5.0)
    assert np.max(np.abs(c5.deriv_weights[0] - want)) < 1e-13
    assert np.allclose(c5.eta, c.nodes + 6.0, atol=1e-14)


def test_sum_rules_all_strategies():
    nodes = legendre_epbm_nodes(4)
    for strategy, ell, alpha in (
        ("PMFC", 2, 2.0),
        ("PMFC", 1, 3.0),
        ("SMFC", 1, 2.5),
        ("SMVC", 1, 2.5),
        ("SMVC", 2, 0.5),
    ):
        spec = MethodSpec(
            q=4,
            nodes=nodes,
            strategy=strategy,
            ell=ell,
            endpoints=np.full(4, -1.0),
            alpha=alpha,
        )
        c = generate_coefficients(spec)
        assert np.allclose(c.value_weights.sum(axis=1), 1.0, atol=1e-11)
        for j in range(4):
            rows = c.deriv_weights[j]
            assert abs(rows[0].sum() - 1.0) < 1e-11
            for nu in range(1, rows.shape[0]):
                assert abs(rows[nu].sum()) < 1e-10


def test_spec_validation():
    nodes = legendre_epbm_nodes(3)
    good = dict(
        q=3, nodes=nodes, strategy="PMFC", ell=2,
        endpoints=np.full(3, -1.0), alpha=2.0,
    )
    MethodSpec(**good)
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "endpoints": np.full(3, -0.9)})
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "strategy": "SMVC", "alpha": 0.0})
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "strategy": "implicit-moulton"})
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "ell": 0})
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "q": 4})
    with pytest.raises(ConfigurationError):
        MethodSpec(**{**good, "alpha": -1.0})


def test_stencil_collision_detected():
    # shifting the first node by alpha = 1 lands on the interior node 0
    nodes = legendre_epbm_nodes(4)
    spec = MethodSpec(
        q=4,
        nodes=nodes,
        strategy="SMVC",
        ell=1,
        endpoints=np.full(4, -1.0),
        alpha=1.0,
    )
    with pytest.raises(ConfigurationError):
        generate_coefficients(spec)


def test_cache_returns_same_object():
    a = legendre_method(3, 2.0)
    b = legendre_method(3, 2.0)
    assert a is b


def test_coefficients_immutable():
    c = legendre_method(3, 2.0)
    with pytest.raises(ValueError):
        c.eta[0] = 9.0
    with pytest.raises(ValueError):
        c.coeff_b[0, 0, 0] = 1.0


def _eval_by_weights(c, r, diag, y_blk, n_in, n_out):
    q = c.q
    outs = []
    for j in range(q):
        eta = float(c.eta[j].real)
        table = build_phi_table(diag, r * eta, c.deriv_weights[j].shape[0])
        acc = table.entries[0] * y_blk[c.endpoint_index[j]]
        for nu in range(c.deriv_weights[j].shape[0]):
            ln = np.zeros_like(acc)
            for m, (gen, k) in enumerate(c.stencil_map[j]):
                src = n_in if gen == "input" else n_out
                ln = ln + c.deriv_weights[j][nu, m] * (r * src[k - 1])
            acc = acc + eta ** (nu + 1) * table.entries[nu + 1] * ln
        outs.append(acc)
    return np.array(outs)


def _eval_by_tensors(c, r, diag, y_blk, n_in, n_out):
    q = c.q
    l_dim = c.coeff_b.shape[2]
    outs = []
    for j in range(q):
        eta = float(c.eta[j].real)
        table = build_phi_table(diag, r * eta, l_dim - 1)
        acc = table.entries[0] * (c.coeff_a[j] @ y_blk)
        for k in range(q):
            for l in range(1, l_dim):
                if c.coeff_b[j, k, l] != 0:
                    acc = acc + (
                        c.coeff_b[j, k, l]
                        * eta**l
                        * table.entries[l]
                        * (r * n_in[k])
                    )
                if c.coeff_d[j, k, l] != 0:
                    acc = acc + (
                        c.coeff_d[j, k, l]
                        * eta**l
                        * table.entries[l]
                        * (r * n_out[k])
                    )
        outs.append(acc)
    return np.array(outs)


def test_tensor_form_matches_weight_form():
    rng = np.random.default_rng(31)
    diag = rng.uniform(-6, 0, 8) + 1j * rng.uniform(-2, 2, 8)
    for q, strategy, ell, alpha in (
        (2, "PMFC", 2, 2.0),
        (3, "PMFC", 2, 2.0),
        (5, "PMFC", 1, 3.0),
        (4, "SMFC", 1, 2.5),
        (4, "SMVC", 1, 2.5),
    ):
        spec = MethodSpec(
            q=q,
            nodes=legendre_epbm_nodes(q),
            strategy=strategy,
            ell=ell,
            endpoints=np.full(q, -1.0),
            alpha=alpha,
        )
        c = generate_coefficients(spec)
        y_blk = rng.standard_normal((q, 8)) + 1j * rng.standard_normal((q, 8))
        n_in = rng.standard_normal((q, 8))
        n_out = rng.standard_normal((q, 8))
        r = 0.3
        a = _eval_by_weights(c, r, diag, y_blk, n_in, n_out)
        b = _eval_by_tensors(c, r, diag, y_blk, n_in, n_out)
        scale = np.max(np.abs(a))
        assert np.max(np.abs(a - b)) < 1e-12 * max(1.0, scale)


def test_classical_limit_matches_quadrature():
    """With no linear part a step is plain Adams quadrature of the stencil."""
    rng = np.random.default_rng(37)
    r = 0.2
    diag = np.zeros(1)
    for q, strategy, ell, alpha in (
        (3, "PMFC", 2, 2.0),
        (4, "PMFC", 2, 2.0),
        (4, "SMFC", 1, 2.5),
    ):
        spec = MethodSpec(
            q=q,
            nodes=legendre_epbm_nodes(q),
            strategy=strategy,
            ell=ell,
            endpoints=np.full(q, -1.0),
            alpha=alpha,
        )
        c = generate_coefficients(spec)
        y_blk = rng.standard_normal((q, 1))
        n_in = rng.standard_normal((q, 1))
        n_out = rng.standard_normal((q, 1))
        got = _eval_by_weights(c, r, diag, y_blk, n_in, n_out)
        for j in range(q):
            pts = []
            vals = []
            for gen, k in c.stencil_map[j]:
                if gen == "input":
                    pts.append(float(c.nodes[k - 1].real))
                    vals.append(float(n_in[k - 1, 0]))
                else:
                    pts.append(float(c.nodes[k - 1].real) + alpha)
                    vals.append(float(n_out[k - 1, 0]))
            poly = np.polynomial.Polynomial.fit(pts, vals, len(pts) - 1)
            anti = poly.integ()
            b = -1.0
            upper = b + float(c.eta[j].real)
            want = y_blk[c.endpoint_index[j], 0] + r * (anti(upper) - anti(b))
            assert abs(got[j, 0] - want) < 1e-12 * max(1.0, abs(want))


def test_eab_examples():
    e1 = eab_coefficients(1)
    assert np.allclose(e1.eta, [1.0])
    assert np.allclose(e1.deriv_weights[0], [[1.0]])

    e2 = eab_coefficients(2)
    assert np.allclose(e2.eta, [0.0, 1.0])
    assert np.allclose(e2.deriv_weights[1], [[0.0, 1.0], [-1.0, 1.0]], atol=1e-13)
    assert np.allclose(e2.value_weights, [[0.0, 1.0], [0.0, 1.0]])

    e3 = eab_coefficients(3)
    assert np.allclose(e3.deriv_weights[2][2], [1.0, -2.0, 1.0], atol=1e-12)

    for bad in (0, 9):
        with pytest.raises(ValueError):
            eab_coefficients(bad)
