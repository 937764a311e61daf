"""Node sets and polynomial weight machinery for block integrators.

Block methods in this package are parameterized by a set of nodes z_j in the
closed unit disk. Everything downstream (expansion coefficients, steppers)
consumes the finite-difference weight rows produced here: weights w_j such
that sum_j w_j g(z_j) approximates g^(nu)(x0) exactly for polynomials of
degree < |nodes|.
"""

from dataclasses import dataclass

import numpy as np

_KINDS = ("legendre-epbm", "imaginary-equispaced", "equispaced-real", "custom")


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NodeSet:
    """Ordered nodes z_1..z_q, |z_j| <= 1, pairwise distinct.

    Real-valued sets must be strictly increasing; the imaginary-equispaced
    kind keeps its generation order (descending imaginary part), which
    matters for serial strategies.
    """

    nodes: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        z = self.nodes
        if self.kind not in _KINDS:
            raise ValueError("unknown node-set kind %r" % (self.kind,))
        if z.ndim != 1 or z.size < 1:
            raise ValueError("nodes must be a nonempty 1-D sequence")
        if np.max(np.abs(z)) > 1.0 + 1e-12:
            raise ValueError("all nodes must satisfy |z| <= 1")
        if z.size > 1:
            gaps = np.abs(z[:, None] - z[None, :])[~np.eye(z.size, dtype=bool)]
            if gaps.min() < 1e-14:
                raise ValueError("nodes must be pairwise distinct")
            if np.all(z.imag == 0.0) and not np.all(np.diff(z.real) > 0):
                raise ValueError("real node sets must be strictly increasing")

    @property
    def q(self):
        return self.nodes.size


def _legendre_and_deriv(n, x):
    """P_n(x) and P_n'(x) by the three-term recurrence, |x| < 1."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for m in range(1, n):
        p_prev, p = p, ((2 * m + 1) * x * p - m * p_prev) / (m + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def _legendre_zeros(n):
    if n == 0:
        return np.zeros(0)
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(60):
        p, dp = _legendre_and_deriv(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    x = np.sort(x)
    return 0.5 * (x - x[::-1])  # symmetrize about 0 exactly


def legendre_epbm_nodes(q):
    """{-1} together with the zeros of the Legendre polynomial P_{q-1}."""
    q = int(q)
    if not 2 <= q <= 12:
        raise ValueError("q must lie in [2, 12], got %d" % q)
    nodes = np.concatenate(([-1.0], _legendre_zeros(q - 1)))
    return NodeSet(nodes=nodes, kind="legendre-epbm")


def imaginary_equispaced_nodes(m):
    """chi_j = i(1 - 2(j-1)/(m-1)), j = 1..m, descending imaginary part."""
    m = int(m)
    if not 2 <= m <= 12:
        raise ValueError("m must lie in [2, 12], got %d" % m)
    j = np.arange(1, m + 1)
    nodes = 1j * (1.0 - 2.0 * (j - 1) / (m - 1))
    return NodeSet(nodes=nodes, kind="imaginary-equispaced")


@dataclass(frozen=True)
class WeightRow:
    """Weights w_j with sum_j w_j g(z_j) = g^(nu)(x0) for poly g."""

    nodes: np.ndarray
    x0: complex
    nu: int
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))


def _check_distinct(nodes):
    if nodes.size > 1:
        gaps = np.abs(nodes[:, None] - nodes[None, :])[
            ~np.eye(nodes.size, dtype=bool)
        ]
        if gaps.min() < 1e-14:
            raise ValueError("stencil nodes must be pairwise distinct")


def _fornberg_weights(nodes, x0, nu_max):
    """Fornberg's recursive finite-difference weights, real stencils.

    Returns c with c[:, nu] the weights for the nu-th derivative at x0.
    """
    n = nodes.size
    c = np.zeros((n, nu_max + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, nu_max)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _vandermonde_weights(nodes, x0, nu_max):
    """Solve the shifted Vandermonde system; handles complex stencils."""
    n = nodes.size
    shifted = nodes - x0
    V = np.vander(shifted, n, increasing=True).T  # V[m, j] = shifted_j**m
    rhs = np.zeros((n, nu_max + 1), dtype=np.complex128)
    fact = 1.0
    for nu in range(nu_max + 1):
        rhs[nu, nu] = fact
        fact = fact * (nu + 1)
    return np.linalg.solve(V, rhs)


def fd_weights(nodes, x0, nu_max):
    """Weight rows for derivatives 0..nu_max of the interpolant at x0."""
    nodes = np.asarray(nodes, dtype=np.complex128).ravel()
    nu_max = int(nu_max)
    if not 0 <= nu_max < nodes.size:
        raise ValueError("need 0 <= nu_max < number of nodes")
    _check_distinct(nodes)
    x0 = complex(x0)
    is_real = np.all(nodes.imag == 0.0) and x0.imag == 0.0
    if is_real:
        c = _fornberg_weights(nodes.real, x0.real, nu_max)
    else:
        c = _vandermonde_weights(nodes, x0, nu_max)
    return [
        WeightRow(nodes=nodes, x0=x0, nu=nu, weights=c[:, nu])
        for nu in range(nu_max + 1)
    ]


def lagrange_eval(nodes, values, tau):
    """Evaluate the interpolant through (z_j, values_j) at tau.

    values may be scalars or vectors (one per node).
    """
    nodes = np.asarray(nodes, dtype=np.complex128).ravel()
    if len(values) != nodes.size or nodes.size < 1:
        raise ValueError("need one value per node")
    _check_distinct(nodes)
    tau = complex(tau)
    acc = None
    for j in range(nodes.size):
        ell = 1.0 + 0.0j
        for i in range(nodes.size):
            if i != j:
                ell *= (tau - nodes[i]) / (nodes[j] - nodes[i])
        term = ell * np.asarray(values[j])
        acc = term if acc is None else acc + term
    return acc
