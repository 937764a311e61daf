"""Coefficient generation for exponential polynomial block methods.

A block method advances q solution values sitting at scaled nodes z_j.  Each
output j is produced by an exponential Adams-type expansion about an endpoint
b_j (itself one of the nodes):

    y_j_new = phi_0(r eta_j L) Ly(b_j)
              + sum_{nu=0}^{g} eta_j^(nu+1) phi_{nu+1}(r eta_j L) LN_nu(b_j)

where eta_j = z_j + alpha - b_j, Ly interpolates the block values, and
LN_nu is the nu-th derivative at b_j of the polynomial interpolating the
(r-scaled) nonlinear values over the active stencil.  The stencil for output
j is controlled by an index-set strategy:

    PMFC_l  parallel, maximal fixed cardinality: inputs l..q, no outputs.
    SMFC_l  serial, maximal fixed cardinality: inputs max(j,l)..q,
            outputs l..j-1 (shifted by alpha).
    SMVC_l  serial, maximal variable cardinality: inputs l..q,
            outputs l..j-1.

Serial strategies consume nonlinear values of earlier outputs within the
same step; the parallel strategy uses inputs only, so its outputs are
independent tasks.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .nodes import NodeSet, fd_weights

_STRATEGIES = ("PMFC", "SMFC", "SMVC")
_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class MethodSpec:
    """Full description of one block method."""

    q: int
    nodes: NodeSet
    strategy: str
    ell: int
    endpoints: np.ndarray
    alpha: float
    partitioning: str = "partitioned"
    endpoint_index: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.strategy not in _STRATEGIES:
            raise ConfigurationError(
                "unknown strategy %r; supported explicit strategies are %s"
                " (implicit variants are not implemented)"
                % (self.strategy, ", ".join(_STRATEGIES))
            )
        if self.q != self.nodes.q:
            raise ConfigurationError("q does not match the node count")
        if not 1 <= self.ell <= self.q:
            raise ConfigurationError("need 1 <= ell <= q")
        if self.partitioning not in ("partitioned", "unpartitioned"):
            raise ConfigurationError("unknown partitioning %r" % (self.partitioning,))
        alpha = float(self.alpha)
        if not (np.isfinite(alpha) and alpha >= 0):
            raise ConfigurationError("alpha must be finite and >= 0")
        object.__setattr__(self, "alpha", alpha)
        ends = np.asarray(self.endpoints, dtype=np.complex128).ravel()
        if ends.size != self.q:
            raise ConfigurationError("need one endpoint per output")
        z = self.nodes.nodes
        idx = np.empty(self.q, dtype=int)
        for j, b in enumerate(ends):
            hits = np.flatnonzero(np.abs(z - b) < _MATCH_TOL)
            if hits.size == 0:
                raise ConfigurationError(
                    "endpoint %r does not coincide with any node" % (b,)
                )
            idx[j] = hits[0]
        ends.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "endpoints", ends)
        object.__setattr__(self, "endpoint_index", idx)
        if self.strategy == "SMVC" and alpha == 0.0:
            raise ConfigurationError(
                "SMVC cannot be used with alpha = 0: input and shifted output"
                " nodes coincide"
            )

    def cache_key(self):
        return (
            self.q,
            tuple(complex(v) for v in self.nodes.nodes),
            self.strategy,
            self.ell,
            tuple(complex(v) for v in self.endpoints),
            self.alpha,
            self.partitioning,
        )


@dataclass(frozen=True)
class IndexSets:
    """Input/output node indices (1-based) feeding one output's stencil."""

    input: tuple
    output: tuple


def index_sets(strategy, ell, q):
    """Stencil index sets for outputs j = 1..q under the named strategy."""
    if strategy not in _STRATEGIES:
        raise ValueError("unknown strategy %r" % (strategy,))
    q = int(q)
    ell = int(ell)
    if not 1 <= ell <= q:
        raise ValueError("need 1 <= ell <= q")
    sets = []
    for j in range(1, q + 1):
        if strategy == "PMFC":
            inp = tuple(range(ell, q + 1))
            out = ()
        elif strategy == "SMFC":
            inp = tuple(range(max(j, ell), q + 1))
            out = tuple(range(ell, j))
        else:  # SMVC
            inp = tuple(range(ell, q + 1))
            out = tuple(range(ell, j))
        sets.append(IndexSets(input=inp, output=out))
    return sets


@dataclass(frozen=True)
class MethodCoefficients:
    """Everything a stepper needs: per-output scales, weights, stencils.

    eta[j]: step scale z_j + alpha - b_j.
    value_weights[j]: interpolation weights of the block values at b_j
        (a delta row when b_j is a node, which it always is here).
    deriv_weights[j]: (g_j+1, s_j) rows; row nu gives the nu-th derivative
        at b_j of the interpolant through the s_j active stencil members.
    stencil_map[j]: ordered ("input"|"output", node index 1-based) pairs,
        inputs first; "output" members live at z_k + alpha and their
        nonlinear values come from the current step's earlier outputs.
    coeff_a/coeff_b/coeff_d: dense tensor form of the same method;
        output j = sum_k a[j,k] phi_0(r eta_j L) y_k
                  + sum_k sum_l b[j,k,l] eta_j^l phi_l(r eta_j L) r N(y_k)
                  + same with d[j,k,l] over new-generation values.
        d vanishes for the parallel strategy; c-style weights on
        new-generation solution values are identically zero for every
        explicit method here and are not stored.
    """

    spec: object
    eta: np.ndarray
    value_weights: np.ndarray
    deriv_weights: tuple
    stencil_map: tuple
    endpoint_index: np.ndarray
    coeff_a: np.ndarray
    coeff_b: np.ndarray
    coeff_d: np.ndarray
    label: str = "custom"

    @property
    def q(self):
        return self.eta.size

    @property
    def alpha(self):
        return self.spec.alpha

    @property
    def nodes(self):
        node_values = getattr(self.spec, "node_values", None)
        return node_values if node_values is not None else self.spec.nodes.nodes


def _freeze(a):
    a.setflags(write=False)
    return a


def _assemble(spec, sets, label):
    z = spec.nodes.nodes
    q = spec.q
    alpha = spec.alpha
    eta = np.empty(q, dtype=np.complex128)
    value_rows = np.empty((q, q), dtype=np.complex128)
    deriv_rows = []
    stencils = []
    g_max = 0
    for j in range(q):
        b = spec.endpoints[j]
        eta[j] = z[j] + alpha - b
        value_rows[j] = fd_weights(z, b, 0)[0].weights
        members = [("input", k) for k in sets[j].input] + [
            ("output", k) for k in sets[j].output
        ]
        pts = np.array(
            [z[k - 1] if gen == "input" else z[k - 1] + alpha for gen, k in members]
        )
        gaps = np.abs(pts[:, None] - pts[None, :])[~np.eye(pts.size, dtype=bool)]
        if pts.size > 1 and gaps.min() < 1e-10:
            raise ConfigurationError(
                "stencil collision for output %d: an input node coincides"
                " with a shifted output node at this alpha" % (j + 1)
            )
        rows = fd_weights(pts, b, pts.size - 1)
        deriv_rows.append(
            _freeze(np.stack([row.weights for row in rows]))
        )
        stencils.append(tuple(members))
        g_max = max(g_max, pts.size - 1)

    l_dim = g_max + 2
    A = np.zeros((q, q), dtype=np.complex128)
    B = np.zeros((q, q, l_dim), dtype=np.complex128)
    D = np.zeros((q, q, l_dim), dtype=np.complex128)
    for j in range(q):
        A[j] = value_rows[j]
        for m, (gen, k) in enumerate(stencils[j]):
            target = B if gen == "input" else D
            for nu in range(deriv_rows[j].shape[0]):
                target[j, k - 1, nu + 1] += deriv_rows[j][nu, m]
    return MethodCoefficients(
        spec=spec,
        eta=_freeze(eta),
        value_weights=_freeze(value_rows),
        deriv_weights=tuple(deriv_rows),
        stencil_map=tuple(stencils),
        endpoint_index=spec.endpoint_index,
        coeff_a=_freeze(A),
        coeff_b=_freeze(B),
        coeff_d=_freeze(D),
        label=label,
    )


_CACHE = {}


def generate_coefficients(spec: MethodSpec, label=None) -> MethodCoefficients:
    key = spec.cache_key()
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    sets = index_sets(spec.strategy, spec.ell, spec.q)
    out = _assemble(spec, sets, label or "%s_%d" % (spec.strategy, spec.ell))
    _CACHE[key] = out
    return out


def legendre_method(q, alpha, ell=2, strategy="PMFC", partitioning="partitioned"):
    """The standard Legendre block method: endpoint z_1 = -1 for every row."""
    from .nodes import legendre_epbm_nodes

    nodes = legendre_epbm_nodes(q)
    ends = np.full(q, nodes.nodes[0])
    spec = MethodSpec(
        q=q,
        nodes=nodes,
        strategy=strategy,
        ell=ell,
        endpoints=ends,
        alpha=alpha,
        partitioning=partitioning,
    )
    return generate_coefficients(
        spec, label="legendre-q%d-a%g-%s%d" % (q, alpha, strategy, ell)
    )


@dataclass(frozen=True)
class _EabSpec:
    """Lightweight stand-in spec for the multistep history methods.

    Their history nodes -(p-1)..0 fall outside the unit-disk normalization
    of NodeSet, so they are assembled directly rather than through
    MethodSpec.
    """

    q: int
    node_values: np.ndarray
    alpha: float = 1.0
    partitioning: str = "partitioned"
    strategy: str = "EAB"
    ell: int = 1


_EAB_CACHE = {}


def eab_coefficients(p) -> MethodCoefficients:
    """Exponential Adams-Bashforth of order p as a block-form method.

    Block values sit at -(p-1)..0 times the stepsize.  Rows 1..p-1 shift
    history down one slot (eta = 0, empty stencil); row p is the Adams
    expansion about 0 over all p history values with eta = 1.
    """
    p = int(p)
    if not 1 <= p <= 8:
        raise ValueError("p must lie in [1, 8], got %d" % p)
    if p in _EAB_CACHE:
        return _EAB_CACHE[p]
    nodes = np.arange(-(p - 1), 1, dtype=np.complex128)
    eta = np.zeros(p, dtype=np.complex128)
    eta[p - 1] = 1.0
    value_rows = np.zeros((p, p), dtype=np.complex128)
    endpoint_index = np.empty(p, dtype=int)
    deriv_rows = []
    stencils = []
    # shift rows: output j takes the value at node j+1 and moves on
    for j in range(p - 1):
        value_rows[j, j + 1] = 1.0
        endpoint_index[j] = j + 1
        deriv_rows.append(_freeze(np.zeros((0, 0))))
        stencils.append(())
    value_rows[p - 1, p - 1] = 1.0
    endpoint_index[p - 1] = p - 1
    rows = fd_weights(nodes, 0.0, p - 1)
    deriv_rows.append(_freeze(np.stack([row.weights for row in rows])))
    stencils.append(tuple(("input", k) for k in range(1, p + 1)))

    l_dim = p + 1
    A = value_rows.copy()
    B = np.zeros((p, p, l_dim), dtype=np.complex128)
    for nu in range(p):
        for m in range(p):
            B[p - 1, m, nu + 1] += deriv_rows[p - 1][nu, m]
    spec = _EabSpec(q=p, node_values=_freeze(nodes))
    endpoint_index.setflags(write=False)
    _EAB_CACHE[p] = MethodCoefficients(
        spec=spec,
        eta=_freeze(eta),
        value_weights=_freeze(value_rows),
        deriv_weights=tuple(deriv_rows),
        stencil_map=tuple(stencils),
        endpoint_index=endpoint_index,
        coeff_a=_freeze(A),
        coeff_b=_freeze(B),
        coeff_d=_freeze(np.zeros((p, p, l_dim), dtype=np.complex128)),
        label="eab-%d" % p,
    )
    return _EAB_CACHE[p]
