"""Time steppers built on the block-method coefficients.

A BlockState carries q solution snapshots at times t_n + r*z_j.  One step
maps it to the block at t_n + r*alpha using the expansion described in
coefficients.py.  Partitioned problems have a known diagonal linear part;
unpartitioned problems supply only a right-hand side and a Jacobian action,
and each step linearizes about the endpoint value and corrects for the
remainder through a single Krylov projection shared by all outputs.

The parallel strategy's outputs (and the fresh nonlinear evaluations they
need) are independent tasks; results are reduced in node order so the
output is identical for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .phi import PhiComboRequest, build_phi_table, phi_combo

_DIVERGE_NORM = 1e100


@dataclass
class SemilinearProblem:
    """y' = diag(linear_diag) y + N(t, y)."""

    dimension: int
    linear_diag: np.ndarray
    nonlinear: object

    def __post_init__(self):
        diag = np.ascontiguousarray(self.linear_diag, dtype=np.complex128).ravel()
        if diag.size != self.dimension:
            raise ValueError("linear_diag size does not match dimension")
        if not np.all(np.isfinite(diag)):
            raise ValueError("linear_diag must be finite")
        diag.setflags(write=False)
        self.linear_diag = diag


@dataclass
class UnpartitionedProblem:
    """y' = F(y) with a matrix-free Jacobian action J(y_base) v."""

    dimension: int
    rhs: object
    jacobian_action: object


@dataclass
class BlockState:
    """q solution vectors at t_n + r*z_j, with an optional nonlinear cache.

    nonlin rows are either a fresh evaluation of the problem nonlinearity at
    the matching node or NaN when unknown.
    """

    y: np.ndarray
    t_n: float
    r: float
    nonlin: np.ndarray = None

    def __post_init__(self):
        self.y = np.ascontiguousarray(self.y, dtype=np.complex128)
        if self.y.ndim != 2:
            raise ValueError("block values must form a (q, dimension) array")
        if not self.r > 0:
            raise ValueError("node radius r must be positive")
        if self.nonlin is not None:
            self.nonlin = np.ascontiguousarray(self.nonlin, dtype=np.complex128)
            if self.nonlin.shape != self.y.shape:
                raise ValueError("nonlin cache shape must match block values")


_TABLE_CACHE = {}
_SINGLE_TABLE_CACHE = {}


def _phi_table_for(diag, tau, k_max):
    """Memoized build_phi_table for the single-table steppers (EAB, two-stage).

    Rebuilding the table dominates their per-step cost on fine-step runs;
    the key is the exact linear part plus step scale, so any change to
    either produces a fresh table.
    """
    key = (diag.tobytes(), float(tau), int(k_max))
    hit = _SINGLE_TABLE_CACHE.get(key)
    if hit is None:
        hit = build_phi_table(diag, tau, k_max)
        _SINGLE_TABLE_CACHE[key] = hit
    return hit


def _tables_for(coeffs, r, diag):
    """One PhiTable per output row, cached per (method, r, linear part)."""
    key = (id(coeffs), float(r), diag.tobytes())
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    tables = []
    for j in range(coeffs.q):
        k_max = coeffs.deriv_weights[j].shape[0]
        tables.append(build_phi_table(diag, r * coeffs.eta[j].real, k_max))
    tables = tuple(tables)
    _TABLE_CACHE[key] = tables
    return tables


def _check_real_etas(coeffs):
    if np.max(np.abs(coeffs.eta.imag)) > 1e-13:
        raise ConfigurationError(
            "time stepping requires real step scales; imaginary-node methods"
            " are supported for stability analysis only"
        )


def _check_finite(block, label):
    norm = np.max(np.abs(block)) if block.size else 0.0
    if not np.isfinite(norm) or norm > _DIVERGE_NORM:
        raise DivergenceError("%s produced a non-finite or exploding block" % label)


def _row_output(coeffs, tables, j, y, n_in, n_out, r):
    table = tables[j]
    out = table.entries[0] * y[coeffs.endpoint_index[j]]
    dw = coeffs.deriv_weights[j]
    if dw.shape[0]:
        eta = coeffs.eta[j].real
        stem = coeffs.stencil_map[j]
        ln_src = np.empty((len(stem), y.shape[1]), dtype=np.complex128)
        for m, (gen, k) in enumerate(stem):
            ln_src[m] = n_in[k - 1] if gen == "input" else n_out[k - 1]
        scaled = r * ln_src
        for nu in range(dw.shape[0]):
            out = out + (eta ** (nu + 1)) * table.entries[nu + 1] * (
                dw[nu] @ scaled
            )
    return out


def step_partitioned(coeffs, prob: SemilinearProblem, state: BlockState, threads=1):
    """Advance one block step of a partitioned (known diagonal L) problem."""
    _check_real_etas(coeffs)
    q = coeffs.q
    y = state.y
    if y.shape != (q, prob.dimension):
        raise ValueError(
            "block shape %r does not match method/problem (%d, %d)"
            % (y.shape, q, prob.dimension)
        )
    r = state.r
    z = coeffs.nodes.real
    tables = _tables_for(coeffs, r, prob.linear_diag)

    needed_in = sorted(
        {k for st in coeffs.stencil_map for gen, k in st if gen == "input"}
    )
    needed_out = sorted(
        {k for st in coeffs.stencil_map for gen, k in st if gen == "output"}
    )

    n_in = np.full((q, prob.dimension), np.nan, dtype=np.complex128)
    if state.nonlin is not None:
        n_in[:] = state.nonlin
    missing = [
        k for k in needed_in if not np.all(np.isfinite(n_in[k - 1]))
    ]

    def fresh(k):
        return prob.nonlinear(state.t_n + r * z[k - 1], y[k - 1])

    if threads > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, val in zip(missing, pool.map(fresh, missing)):
                n_in[k - 1] = val
    else:
        for k in missing:
            n_in[k - 1] = fresh(k)

    out = np.empty_like(y)
    n_out = np.full((q, prob.dimension), np.nan, dtype=np.complex128)
    t_next = state.t_n + r * coeffs.alpha
    if needed_out:
        # serial strategies: ascending node order, fresh output values feed
        # later stencils
        needed_set = set(needed_out)
        for j in range(q):
            out[j] = _row_output(coeffs, tables, j, y, n_in, n_out, r)
            if (j + 1) in needed_set:
                n_out[j] = prob.nonlinear(t_next + r * z[j], out[j])
    else:
        def row(j):
            return _row_output(coeffs, tables, j, y, n_in, n_out, r)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for j, val in zip(range(q), pool.map(row, range(q))):
                    out[j] = val
        else:
            for j in range(q):
                out[j] = row(j)

    _check_finite(out, "block step")

    new_nonlin = np.full((q, prob.dimension), np.nan, dtype=np.complex128)
    have_any = False
    for j in range(q):
        if coeffs.deriv_weights[j].shape[0] == 0 and coeffs.eta[j] == 0:
            # pure shift row: output j is the old value at node k(j), whose
            # nonlinear value (if cached) moves with it
            src = n_in[coeffs.endpoint_index[j]]
            if np.all(np.isfinite(src)):
                new_nonlin[j] = src
                have_any = True
        elif np.all(np.isfinite(n_out[j])):
            new_nonlin[j] = n_out[j]
            have_any = True
    return BlockState(
        y=out, t_n=t_next, r=r, nonlin=new_nonlin if have_any else None
    )


def step_unpartitioned(
    coeffs,
    prob: UnpartitionedProblem,
    state: BlockState,
    tolerance=1e-12,
    max_dim=128,
):
    """Advance one block step given only a right-hand side and Jacobian action.

    The endpoint must be shared by every output (node 1), so the step
    linearizes once, builds the remainder values R_m at the stencil nodes,
    and obtains all q outputs from a single Krylov projection evaluated at
    the q step scales.
    """
    _check_real_etas(coeffs)
    q = coeffs.q
    y = state.y
    if y.shape != (q, prob.dimension):
        raise ValueError("block shape does not match method/problem")
    if np.any(coeffs.endpoint_index != coeffs.endpoint_index[0]):
        raise ConfigurationError(
            "unpartitioned stepping needs a common endpoint across outputs"
        )
    if any(gen == "output" for st in coeffs.stencil_map for gen, k in st):
        raise ConfigurationError(
            "unpartitioned stepping supports input-only (parallel) stencils"
        )
    r = state.r
    base_idx = int(coeffs.endpoint_index[0])
    y_b = y[base_idx]
    f_b = np.asarray(prob.rhs(y_b), dtype=np.complex128)

    def jv(v):
        return np.asarray(prob.jacobian_action(y_b, v), dtype=np.complex128)

    stem = coeffs.stencil_map[0]
    for j in range(1, q):
        if coeffs.stencil_map[j] != stem:
            raise ConfigurationError(
                "unpartitioned stepping needs one shared stencil (PMFC)"
            )
    remainders = np.zeros((len(stem), prob.dimension), dtype=np.complex128)
    for m, (gen, k) in enumerate(stem):
        if k - 1 != base_idx:
            diff = y[k - 1] - y_b
            remainders[m] = np.asarray(prob.rhs(y[k - 1])) - f_b - jv(diff)

    dw = coeffs.deriv_weights[0]
    xs = [y_b]
    x1 = r * (f_b - jv(y_b)) + dw[0] @ (r * remainders)
    xs.append(x1)
    for nu in range(1, dw.shape[0]):
        xs.append(dw[nu] @ (r * remainders))

    etas = coeffs.eta.real
    order = np.argsort(np.abs(etas), kind="stable")
    req = PhiComboRequest(
        operator=lambda v: r * jv(v),
        vectors=xs,
        taus=list(etas[order]),
        tolerance=tolerance,
    )
    results = phi_combo(req, max_dim=max_dim)
    out = np.empty_like(y)
    for pos, j in enumerate(order):
        out[j] = results[pos]
    _check_finite(out, "unpartitioned block step")
    return BlockState(y=out, t_n=state.t_n + r * coeffs.alpha, r=r, nonlin=None)


def _dispatch_step(coeffs, prob, state, threads, tolerance, max_dim):
    if isinstance(prob, SemilinearProblem):
        return step_partitioned(coeffs, prob, state, threads=threads)
    return step_unpartitioned(
        coeffs, prob, state, tolerance=tolerance, max_dim=max_dim
    )


def step_composite(
    coeffs_prop,
    coeffs_iter,
    kappa,
    prob,
    state,
    threads=1,
    tolerance=1e-12,
    max_dim=128,
):
    """Propagate once, then apply kappa corrector sweeps at the new time.

    kappa = 0 is exactly the bare propagator (no extra work, identical
    output).  The corrector shares the node set and has alpha = 0, so each
    sweep re-expands about the current candidate block without moving time.
    """
    kappa = int(kappa)
    if kappa < 0:
        raise ConfigurationError("kappa must be >= 0")
    if coeffs_iter.alpha != 0.0:
        raise ConfigurationError("corrector must have alpha = 0")
    if coeffs_prop.q != coeffs_iter.q or np.max(
        np.abs(coeffs_prop.nodes - coeffs_iter.nodes)
    ) > 1e-12:
        raise ConfigurationError("propagator and corrector must share nodes")
    s = _dispatch_step(coeffs_prop, prob, state, threads, tolerance, max_dim)
    for _ in range(kappa):
        s = _dispatch_step(coeffs_iter, prob, s, threads, tolerance, max_dim)
    return s


def bootstrap_initial_block(
    coeffs_iter, prob, y0, r, k=None, t0=0.0, threads=1, tolerance=1e-12
):
    """Build a starting block from a single initial value at node 1.

    Starts from the constant block y_j = y0 and applies k corrector sweeps
    (alpha = 0, default k = q); each sweep raises the order of the far
    nodes by one until the block interpolates the local solution.
    """
    if coeffs_iter.alpha != 0.0:
        raise ConfigurationError("bootstrap needs an alpha = 0 corrector")
    q = coeffs_iter.q
    if k is None:
        k = q
    k = int(k)
    if k < 0:
        raise ConfigurationError("sweep count must be >= 0")
    y0 = np.ascontiguousarray(y0, dtype=np.complex128).ravel()
    z1 = coeffs_iter.nodes.real[0]
    state = BlockState(
        y=np.tile(y0, (q, 1)), t_n=t0 - r * z1, r=r
    )
    for _ in range(k):
        state = _dispatch_step(coeffs_iter, prob, state, threads, tolerance, 128)
    return state


def step_eab(coeffs, prob: SemilinearProblem, history, y_n, h, t_n=0.0):
    """One multistep update from p stored nonlinear values.

    history holds N at the p equispaced past times, oldest first, newest
    (= N(t_n, y_n)) last.
    """
    p = coeffs.q
    if len(history) != p:
        raise ValueError("need exactly %d history values, got %d" % (p, len(history)))
    if not h > 0:
        raise ValueError("stepsize must be positive")
    hist = np.ascontiguousarray(history, dtype=np.complex128)
    table = _phi_table_for(prob.linear_diag, h, p)
    dw = coeffs.deriv_weights[p - 1]
    out = table.entries[0] * np.asarray(y_n, dtype=np.complex128)
    scaled = h * hist
    for nu in range(dw.shape[0]):
        out = out + table.entries[nu + 1] * (dw[nu] @ scaled)
    _check_finite(out, "multistep update")
    return out


def step_etdrk2(prob: SemilinearProblem, y_n, h, t_n=0.0):
    """Two-stage second-order exponential Runge-Kutta step."""
    if not h > 0:
        raise ValueError("stepsize must be positive")
    y_n = np.asarray(y_n, dtype=np.complex128)
    table = _phi_table_for(prob.linear_diag, h, 2)
    n0 = np.asarray(prob.nonlinear(t_n, y_n), dtype=np.complex128)
    stage = table.entries[0] * y_n + h * table.entries[1] * n0
    n1 = np.asarray(prob.nonlinear(t_n + h, stage), dtype=np.complex128)
    out = stage + h * table.entries[2] * (n1 - n0)
    _check_finite(out, "two-stage exponential step")
    return out
