"""Evaluation of the phi-functions underlying exponential integrators.

phi_0(z) = exp(z) and, for n >= 1,

    phi_n(z) = 1/(n-1)! * integral_0^1 exp(z(1-s)) s^(n-1) ds,

equivalently phi_{n+1}(z) = (phi_n(z) - 1/n!) / z with phi_n(0) = 1/n!.

Four evaluation routes are provided: scalar/diagonal (precomputed tables of
phi_k over a diagonal operator), dense matrices (one augmented matrix
exponential yields all k), and matrix-free linear combinations
sum_k tau^k phi_k(tau A) x_k through a single Arnoldi projection shared by
several tau values.

Branch selection for the scalar kernel, chosen so that all k <= 8 stay
within ~1e-13 relative of a high-precision reference on |z| <= 100:

* k = 0: exp(z).
* |z| < CONTOUR_THRESHOLD: mean of phi_k over 32 points on a circle of
  radius 3 about z (trapezoid rule for the Cauchy integral; the recurrence
  is applied at the contour points, where |zeta| >= 2 keeps it stable).
  Served for k <= 8; higher k switch to the Taylor series, whose terms are
  all benign for |z| < 1.
* |z| >= threshold: upward recurrence from exp(z), except in the band
  k >= 5, |z| < k + 8 where the recurrence hits its roundoff floor and the
  Taylor series (mild cancellation there) is used instead.
"""

import operator
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CapacityError, KrylovConvergenceError

# |z| below which the contour branch takes over; kept settable for experiments.
CONTOUR_THRESHOLD = 1.0
CONTOUR_POINTS = 32
CONTOUR_RADIUS = 3.0

_CONTOUR_K_MAX = 8
_SERIES_K_MIN = 5
_K_LIMIT = 64
_DENSE_DIM_LIMIT = 2048


def _inverse_factorials(n):
    out = np.empty(n + 1)
    out[0] = 1.0
    for m in range(1, n + 1):
        out[m] = out[m - 1] / m  # underflows to 0 beyond m ~ 170, harmlessly
    return out


_INV_FACT = _inverse_factorials(520)
_CONTOUR_OFFSETS = CONTOUR_RADIUS * np.exp(
    2j * np.pi * np.arange(CONTOUR_POINTS) / CONTOUR_POINTS
)


def _phi_series(k, pts):
    """Taylor series sum_m z^m/(m+k)! by Horner, vectorized over pts."""
    m_top = int(3.2 * float(np.abs(pts).max())) + 40
    acc = np.full(pts.shape, _INV_FACT[k + m_top], dtype=np.complex128)
    for m in range(m_top - 1, -1, -1):
        acc = acc * pts + _INV_FACT[k + m]
    return acc


def _phi_contour(k_max, pts):
    """Rows 0..k_max of phi at pts via the 32-point contour mean."""
    zeta = pts[:, None] + _CONTOUR_OFFSETS[None, :]
    rows = np.empty((k_max + 1, pts.size), dtype=np.complex128)
    cur = np.exp(zeta)
    rows[0] = cur.mean(axis=1)
    inv = 1.0 / zeta
    for k in range(k_max):
        cur = (cur - _INV_FACT[k]) * inv
        rows[k + 1] = cur.mean(axis=1)
    return rows


def _phi_block(k_max, z):
    """phi_0..phi_k_max at the 1-D complex array z; returns (k_max+1, n)."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    out = np.empty((k_max + 1, z.size), dtype=np.complex128)
    out[0] = np.exp(z)
    if k_max == 0:
        return out
    az = np.abs(z)

    big = np.flatnonzero(az >= CONTOUR_THRESHOLD)
    if big.size:
        zb = z[big]
        azb = az[big]
        block = np.empty((k_max + 1, big.size), dtype=np.complex128)
        block[0] = out[0, big]
        inv = 1.0 / zb
        for k in range(k_max):
            block[k + 1] = (block[k] - _INV_FACT[k]) * inv
        for k in range(_SERIES_K_MIN, k_max + 1):
            band = azb < k + 8.0
            if band.any():
                block[k, band] = _phi_series(k, zb[band])
        out[:, big] = block

    small = np.flatnonzero(az < CONTOUR_THRESHOLD)
    if small.size:
        zs = z[small]
        kc = min(k_max, _CONTOUR_K_MAX)
        out[1 : kc + 1, small] = _phi_contour(kc, zs)[1:]
        for k in range(kc + 1, k_max + 1):
            out[k, small] = _phi_series(k, zs)
    return out


def _check_k(k):
    k = operator.index(k)
    if not 0 <= k <= _K_LIMIT:
        raise ValueError("phi index k must lie in [0, %d], got %r" % (_K_LIMIT, k))
    return k


def phi_scalar(k, z):
    """phi_k(z) for a single complex argument."""
    k = _check_k(k)
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError("phi argument must be finite, got %r" % (z,))
    return complex(_phi_block(k, np.array([z]))[k, 0])


@dataclass(frozen=True)
class PhiTable:
    """phi_k(eta * L_ii) for k = 0..k_max over the diagonal of an operator.

    entries[k][i] = phi_k(eta * diag[i]).  Immutable and shareable across
    threads; build once per (eta, k_max) pair and reuse.
    """

    entries: np.ndarray
    eta: float
    k_max: int

    def __post_init__(self):
        self.entries.setflags(write=False)


def build_phi_table(diag, eta, k_max) -> PhiTable:
    k_max = _check_k(k_max)
    diag = np.ascontiguousarray(diag, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(diag)):
        raise ValueError("diagonal entries must be finite")
    eta = float(eta)
    if not np.isfinite(eta):
        raise ValueError("eta must be finite")
    entries = _phi_block(k_max, eta * diag)
    return PhiTable(entries=entries, eta=eta, k_max=k_max)


def phi_dense(A, eta, k_max):
    """[phi_0(eta A), ..., phi_k_max(eta A)] for a dense square matrix.

    One matrix exponential of the augmented block matrix
    [[eta A, I, 0, ...], [0, 0, I, ...], ..., [0, ..., 0]] yields every
    phi_k in its top block row.  Intended for desk-scale matrices of
    moderate spectral radius; accuracy of the small phi_k entries degrades
    once exp overflows the working range.
    """
    k_max = _check_k(k_max)
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    n = A.shape[0]
    if n > _DENSE_DIM_LIMIT:
        raise CapacityError(
            "dense phi evaluation limited to dimension %d, got %d"
            % (_DENSE_DIM_LIMIT, n)
        )
    if k_max == 0:
        return [scipy.linalg.expm(eta * A)]
    size = n * (k_max + 1)
    W = np.zeros((size, size), dtype=np.complex128)
    W[:n, :n] = eta * A
    eye = np.eye(n)
    for i in range(k_max):
        W[i * n : (i + 1) * n, (i + 1) * n : (i + 2) * n] = eye
    E = scipy.linalg.expm(W)
    return [E[:n, i * n : (i + 1) * n].copy() for i in range(k_max + 1)]


@dataclass
class PhiComboRequest:
    """A matrix-free request for sum_k tau^k phi_k(tau A) x_k at several tau.

    operator: square ndarray or a callable v -> A v.
    vectors: x_0..x_p (p >= 0), all of the operator dimension.
    taus: evaluation scales, sorted ascending by magnitude; the largest
        governs the Krylov subspace growth, one subspace serves all.
    tolerance: relative accuracy target for the result at the largest tau.
    """

    operator: object
    vectors: list
    taus: list
    tolerance: float = 1e-12


def phi_combo(req: PhiComboRequest, max_dim: int = 128):
    """Evaluate a PhiComboRequest; returns one result vector per tau.

    Arnoldi projection on the augmented operator [[A, X], [0, K]] where the
    columns of X are x_p..x_1 and K is the nilpotent upshift, with start
    vector [x_0; e_p].  exp of that operator applied to the start vector
    carries sum_k tau^k phi_k(tau A) x_k in its leading block.  Full
    Gram-Schmidt with one reorthogonalization pass; residual estimated from
    the last subspace component (happy breakdown handled).

    Raises KrylovConvergenceError if max_dim is reached before the estimate
    drops below the requested tolerance.
    """
    xs = [np.ascontiguousarray(x, dtype=np.complex128).ravel() for x in req.vectors]
    if not xs:
        raise ValueError("request needs at least x_0")
    d = xs[0].size
    if any(x.size != d for x in xs):
        raise ValueError("all request vectors must share one dimension")
    taus = np.asarray(req.taus, dtype=np.complex128).ravel()
    if taus.size == 0:
        raise ValueError("request needs at least one tau")
    mags = np.abs(taus)
    if np.any(np.diff(mags) < -1e-14 * max(1.0, mags.max())):
        raise ValueError("taus must be sorted ascending by magnitude")
    tol = float(req.tolerance)
    if not tol > 0:
        raise ValueError("tolerance must be positive")

    A = req.operator
    if callable(A):
        apply_a = A
    else:
        Amat = np.asarray(A, dtype=np.complex128)
        if Amat.shape != (d, d):
            raise ValueError("operator shape %r does not match vectors" % (Amat.shape,))
        apply_a = Amat.__matmul__

    p = len(xs) - 1
    n_aug = d + p
    # balance the auxiliary block against the data: starting from [x_0; e_p]
    # as-is caps the relative accuracy of the state part at eps/|x_0| once
    # the state decays below the unit auxiliary coordinate.  Scaling the
    # auxiliary start to sigma (and the couplings by 1/sigma) leaves the
    # state trajectory unchanged and keeps all coordinates commensurate.
    sigma = max(np.linalg.norm(x) for x in xs)
    if sigma == 0.0:
        return [np.zeros(d, dtype=np.complex128) for _ in taus]
    X = np.column_stack(xs[1:][::-1]) / sigma if p else None  # x_p .. x_1

    def apply_aug(v):
        w = np.empty(n_aug, dtype=np.complex128)
        w[:d] = apply_a(v[:d])
        if p:
            w[:d] += X @ v[d:]
            w[d : n_aug - 1] = v[d + 1 :]
            w[n_aug - 1] = 0.0
        return w

    u0 = np.zeros(n_aug, dtype=np.complex128)
    u0[:d] = xs[0]
    if p:
        u0[-1] = sigma
    beta = np.linalg.norm(u0)

    max_dim = min(max_dim, n_aug)
    V = np.empty((max_dim + 1, n_aug), dtype=np.complex128)
    H = np.zeros((max_dim + 1, max_dim), dtype=np.complex128)
    V[0] = u0 / beta
    tau_big = taus[np.argmax(mags)]

    m = 0
    rel = np.inf
    converged = False
    pending = None
    while m < max_dim and not converged:
        # the error estimate already applied the operator to V[m]; reuse it
        w = pending if pending is not None else apply_aug(V[m])
        pending = None
        w_scale = np.linalg.norm(w)
        coeffs = V[: m + 1].conj() @ w
        w = w - V[: m + 1].T @ coeffs
        extra = V[: m + 1].conj() @ w
        w = w - V[: m + 1].T @ extra
        coeffs += extra
        H[: m + 1, m] = coeffs
        h_next = np.linalg.norm(w)
        H[m + 1, m] = h_next
        # roundoff-scale detection: a looser threshold (say 1e-12) truncates
        # the basis as soon as one solution mode decays near it, silently
        # injecting errors of that size into otherwise-exact linear steps
        happy = h_next <= 1e-14 * max(w_scale, 1e-300)
        if not happy:
            V[m + 1] = w / h_next
        m += 1
        if happy:
            converged = True
        elif m % 2 == 0 or m == max_dim:
            # two-term local error estimate: expm of H augmented by two rows
            # carries h_next * (phi_1 and phi_2 moments) in its bottom
            # entries.  The plain endpoint value h_next*|E[m-1,0]| collapses
            # when the omitted mode decays within the step, accepting results
            # that are wrong at the size of that mode.
            Hbar = np.zeros((m + 2, m + 2), dtype=np.complex128)
            Hbar[:m, :m] = H[:m, :m]
            Hbar[m, m - 1] = h_next
            Hbar[m + 1, m] = 1.0
            E = scipy.linalg.expm(tau_big * Hbar)
            res_norm = beta * np.linalg.norm(E[:m, 0])
            pending = apply_aug(V[m])
            avnorm = np.linalg.norm(pending)
            err1 = beta * abs(E[m, 0])
            err2 = beta * abs(E[m + 1, 0]) * avnorm
            if err1 > 10.0 * err2:
                err = err2
            elif err2 > err1:
                err = err1
            elif err1 > err2:
                err = err1 * err2 / (err1 - err2)
            else:
                err = err1
            rel = err / max(res_norm, 1e-300)
            if rel <= tol:
                converged = True
    if not converged:
        raise KrylovConvergenceError(
            "Krylov projection stalled at dimension %d (residual %.3e > %.3e)"
            % (m, rel, tol),
            residual=rel,
            dimension=m,
        )

    out = []
    for tau in taus:
        Et = scipy.linalg.expm(tau * H[:m, :m])
        full = beta * (Et[:, 0] @ V[:m])
        out.append(full[:d].copy())
    return out
