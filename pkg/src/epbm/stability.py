"""Linear stability analysis of the block methods.

The two-parameter scalar model y' = lam1*y + lam2*y treats the lam1 term
as the known linear part and the lam2 term as the nonlinearity.  One
block step then multiplies the block by a q x q amplification matrix
M(z1, z2) with z1 = h*lam1 and z2 = h*lam2, and the method is stable at
(z1, z2) when M is power bounded.  The step formulas touch the
nonlinear values only through stencil weights, so M is a polynomial in
z2 with matrix coefficients fixed by (method, z1, alpha); region slices
over z2 grids evaluate that polynomial by Horner's rule in batches.

alpha enters as the time scale h = r*alpha.  A corrector (alpha = 0)
re-expands at the same r, so inside a composite its matrix is built
with the propagator's alpha; a bare corrector scan has no time scale
and is rejected.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .phi import phi_scalar

_GRID_LIMIT = 2000 * 2000


@dataclass(frozen=True)
class AmpMatrix:
    """One-step amplification matrix at a point of the (z1, z2) plane."""

    m: np.ndarray
    z1: complex
    z2: complex
    alpha: float

    def __post_init__(self):
        m = np.ascontiguousarray(self.m, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("amplification matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("amplification matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular z2 lattice: re/im ranges and point counts."""

    re: tuple
    im: tuple
    n_re: int
    n_im: int

    def __post_init__(self):
        for lo, hi in (self.re, self.im):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ConfigurationError("grid ranges must be finite, lo <= hi")
        if self.n_re < 1 or self.n_im < 1:
            raise ConfigurationError("grid needs at least one point per axis")
        if self.n_re * self.n_im > _GRID_LIMIT:
            raise ConfigurationError(
                "grid resolution %d x %d exceeds the %d-point guard"
                % (self.n_re, self.n_im, _GRID_LIMIT)
            )


@dataclass
class StabilitySlice:
    """Stable/unstable mask over a z2 grid at fixed z1 and alpha.

    mask has shape (n_im, n_re); failures counts grid points where the
    eigenvalue solver failed (marked unstable).
    """

    z1: complex
    alpha: float
    re_axis: np.ndarray
    im_axis: np.ndarray
    mask: np.ndarray
    failures: int = 0


def _z2_polynomial(coeffs, z1, alpha):
    """Matrix coefficients C_d with M(z2) = sum_d z2^d C_d.

    Input-stencil terms contribute at degree 1; output-stencil terms
    (serial strategies) substitute earlier rows, raising their degree by
    one, so the expansion stays exact for every strategy.
    """
    q = coeffs.q
    rows = []
    for j in range(q):
        arg = coeffs.eta[j] * z1 / alpha
        parts = [np.zeros(q, dtype=np.complex128)]
        parts[0][coeffs.endpoint_index[j]] = phi_scalar(0, arg)
        dw = coeffs.deriv_weights[j]
        for nu in range(dw.shape[0]):
            c = coeffs.eta[j] ** (nu + 1) * phi_scalar(nu + 1, arg) / alpha
            for pos, (gen, k) in enumerate(coeffs.stencil_map[j]):
                w = dw[nu][pos]
                if w == 0:
                    continue
                if gen == "input":
                    if len(parts) < 2:
                        parts.append(np.zeros(q, dtype=np.complex128))
                    parts[1][k - 1] += c * w
                else:
                    src = rows[k - 1]
                    while len(parts) < len(src) + 1:
                        parts.append(np.zeros(q, dtype=np.complex128))
                    for d, vec in enumerate(src):
                        parts[d + 1] += c * w * vec
        rows.append(parts)
    degree = max(len(p) for p in rows)
    coeff_mats = [np.zeros((q, q), dtype=np.complex128) for _ in range(degree)]
    for j, parts in enumerate(rows):
        for d, vec in enumerate(parts):
            coeff_mats[d][j] = vec
    return coeff_mats


def _resolve_alpha(coeffs, alpha):
    a = coeffs.alpha if alpha is None else float(alpha)
    if a == 0.0:
        raise ConfigurationError(
            "alpha = 0 leaves z1/alpha undefined; scan a corrector with the"
            " propagator's alpha (composite) instead"
        )
    return a


def _horner(coeff_mats, z2):
    out = coeff_mats[-1]
    for c in coeff_mats[-2::-1]:
        out = out * z2 + c
    return out


def amplification_matrix(coeffs, z1, z2, alpha=None):
    """M(z1, z2): column k is the output block for the k-th unit input."""
    a = _resolve_alpha(coeffs, alpha)
    z1 = complex(z1)
    z2 = complex(z2)
    if not (np.isfinite(z1) and np.isfinite(z2)):
        raise ValueError("z1 and z2 must be finite")
    mats = _z2_polynomial(coeffs, z1, a)
    return AmpMatrix(m=_horner(mats, z2), z1=z1, z2=z2, alpha=a)


def composite_amplification_matrix(coeffs_prop, coeffs_iter, kappa, z1, z2):
    """Amplification of kappa corrector sweeps after one propagator step."""
    kappa = int(kappa)
    if kappa < 0:
        raise ConfigurationError("kappa must be >= 0")
    if coeffs_iter.alpha != 0.0:
        raise ConfigurationError("corrector must have alpha = 0")
    if coeffs_prop.q != coeffs_iter.q or np.max(
        np.abs(coeffs_prop.nodes - coeffs_iter.nodes)
    ) > 1e-12:
        raise ConfigurationError("propagator and corrector must share nodes")
    a = _resolve_alpha(coeffs_prop, None)
    prop = amplification_matrix(coeffs_prop, z1, z2, alpha=a)
    it = amplification_matrix(coeffs_iter, z1, z2, alpha=a)
    m = prop.m
    for _ in range(kappa):
        m = it.m @ m
    return AmpMatrix(m=m, z1=complex(z1), z2=complex(z2), alpha=a)


def is_power_bounded(m, tol=1e-10):
    """sup_n ||M^n|| finite: eigenvalues inside the closed unit disk and
    near-unit eigenvalues non-defective.

    Defectiveness of a cluster of near-unit eigenvalues is read off the
    rank of M - lambda*I: geometric multiplicity below the cluster size
    means a Jordan block, hence polynomial growth.
    """
    mat = m.m if isinstance(m, AmpMatrix) else np.asarray(m, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("need a square matrix")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    vals = np.linalg.eigvals(mat)
    mags = np.abs(vals)
    if np.max(mags) > 1.0 + tol:
        return False
    near = vals[np.abs(mags - 1.0) <= tol]
    if near.size <= 1:
        return True
    # a defective pair splits by ~sqrt(eps) under roundoff, so cluster
    # wider than that; rank cut sits above the cluster radius and far
    # below order-one singular values
    cluster = max(tol, 1e-6)
    q = mat.shape[0]
    eye = np.eye(q)
    left = list(near)
    while left:
        lam0 = left.pop()
        members = [lam0]
        rest = []
        for lam in left:
            (members if abs(lam - lam0) <= cluster else rest).append(lam)
        left = rest
        if len(members) == 1:
            continue
        lam = np.mean(members)
        s = np.linalg.svd(mat - lam * eye, compute_uv=False)
        rank = int(np.sum(s > 1e-5 * max(1.0, s[0])))
        if q - rank < len(members):
            return False
    return True


def unpartitioned_scalar_amplification(z):
    """One unpartitioned step on y' = lam*y amplifies by exactly exp(h*lam):
    the linearization is exact and every remainder vanishes."""
    return np.exp(np.asarray(z, dtype=np.complex128))


def _mirror_pairing(axis):
    """Index pairing i <-> j with axis[j] = -axis[i], or None."""
    n = axis.size
    span = max(1.0, float(np.max(np.abs(axis))))
    for i in range(n):
        if abs(axis[i] + axis[n - 1 - i]) > 1e-12 * span:
            return None
    return [n - 1 - i for i in range(n)]


def _row_masks(stacked, tol, count):
    """Vectorized eigenvalue screen for a batch of matrices, with the rare
    near-unit candidates re-examined one by one."""
    mask = np.zeros(count, dtype=bool)
    failures = 0
    try:
        vals = np.linalg.eigvals(stacked)
        mags = np.abs(vals)
        top = mags.max(axis=1)
        inside = top <= 1.0 + tol
        boundary = inside & (np.abs(mags - 1.0) <= tol).any(axis=1)
        mask[:] = inside
        for idx in np.nonzero(boundary)[0]:
            mask[idx] = is_power_bounded(stacked[idx], tol=tol)
    except np.linalg.LinAlgError:
        for idx in range(count):
            try:
                mask[idx] = is_power_bounded(stacked[idx], tol=tol)
            except (np.linalg.LinAlgError, ValueError):
                mask[idx] = False
                failures += 1
    return mask, failures


def stability_slice(
    coeffs,
    z1,
    grid: GridSpec,
    alpha=None,
    corrector=None,
    kappa=0,
    tol=1e-10,
):
    """Scan the z2 grid at fixed z1; mask point = power bounded there.

    With a corrector, the scanned method is the composite (kappa sweeps
    after the propagator step).  For real z1 on an im-symmetric grid the
    lower half-plane is mirrored from the upper half, making conjugate
    symmetry exact by construction.
    """
    a = _resolve_alpha(coeffs, alpha)
    z1 = complex(z1)
    if corrector is not None:
        kappa = int(kappa)
        if kappa < 0:
            raise ConfigurationError("kappa must be >= 0")
        if corrector.alpha != 0.0:
            raise ConfigurationError("corrector must have alpha = 0")
        mats_iter = _z2_polynomial(corrector, z1, a)
    else:
        mats_iter = None
        kappa = 0
    mats = _z2_polynomial(coeffs, z1, a)

    re_axis = np.linspace(grid.re[0], grid.re[1], grid.n_re)
    im_axis = np.linspace(grid.im[0], grid.im[1], grid.n_im)
    mask = np.zeros((grid.n_im, grid.n_re), dtype=bool)
    failures = 0

    pairing = _mirror_pairing(im_axis) if z1.imag == 0.0 else None
    rows = range(grid.n_im)
    if pairing is not None:
        rows = [i for i in rows if im_axis[i] >= 0.0]

    for i in rows:
        z2 = (re_axis + 1j * im_axis[i])[:, None, None]
        stacked = _horner(mats, z2)
        if mats_iter is not None and kappa:
            it = _horner(mats_iter, z2)
            for _ in range(kappa):
                stacked = it @ stacked
        row_mask, row_fail = _row_masks(stacked, tol, grid.n_re)
        mask[i] = row_mask
        failures += row_fail

    if pairing is not None:
        for i in range(grid.n_im):
            if im_axis[i] < 0.0:
                mask[i] = mask[pairing[i]]

    return StabilitySlice(
        z1=z1,
        alpha=a,
        re_axis=re_axis,
        im_axis=im_axis,
        mask=mask,
        failures=failures,
    )


def write_slice_csv(sl: StabilitySlice, path, label=""):
    """One row per grid point: re(z2), im(z2), stable; '#' metadata header."""
    with open(path, "w") as fh:
        if label:
            fh.write("# method: %s\n" % label)
        fh.write("# z1: %.17g%+.17gj\n" % (sl.z1.real, sl.z1.imag))
        fh.write("# alpha: %.17g\n" % sl.alpha)
        fh.write("# failures: %d\n" % sl.failures)
        fh.write("re_z2,im_z2,stable\n")
        for i, im in enumerate(sl.im_axis):
            for j, re in enumerate(sl.re_axis):
                fh.write("%.17g,%.17g,%d\n" % (re, im, int(sl.mask[i, j])))
