"""Benchmark right-hand sides for the steppers.

Three periodic problems are evolved in Fourier coefficients, where the stiff
linear part is exactly diagonal: Kuramoto-Sivashinsky, Nikolaevskiy, and
Korteweg-de Vries.  Their quadratic flux term -1/2 d/dx(u^2) is evaluated
pseudospectrally with two-thirds dealiasing.  The fourth problem is a 2-D
advection-diffusion-reaction system with homogeneous Neumann walls,
discretized by second-order central differences and exposed matrix-free for
the unpartitioned stepper.

Transform convention: unnormalized forward FFT, 1/n inverse, modes ordered
[0 .. n/2-1, -n/2 .. -1].  Factory defaults are sized for quick desk runs;
the full-size configurations (1024 modes to t = 60 for KS, 4096 to t = 50
for Nikolaevskiy, a 200 x 200 ADR grid) are reachable by passing modes, n,
or t_final explicitly.

All callbacks are pure and allocate their own scratch, so they are safe to
call from the stepper's worker threads.
"""

from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .stepping import SemilinearProblem, UnpartitionedProblem


def two_thirds_mask(n):
    """Boolean keep-mask over FFT modes, False on the top third.

    Keeps |m| <= n // 3.  Products of two fields band-limited to that range
    alias only into the zeroed band, so masking input and output of a
    quadratic term removes aliasing completely.
    """
    m = np.fft.fftfreq(n, d=1.0 / n)
    return np.abs(m) <= n // 3


@dataclass
class SpectralProblem:
    """Periodic semilinear system y' = diag(L) y + N(t, y) in Fourier space.

    initial_state and all stepping traffic are spectral coefficients; use
    np.fft.ifft to recover the physical field.
    """

    modes: int
    wavenumbers: np.ndarray
    linear_diag: np.ndarray
    nonlinear: object
    t_final: float
    initial_state: np.ndarray

    def __post_init__(self):
        self.wavenumbers = np.asarray(self.wavenumbers, dtype=np.float64)
        self.linear_diag = np.asarray(self.linear_diag, dtype=np.complex128)
        self.initial_state = np.asarray(self.initial_state, dtype=np.complex128)
        for name in ("wavenumbers", "linear_diag", "initial_state"):
            if getattr(self, name).shape != (self.modes,):
                raise ConfigurationError("%s must have length modes" % name)

    def semilinear(self):
        """Adapter to the partitioned stepper's problem type."""
        return SemilinearProblem(self.modes, self.linear_diag, self.nonlinear)


@dataclass
class AdrProblem:
    """2-D advection-diffusion-reaction system on the unit square.

    u_t = epsilon (u_xx + u_yy) + delta (u_x + u_y) + gamma u (u - 1/2)(1 - u)
    with homogeneous Neumann walls, on an n x n vertex grid flattened
    row-major.  rhs(u) and jacobian_action(u_base, v) are matrix-free.
    """

    n: int
    epsilon: float
    delta: float
    gamma: float
    rhs: object
    jacobian_action: object
    t_final: float
    initial_state: np.ndarray

    def unpartitioned(self):
        """Adapter to the unpartitioned stepper's problem type."""
        return UnpartitionedProblem(self.n * self.n, self.rhs, self.jacobian_action)


def _check_modes(modes):
    ok = isinstance(modes, (int, np.integer)) and 128 <= modes <= 1024
    if not ok or modes & (modes - 1):
        raise ConfigurationError(
            "modes must be a power of two in [128, 1024], got %r" % (modes,)
        )


def _spectral_grid(n, x_left, length):
    x = x_left + (length / n) * np.arange(n)
    k = np.fft.fftfreq(n, d=1.0 / n) * (2.0 * np.pi / length)
    return x, k


def _quadratic_flux(n, k):
    """Pseudospectral N(v) = spectrum of -1/2 d/dx(u^2), dealiased."""
    keep = two_thirds_mask(n)
    deriv = np.where(keep, -0.5j * k, 0.0)

    def nonlinear(t, v):
        u = np.fft.ifft(np.where(keep, v, 0.0))
        return deriv * np.fft.fft(u * u)

    return nonlinear


def make_ks(modes=256, t_final=10.0):
    """Kuramoto-Sivashinsky: u_t = -u_xx - u_xxxx - 1/2 (u^2)_x on [0, 64 pi].

    Linear symbol k^2 - k^4 with k = m / 32; growth peaks at 1/4 near
    |k| = 0.7, everything beyond |k| = 1 decays.  IC is the two-mode field
    cos(x/16)(1 + sin(x/16)).  The long chaotic run uses modes=1024 and
    t_final=60.
    """
    _check_modes(modes)
    x, k = _spectral_grid(modes, 0.0, 64.0 * np.pi)
    # powers by explicit multiplication: libm pow is an ulp off between k and
    # -k, which would break exact conjugate symmetry of the symbol
    k2 = k * k
    lin = (k2 - k2 * k2).astype(np.complex128)
    u0 = np.cos(x / 16.0) * (1.0 + np.sin(x / 16.0))
    return SpectralProblem(
        modes, k, lin, _quadratic_flux(modes, k), t_final, np.fft.fft(u0)
    )


def make_nikolaevskiy(modes=512, t_final=10.0, r=0.25, alpha=2.1, beta=0.77,
                      eps=0.1):
    """Nikolaevskiy equation on [-75 pi, 75 pi].

    Symbol i alpha k^3 - i beta k^5 + k^2 (r - (1 - k^2)^2), k = m / 75:
    a narrow unstable band around |k| = 1 rides on strong dispersion.  IC
    sin(x) + eps sin(x/25).  The full-size run uses modes=4096, t_final=50.
    """
    _check_modes(modes)
    x, k = _spectral_grid(modes, -75.0 * np.pi, 150.0 * np.pi)
    k2 = k * k
    k3 = k2 * k
    damp = 1.0 - k2
    lin = 1j * alpha * k3 - 1j * beta * (k3 * k2) + k2 * (r - damp * damp)
    # odd-order derivatives have no consistent sign at the Nyquist mode;
    # keeping that entry real keeps real fields real
    lin[modes // 2] = lin[modes // 2].real
    u0 = np.sin(x) + eps * np.sin(x / 25.0)
    return SpectralProblem(
        modes, k, lin, _quadratic_flux(modes, k), t_final, np.fft.fft(u0)
    )


def make_kdv(modes=256, t_final=3.6 / np.pi, delta=0.022):
    """Korteweg-de Vries: u_t = -delta u_xxx - 1/2 (u^2)_x on [0, 2].

    Purely dispersive symbol i delta k^3 with k = pi m; IC cos(pi x)
    steepens and sheds a soliton train by t = 3.6 / pi.
    """
    _check_modes(modes)
    x, k = _spectral_grid(modes, 0.0, 2.0)
    lin = 1j * delta * (k * k * k)
    lin[modes // 2] = lin[modes // 2].real
    u0 = np.cos(np.pi * x)
    return SpectralProblem(
        modes, k, lin, _quadratic_flux(modes, k), t_final, np.fft.fft(u0)
    )


_ADR_REGIMES = {
    "stiff-linearity": (1.0 / 100.0, -10.0, 100.0),
    "stiff-nonlinearity": (1.0 / 10000.0, -0.1, 1000.0),
}


def make_adr(n=48, regime="stiff-linearity", t_final=0.01):
    """2-D ADR system: stiffness sits in the linear or the reaction term.

    regime "stiff-linearity" uses (epsilon, delta, gamma) = (1/100, -10, 100)
    so the advection-diffusion stencil dominates the spectral radius;
    "stiff-nonlinearity" uses (1/10000, -0.1, 1000) so the cubic reaction
    does.  IC 256 (x y (1-x)(1-y))^2 + 0.3.  The full-size grid is n=200.
    """
    if regime not in _ADR_REGIMES:
        raise ConfigurationError(
            "regime must be one of %s, got %r" % (sorted(_ADR_REGIMES), regime)
        )
    if not isinstance(n, (int, np.integer)) or not 32 <= n <= 200:
        raise ConfigurationError("grid size n must lie in [32, 200], got %r" % (n,))
    epsilon, delta, gamma = _ADR_REGIMES[regime]
    n = int(n)
    h = 1.0 / (n - 1)
    axis = np.linspace(0.0, 1.0, n)
    xg, yg = np.meshgrid(axis, axis, indexing="ij")
    u0 = 256.0 * (xg * yg * (1.0 - xg) * (1.0 - yg)) ** 2 + 0.3

    def stencil(w):
        # mirror ghosts u_{-1} = u_1 implement du/dn = 0 at second order;
        # the corners of g are never read by the five-point stencils
        g = np.empty((n + 2, n + 2), dtype=w.dtype)
        g[1:-1, 1:-1] = w
        g[0, 1:-1] = w[1]
        g[-1, 1:-1] = w[-2]
        g[1:-1, 0] = w[:, 1]
        g[1:-1, -1] = w[:, -2]
        lap = (g[:-2, 1:-1] + g[2:, 1:-1] + g[1:-1, :-2] + g[1:-1, 2:]
               - 4.0 * w) / h ** 2
        adv = (g[2:, 1:-1] - g[:-2, 1:-1] + g[1:-1, 2:] - g[1:-1, :-2]) \
            / (2.0 * h)
        return epsilon * lap + delta * adv

    def rhs(u):
        w = np.asarray(u).reshape(n, n)
        out = stencil(w) + gamma * w * (w - 0.5) * (1.0 - w)
        return out.ravel()

    def jacobian_action(u_base, v):
        w = np.asarray(u_base).reshape(n, n)
        p = np.asarray(v).reshape(n, n)
        react = gamma * (-3.0 * w ** 2 + 3.0 * w - 0.5)
        return (stencil(p) + react * p).ravel()

    return AdrProblem(
        n, epsilon, delta, gamma, rhs, jacobian_action, t_final, u0.ravel()
    )


def reference_solution(prob, method_list, fine_h):
    """Mean of several fine-step runs plus their mutual disagreement.

    method_list entries are either run(problem, h) callables or
    (label, callable) pairs; each is integrated to prob.t_final with step
    fine_h.  Returns (reference, deviation) where deviation is the largest
    pairwise 2-norm gap between the runs divided by the 2-norm of the mean,
    i.e. the relative trust radius below which convergence errors are
    meaningless.  A diverging member raises DivergenceError naming it.
    """
    runs = []
    for entry in method_list:
        if isinstance(entry, tuple):
            label, run = entry
        else:
            label, run = getattr(entry, "__name__", repr(entry)), entry
        runs.append((str(label), run))
    if len(runs) < 2:
        raise ConfigurationError("reference needs at least two methods")
    finals = []
    for label, run in runs:
        try:
            y = np.asarray(run(prob, fine_h), dtype=np.complex128).ravel()
        except DivergenceError as exc:
            raise DivergenceError(
                "reference method %s diverged: %s" % (label, exc)
            ) from exc
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                "reference method %s produced non-finite values" % label
            )
        finals.append(y)
    finals = np.array(finals)
    mean = finals.mean(axis=0)
    gap = 0.0
    for i in range(len(finals)):
        for j in range(i + 1, len(finals)):
            gap = max(gap, float(np.linalg.norm(finals[i] - finals[j])))
    scale = float(np.linalg.norm(mean))
    return mean, (gap / scale if scale > 0.0 else gap)


PROBLEMS = {
    "ks": make_ks,
    "nikolaevskiy": make_nikolaevskiy,
    "kdv": make_kdv,
    "adr-stiff-lin": partial(make_adr, regime="stiff-linearity"),
    "adr-stiff-nonlin": partial(make_adr, regime="stiff-nonlinearity"),
}


def make_problem(name, **overrides):
    """Build a registered problem by name, passing overrides to its factory."""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(
            "unknown problem %r; choose from %s" % (name, sorted(PROBLEMS))
        ) from None
    return factory(**overrides)
