"""Experiment drivers: convergence ladders, stability exports, timing, dumps.

Integrators are named by compact method strings:

    epbm-legendre:q=4,alpha=2,kappa=0    block method; optional strategy=SMFC
                                         and ell=2 select serial variants
    eab:p=2                              exponential multistep, p history values
    etdrk2                               two-stage exponential Runge-Kutta

A run integrates the named problem from its initial state to t_final with a
fixed step h (t_final / h must land on an integer) and reports the node-1
final state.  Block methods start from a bootstrapped initial block; eab
builds its history by bootstrapping a small equispaced block spanning the
first p - 1 steps.

Configs live in a flat key = value file ('#' comments; method and
reference-method repeat one entry per line, while the list keys
thread-counts, z1-radii, z1-rays, and grid hold space-separated
entries and may repeat).  CLI flags override file values.  Outputs are
plain CSV with '#'-prefixed metadata lines (method, git and config hashes)
so any plotting tool can consume them.
"""

import csv
import hashlib
import math
import re as _re
import subprocess
import sys
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .coefficients import (
    MethodSpec,
    eab_coefficients,
    generate_coefficients,
    legendre_method,
)
from .errors import (
    ConfigurationError,
    DeterminismError,
    DivergenceError,
    KrylovConvergenceError,
)
from .nodes import NodeSet
from .problems import make_problem, reference_solution
from .stability import GridSpec, StabilitySlice, stability_slice, write_slice_csv
from .stepping import (
    bootstrap_initial_block,
    step_composite,
    step_eab,
    step_etdrk2,
    step_partitioned,
    step_unpartitioned,
)

# ------------------------------------------------------------- method names


@dataclass(frozen=True)
class Method:
    """Parsed method string; kind is one of epbm, eab, etdrk2."""

    label: str
    kind: str
    q: int = 0
    alpha: float = 0.0
    kappa: int = 0
    strategy: str = "PMFC"
    ell: int = 2
    p: int = 0


def _parse_kv(body, label):
    out = {}
    for tok in body.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise ConfigurationError(
                "bad method parameter %r in %r (want key=value)" % (tok, label)
            )
        key, val = tok.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_method(text):
    """Turn a method string into a Method, validating its parameters."""
    text = text.strip()
    head, _, body = text.partition(":")
    if head == "epbm-legendre":
        kv = _parse_kv(body, text)
        try:
            q = int(kv.pop("q", 4))
            alpha = float(kv.pop("alpha", 2.0))
            kappa = int(kv.pop("kappa", 0))
            ell = int(kv.pop("ell", 2))
        except ValueError as exc:
            raise ConfigurationError("bad number in method %r: %s" % (text, exc))
        strategy = kv.pop("strategy", "PMFC")
        if kv:
            raise ConfigurationError(
                "unknown method parameters %s in %r" % (sorted(kv), text)
            )
        if q < 2:
            raise ConfigurationError("block methods need q >= 2, got q=%d" % q)
        if not alpha > 0:
            raise ConfigurationError(
                "time stepping needs alpha > 0 in %r (alpha = 0 is the"
                " iterator, usable only as kappa corrector sweeps)" % text
            )
        if kappa < 0:
            raise ConfigurationError("kappa must be >= 0 in %r" % text)
        return Method(text, "epbm", q=q, alpha=alpha, kappa=kappa,
                      strategy=strategy, ell=ell)
    if head == "eab":
        kv = _parse_kv(body, text)
        try:
            p = int(kv.pop("p"))
        except KeyError:
            raise ConfigurationError("eab needs p=<steps>, got %r" % text)
        except ValueError as exc:
            raise ConfigurationError("bad number in method %r: %s" % (text, exc))
        if kv:
            raise ConfigurationError(
                "unknown method parameters %s in %r" % (sorted(kv), text)
            )
        if p < 1:
            raise ConfigurationError("eab needs p >= 1, got %d" % p)
        return Method(text, "eab", p=p)
    if head == "etdrk2":
        if body:
            raise ConfigurationError("etdrk2 takes no parameters, got %r" % text)
        return Method(text, "etdrk2")
    raise ConfigurationError(
        "unknown method %r (want epbm-legendre:..., eab:p=..., or etdrk2)" % text
    )


def _propagator(m):
    return legendre_method(m.q, m.alpha, ell=m.ell, strategy=m.strategy)


def _corrector(m):
    return legendre_method(m.q, 0.0)


_WARMUP_CACHE = {}


def _equispaced_warmup(p):
    """alpha = 0 iterator on p equispaced nodes, for eab history bootstrap."""
    hit = _WARMUP_CACHE.get(p)
    if hit is None:
        ns = NodeSet(nodes=np.linspace(-1.0, 1.0, p), kind="equispaced-real")
        spec = MethodSpec(
            q=p,
            nodes=ns,
            strategy="PMFC",
            ell=1,
            endpoints=np.full(p, -1.0),
            alpha=0.0,
        )
        hit = generate_coefficients(spec, label="eab-warmup-p%d" % p)
        _WARMUP_CACHE[p] = hit
    return hit


# ---------------------------------------------------------------- run loops


def _count_steps(t_final, h):
    if not h > 0:
        raise ConfigurationError("stepsize must be positive, got %g" % h)
    n = int(round(t_final / h))
    if n < 1 or abs(n * h - t_final) > 1e-9 * max(abs(t_final), 1.0):
        raise ConfigurationError(
            "t_final=%g is not an integer number of steps of h=%g" % (t_final, h)
        )
    return n


def _run_semilinear(m, prob, h, threads, tolerance, return_block):
    semi = prob.semilinear()
    n_steps = _count_steps(prob.t_final, h)
    if m.kind == "epbm":
        r = h / m.alpha
        it = _corrector(m)
        state = bootstrap_initial_block(
            it, semi, prob.initial_state, r, threads=threads, tolerance=tolerance
        )
        prop = _propagator(m)
        if m.kappa:
            for _ in range(n_steps):
                state = step_composite(
                    prop, it, m.kappa, semi, state, threads=threads,
                    tolerance=tolerance,
                )
        else:
            for _ in range(n_steps):
                state = step_partitioned(prop, semi, state, threads=threads)
        return state.y if return_block else state.y[0]
    if m.kind == "eab":
        p = m.p
        y0 = np.asarray(prob.initial_state, dtype=np.complex128)
        if p == 1:
            y, t_n, start = y0, 0.0, 0
            history = [np.asarray(semi.nonlinear(0.0, y))]
        else:
            if n_steps < p:
                raise ConfigurationError(
                    "eab:p=%d needs at least %d steps, got %d" % (p, p, n_steps)
                )
            r_b = h * (p - 1) / 2.0
            state = bootstrap_initial_block(
                _equispaced_warmup(p), semi, y0, r_b, threads=threads,
                tolerance=tolerance,
            )
            history = [
                np.asarray(semi.nonlinear(j * h, state.y[j])) for j in range(p)
            ]
            y, t_n, start = state.y[p - 1], (p - 1) * h, p - 1
        coeffs = eab_coefficients(p)
        for _ in range(start, n_steps):
            y = step_eab(coeffs, semi, history, y, h, t_n)
            t_n += h
            history = history[1:] + [np.asarray(semi.nonlinear(t_n, y))]
        return np.tile(y, (1, 1)) if return_block else y
    if m.kind == "etdrk2":
        y = np.asarray(prob.initial_state, dtype=np.complex128)
        for i in range(n_steps):
            y = step_etdrk2(semi, y, h, i * h)
        return np.tile(y, (1, 1)) if return_block else y
    raise ConfigurationError("unknown method kind %r" % m.kind)


def _run_unpartitioned(m, prob, h, tolerance, max_dim, return_block):
    if m.kind != "epbm":
        raise ConfigurationError(
            "%s needs a partitioned (diagonal linear part) problem" % m.label
        )
    up = prob.unpartitioned()
    n_steps = _count_steps(prob.t_final, h)
    r = h / m.alpha
    it = _corrector(m)
    state = bootstrap_initial_block(
        it, up, prob.initial_state, r, tolerance=tolerance
    )
    prop = _propagator(m)
    for _ in range(n_steps):
        if m.kappa:
            state = step_composite(
                prop, it, m.kappa, up, state, tolerance=tolerance,
                max_dim=max_dim,
            )
        else:
            state = step_unpartitioned(
                prop, up, state, tolerance=tolerance, max_dim=max_dim
            )
    return state.y if return_block else state.y[0]


def run_single(method, prob, h, threads=1, tolerance=1e-12, max_dim=128,
               return_block=False):
    """Integrate prob to its t_final with one method at stepsize h."""
    m = parse_method(method) if isinstance(method, str) else method
    if hasattr(prob, "semilinear"):
        return _run_semilinear(m, prob, h, threads, tolerance, return_block)
    if hasattr(prob, "unpartitioned"):
        return _run_unpartitioned(m, prob, h, tolerance, max_dim, return_block)
    raise ConfigurationError(
        "problem %r offers neither a partitioned nor an unpartitioned form"
        % type(prob).__name__
    )


def runner(method_text, threads=1, tolerance=1e-12, max_dim=128):
    """(label, callable) pair for reference_solution and friends."""
    m = parse_method(method_text)

    def run(prob, h):
        return run_single(m, prob, h, threads=threads, tolerance=tolerance,
                          max_dim=max_dim)

    return (m.label, run)


# ------------------------------------------------------------ configuration


@dataclass
class ExperimentConfig:
    problem: str = "ks"
    overrides: dict = field(default_factory=dict)
    methods: tuple = ("epbm-legendre:q=4,alpha=2",)
    h0: float = 0.05
    rungs: int = 4
    ratio: float = 2.0
    reference_h: float = 1e-4
    reference_methods: tuple = (
        "epbm-legendre:q=4,alpha=2", "eab:p=4", "etdrk2",
    )
    threads: int = 1
    thread_counts: tuple = (1, 2, 4)
    out: str = "out"
    tolerance: float = 1e-12
    max_dim: int = 128
    z1_radii: tuple = (0.0, 3.0, 6.0, 15.0, 30.0)
    z1_rays: tuple = ("neg", "imag", "oblique")
    grid: tuple = (-6.0, 1.0, -4.0, 4.0, 200, 200)

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.reference_methods = tuple(self.reference_methods)
        self.thread_counts = tuple(int(t) for t in self.thread_counts)
        self.z1_radii = tuple(float(r) for r in self.z1_radii)
        self.z1_rays = tuple(self.z1_rays)
        self.grid = tuple(self.grid)
        if not self.ratio > 1.0:
            raise ConfigurationError("ladder ratio must exceed 1")
        if self.rungs < 2:
            raise ConfigurationError("slope fits need at least 2 ladder rungs")
        if not self.h0 > 0:
            raise ConfigurationError("h0 must be positive")
        if self.threads < 1 or any(t < 1 for t in self.thread_counts):
            raise ConfigurationError("thread counts must be >= 1")
        if not self.reference_h > 0:
            raise ConfigurationError("reference-h must be positive")
        if len(self.grid) != 6:
            raise ConfigurationError(
                "grid needs 6 entries: re0 re1 im0 im1 n_re n_im"
            )
        for ray in self.z1_rays:
            if ray not in _RAYS:
                raise ConfigurationError(
                    "unknown ray %r (choose from %s)" % (ray, sorted(_RAYS))
                )

    def ladder(self):
        return [self.h0 / self.ratio ** i for i in range(self.rungs)]

    def grid_spec(self):
        g = self.grid
        return GridSpec(re=(g[0], g[1]), im=(g[2], g[3]),
                        n_re=int(g[4]), n_im=int(g[5]))


_LIST_STR_KEYS = {"method", "reference-method"}
_LIST_NUM_KEYS = {"thread-counts", "z1-radii", "grid"}
_OVERRIDE_KEYS = {"modes": "modes", "grid-n": "n", "t-final": "t_final",
                  "regime": "regime"}
_SCALAR_KEYS = {"problem", "h0", "rungs", "ratio", "reference-h", "threads",
                "out", "tolerance", "max-dim"}


def _coerce(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_config_file(path):
    """Parse a flat key = value file into a raw mapping."""
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                "%s:%d: expected key = value, got %r" % (path, lineno, raw)
            )
        key, val = (s.strip() for s in line.split("=", 1))
        if key in _LIST_STR_KEYS:
            mapping.setdefault(key, []).append(val)
        elif key == "z1-rays":
            mapping.setdefault(key, []).extend(val.split())
        elif key in _LIST_NUM_KEYS:
            mapping.setdefault(key, []).extend(_coerce(t) for t in val.split())
        elif key in _SCALAR_KEYS or key in _OVERRIDE_KEYS:
            mapping[key] = _coerce(val)
        else:
            raise ConfigurationError(
                "%s:%d: unknown config key %r" % (path, lineno, key)
            )
    return mapping


def config_from_mapping(mapping):
    """Build an ExperimentConfig from a raw key mapping (dashed keys)."""
    kw = {}
    overrides = {}
    renames = {"method": "methods", "reference-method": "reference_methods",
               "thread-counts": "thread_counts", "z1-radii": "z1_radii",
               "z1-rays": "z1_rays", "reference-h": "reference_h",
               "max-dim": "max_dim"}
    for key, val in mapping.items():
        if key in _OVERRIDE_KEYS:
            overrides[_OVERRIDE_KEYS[key]] = val
        else:
            kw[renames.get(key, key.replace("-", "_"))] = val
    if overrides:
        kw["overrides"] = overrides
    valid = {f.name for f in fields(ExperimentConfig)}
    unknown = set(kw) - valid
    if unknown:
        raise ConfigurationError("unknown config keys %s" % sorted(unknown))
    return ExperimentConfig(**kw)


def config_hash(cfg):
    items = []
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, dict):
            val = tuple(sorted(val.items()))
        items.append((f.name, val))
    return hashlib.sha256(repr(items).encode()).hexdigest()[:12]


_GIT_HASH = None


def _git_hash():
    global _GIT_HASH
    if _GIT_HASH is None:
        try:
            _GIT_HASH = subprocess.run(
                ["git", "rev-parse", "--short", "HEAD"],
                cwd=Path(__file__).resolve().parent,
                capture_output=True, text=True, timeout=5, check=True,
            ).stdout.strip()
        except Exception:
            _GIT_HASH = "unknown"
    return _GIT_HASH


# ----------------------------------------------------------------- records


@dataclass
class ConvergenceRecord:
    method: str
    h: float
    error: float
    seconds: float
    threads: int


@dataclass
class OrderFit:
    method: str
    order: float
    flag: str
    kept: int


@dataclass
class TimingRecord:
    threads: int
    seconds: float
    checksum: str
    speedup: float


def fit_order(hs, errors):
    """Least-squares slope of log error vs log h over pre-floor rungs.

    Rungs within 10x of the smallest observed error are treated as
    round-off floor and dropped (the minimum itself included); divergent
    rungs (inf) never enter the fit.
    """
    finite = [(h, e) for h, e in zip(hs, errors)
              if math.isfinite(e) and e > 0.0]
    if len(finite) < 2:
        return float("nan"), "divergent", 0
    emin = min(e for _, e in finite)
    kept = [(h, e) for h, e in finite if e > 10.0 * emin]
    if len(kept) < 2:
        return float("nan"), "floor", len(kept)
    lh = np.log([h for h, _ in kept])
    le = np.log([e for _, e in kept])
    slope = float(np.polyfit(lh, le, 1)[0])
    return slope, "ok", len(kept)


def _out_path(cfg, default_name):
    out = Path(cfg.out)
    if out.suffix == ".csv":
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    out.mkdir(parents=True, exist_ok=True)
    return out / default_name


def _write_csv(path, meta, header, rows):
    with open(path, "w", newline="") as fh:
        for line in meta:
            fh.write("# %s\n" % line)
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# -------------------------------------------------------------- experiments


def run_convergence(cfg):
    """Stepsize ladder for every configured method against a shared reference.

    Returns (records, fits, reference_deviation) and writes one CSV.  A
    divergent rung is recorded with error = inf and does not abort the
    ladder.
    """
    prob = make_problem(cfg.problem, **cfg.overrides)
    ref_runners = [
        runner(t, threads=cfg.threads, tolerance=cfg.tolerance,
               max_dim=cfg.max_dim)
        for t in cfg.reference_methods
    ]
    ref, deviation = reference_solution(prob, ref_runners, cfg.reference_h)
    ref_scale = float(np.max(np.abs(ref)))
    records = []
    for text in cfg.methods:
        m = parse_method(text)
        for h in cfg.ladder():
            start = time.perf_counter()
            try:
                final = run_single(m, prob, h, threads=cfg.threads,
                                   tolerance=cfg.tolerance,
                                   max_dim=cfg.max_dim)
                err = float(np.max(np.abs(final - ref)) / ref_scale)
            except (DivergenceError, KrylovConvergenceError):
                err = math.inf
            records.append(ConvergenceRecord(
                m.label, h, err, time.perf_counter() - start, cfg.threads
            ))
    fits = []
    for text in cfg.methods:
        mine = [r for r in records if r.method == text]
        order, flag, kept = fit_order([r.h for r in mine],
                                      [r.error for r in mine])
        fits.append(OrderFit(text, order, flag, kept))
    meta = [
        "experiment: convergence",
        "git: %s" % _git_hash(),
        "config: %s" % config_hash(cfg),
        "problem: %s %r" % (cfg.problem, cfg.overrides),
        "reference: h=%r deviation=%r methods=%s"
        % (cfg.reference_h, deviation, "|".join(cfg.reference_methods)),
    ]
    for f in fits:
        meta.append("fit: method=%s order=%r flag=%s kept=%d"
                    % (f.method, f.order, f.flag, f.kept))
    rows = [(r.method, r.h, r.error, r.seconds, r.threads) for r in records]
    _write_csv(_out_path(cfg, "convergence.csv"), meta,
               ("method", "h", "error", "seconds", "threads"), rows)
    return records, fits, deviation


_RAYS = {"neg": -1.0 + 0.0j, "imag": 1.0j,
         "oblique": complex(np.exp(3j * np.pi / 4))}


def z1_menu(cfg):
    """Unique z1 samples: each configured ray at each radius."""
    seen = []
    for radius in cfg.z1_radii:
        for ray in cfg.z1_rays:
            z1 = radius * _RAYS[ray]
            if not any(abs(z1 - s) < 1e-12 for s in seen):
                seen.append(z1)
    return seen


def _safe(label):
    return _re.sub(r"[^A-Za-z0-9.+-]", "_", label)


def _slice_for(m, z1, grid, tol):
    if m.kind == "epbm":
        corr = _corrector(m) if m.kappa else None
        return stability_slice(_propagator(m), z1, grid, corrector=corr,
                               kappa=m.kappa, tol=tol)
    if m.kind == "eab":
        return stability_slice(eab_coefficients(m.p), z1, grid, tol=tol)
    raise ConfigurationError(
        "%s is not a block or multistep method; no amplification matrix"
        % m.label
    )


def run_stability_export(cfg):
    """One CSV mask per (method, z1): the configured rays and radii.

    Also emits the scalar half-plane mask |exp(z)| <= 1 on the same grid,
    the baseline every unpartitioned single-step region must match.
    """
    grid = cfg.grid_spec()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for text in cfg.methods:
        m = parse_method(text)
        for z1 in z1_menu(cfg):
            sl = _slice_for(m, z1, grid, 1e-10)
            name = "stability_%s_z1=%+g%+gi.csv" % (
                _safe(m.label), z1.real, z1.imag
            )
            path = out / name
            write_slice_csv(sl, path, label=m.label)
            written.append(path)

    re_axis = np.linspace(grid.re[0], grid.re[1], grid.n_re)
    im_axis = np.linspace(grid.im[0], grid.im[1], grid.n_im)
    zz = re_axis[None, :] + 1j * im_axis[:, None]
    mask = np.abs(np.exp(zz)) <= 1.0 + 1e-14
    half = StabilitySlice(z1=0.0j, alpha=float("nan"), re_axis=re_axis,
                          im_axis=im_axis, mask=mask, failures=0)
    path = out / "stability_unpartitioned-scalar.csv"
    write_slice_csv(half, path, label="unpartitioned-scalar")
    written.append(path)
    return written


def run_timing(cfg):
    """Wall time and speedup across thread counts, with determinism check.

    Every thread count must produce a bitwise-identical final block; a
    checksum mismatch raises DeterminismError.
    """
    if not cfg.methods:
        raise ConfigurationError("timing needs one method")
    m = parse_method(cfg.methods[0])
    if m.kind != "epbm":
        raise ConfigurationError(
            "timing profiles block methods, got %s" % m.label
        )
    if m.strategy != "PMFC":
        warnings.warn(
            "serial strategy %s has no parallel path; extra threads will"
            " not help" % m.strategy
        )
    prob = make_problem(cfg.problem, **cfg.overrides)
    records = []
    base = None
    for tc in cfg.thread_counts:
        start = time.perf_counter()
        block = run_single(m, prob, cfg.h0, threads=tc,
                           tolerance=cfg.tolerance, max_dim=cfg.max_dim,
                           return_block=True)
        secs = time.perf_counter() - start
        digest = hashlib.sha256(
            np.ascontiguousarray(block).tobytes()
        ).hexdigest()
        if base is None:
            base = digest
        elif digest != base:
            raise DeterminismError(
                "thread count %d changed the result (checksum %s vs %s)"
                % (tc, digest[:12], base[:12])
            )
        records.append(TimingRecord(tc, secs, digest[:16],
                                    records[0].seconds / secs if records
                                    else 1.0))
    meta = [
        "experiment: timing",
        "git: %s" % _git_hash(),
        "config: %s" % config_hash(cfg),
        "problem: %s %r" % (cfg.problem, cfg.overrides),
        "method: %s h=%r" % (m.label, cfg.h0),
    ]
    rows = [(r.threads, r.seconds, r.checksum, r.speedup) for r in records]
    _write_csv(_out_path(cfg, "timing.csv"), meta,
               ("threads", "seconds", "checksum", "speedup"), rows)
    return records


def dump_coefficients(method, path=None):
    """Readable table of nodes, eta values, and expansion weight rows.

    Accepts a method string or a generated coefficients object.  Weight
    rows are checked against the interpolation sum rules (value rows sum
    to 1, derivative rows to 0) and the largest deviation is reported in
    the header.  Returns the text; optionally writes it to path.
    """
    if isinstance(method, str):
        m = parse_method(method)
        if m.kind == "epbm":
            coeffs = _propagator(m)
        elif m.kind == "eab":
            coeffs = eab_coefficients(m.p)
        else:
            raise ConfigurationError("%s has no coefficient table" % m.label)
    else:
        coeffs = method
    sum_dev = 0.0
    for j in range(coeffs.q):
        dw = coeffs.deriv_weights[j]
        for nu in range(dw.shape[0]):
            target = 1.0 if nu == 0 else 0.0
            sum_dev = max(sum_dev, abs(float(np.sum(dw[nu]).real) - target),
                          abs(float(np.sum(dw[nu]).imag)))
    lines = [
        "# method: %s" % coeffs.label,
        "# alpha: %r" % coeffs.alpha,
        "# nodes: %s" % " ".join("%r" % complex(z) for z in coeffs.nodes),
        "# sum rules: value rows -> 1, derivative rows -> 0;"
        " max deviation %.3e" % sum_dev,
    ]
    for j in range(coeffs.q):
        stem = " ".join("%s:%d" % (gen, k) for gen, k in coeffs.stencil_map[j])
        lines.append(
            "# row %d: endpoint node %d, eta %r, stencil %s"
            % (j + 1, int(coeffs.endpoint_index[j]) + 1,
               complex(coeffs.eta[j]), stem or "(none)")
        )
    width = max(
        (coeffs.deriv_weights[j].shape[1] for j in range(coeffs.q)
         if coeffs.deriv_weights[j].size), default=0,
    )
    header = ["row", "nu"] + ["w%d" % (s + 1) for s in range(width)]
    lines.append(",".join(header))
    for j in range(coeffs.q):
        dw = coeffs.deriv_weights[j]
        for nu in range(dw.shape[0]):
            vals = ["%r" % complex(v) for v in dw[nu]]
            vals += [""] * (width - len(vals))
            lines.append(",".join([str(j + 1), str(nu)] + vals))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def run_solve(cfg):
    """Single integration of the first configured method; dumps final state."""
    if not cfg.methods:
        raise ConfigurationError("solve needs one method")
    prob = make_problem(cfg.problem, **cfg.overrides)
    m = parse_method(cfg.methods[0])
    start = time.perf_counter()
    final = run_single(m, prob, cfg.h0, threads=cfg.threads,
                       tolerance=cfg.tolerance, max_dim=cfg.max_dim)
    secs = time.perf_counter() - start
    meta = [
        "experiment: solve",
        "git: %s" % _git_hash(),
        "config: %s" % config_hash(cfg),
        "problem: %s %r" % (cfg.problem, cfg.overrides),
        "method: %s h=%r seconds=%r" % (m.label, cfg.h0, secs),
        "final-norm: %r" % float(np.linalg.norm(final)),
    ]
    rows = [(i, v.real, v.imag) for i, v in enumerate(np.asarray(final))]
    _write_csv(_out_path(cfg, "solution.csv"), meta,
               ("index", "re", "im"), rows)
    return final
