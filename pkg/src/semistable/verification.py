"""Empirical characteristic functions and calibrated distributional checks.

All statistical checks use the sup-distance between characteristic functions
on a frequency grid.  Thresholds are the upper quantile of the statistic under
the null, simulated from the Gaussian limit of the empirical CF: for a
symmetric law with real CF ``phi``,

    Cov(cos pX, cos qX) = (phi(p - q) + phi(p + q)) / 2 - phi(p) phi(q)
    Cov(sin pX, sin qX) = (phi(p - q) - phi(p + q)) / 2

and cosine/sine parts are uncorrelated.  For AR(1) windows the lagged terms
come from the exact joint CF of ``(X_j, X_{j+h})``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .ar1 import Ar1Series, thinning_gap
from .errors import EmptyInput, InsufficientData, RangeError
from .model import ModelParams, cf, levy_exponent_closed
from .sampler import TruncationScheme, as_generator, sample_increment, seed_of

__all__ = [
    "EmpiricalCf",
    "VerificationReport",
    "default_grid",
    "empirical_cf",
    "ecf_values",
    "cf_sup_distance",
    "two_sample_distance",
    "iid_covariance",
    "ar1_window_covariance",
    "calibrate_threshold",
    "check_stationarity",
    "check_semiselfsimilar",
    "check_ssd_factor",
]

LEVEL = 0.05
N_BOOT = 500
# base time of the self-similarity check; small t0 keeps large-n runs cheap
SELFSIMILAR_T0 = 0.25
_CHUNK = 1 << 14


def default_grid(lo=0.05, hi=20.0, count=40) -> np.ndarray:
    return np.geomspace(lo, hi, count)


@dataclass(frozen=True)
class EmpiricalCf:
    grid: np.ndarray
    re: np.ndarray
    im: np.ndarray
    n_samples: int

    @property
    def values(self) -> np.ndarray:
        return self.re + 1j * self.im


@dataclass
class VerificationReport:
    check_name: str
    statistic: float
    threshold: float
    passed: bool
    n_samples: int
    seed: Optional[int]
    params: dict
    notes: str = ""
    metrics: dict = field(default_factory=dict)

    @classmethod
    def from_statistic(cls, check_name, statistic, threshold, **kw) -> "VerificationReport":
        statistic, threshold = float(statistic), float(threshold)
        return cls(check_name, statistic, threshold, statistic <= threshold, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.check_name}: statistic={self.statistic:.6g} threshold={self.threshold:.6g}"


def ecf_values(samples, freqs) -> np.ndarray:
    """Mean of ``exp(i <freq, x>)`` for 1-d samples/frequencies or (n, d)/(m, d) arrays."""
    x = np.asarray(samples, dtype=float)
    p = np.asarray(freqs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if p.ndim == 1:
        p = p[:, None]
    if x.shape[0] == 0:
        raise EmptyInput("empirical characteristic function of an empty sample")
    if not np.all(np.isfinite(x)):
        raise RangeError("samples", "must be finite")
    re = np.zeros(p.shape[0])
    im = np.zeros(p.shape[0])
    for start in range(0, x.shape[0], _CHUNK):
        phase = x[start:start + _CHUNK] @ p.T
        re += np.cos(phase).sum(axis=0)
        im += np.sin(phase).sum(axis=0)
    return (re + 1j * im) / x.shape[0]


def empirical_cf(samples, grid) -> EmpiricalCf:
    samples = np.asarray(samples, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    val = ecf_values(samples, grid)
    return EmpiricalCf(grid, val.real, val.imag, samples.size)


def cf_sup_distance(ecf: EmpiricalCf, target) -> float:
    """``max |ecf(u) - target(u)|`` over the grid; ``target`` is a callable or array."""
    if ecf.grid.size == 0:
        raise EmptyInput("empty frequency grid")
    ref = target(ecf.grid) if callable(target) else np.asarray(target)
    return float(np.max(np.abs(ecf.values - ref)))


def two_sample_distance(first: EmpiricalCf, second: EmpiricalCf) -> float:
    if not np.array_equal(first.grid, second.grid):
        raise ValueError("empirical CFs live on different grids")
    return float(np.max(np.abs(first.values - second.values)))


# --- null distributions ----------------------------------------------------


def iid_covariance(phi: Callable, freqs):
    """Covariance of ``(cos pX, sin pX)`` for one draw of a symmetric law.

    ``phi`` maps an array of frequencies (shape ``(..., d)`` when ``freqs``
    has shape ``(m, d)``, else ``(...)``) to real CF values.
    """
    p = np.asarray(freqs, dtype=float)
    diff = p[:, None] - p[None, :]
    summ = p[:, None] + p[None, :]
    f_diff, f_sum, f = phi(diff), phi(summ), phi(p)
    cc = 0.5 * (f_diff + f_sum) - np.outer(f, f)
    ss = 0.5 * (f_diff - f_sum)
    return cc, ss


def ar1_window_covariance(params: ModelParams, grid, count: int, gap: int):
    """Covariance of the empirical CF of ``count`` points spaced ``gap`` apart.

    Lag-h cross moments use ``E exp(i(u X_j + v X_{j+h})) =
    exp(psi(u + b**h v) + psi(v) - psi(b**h v))``.
    """
    u = np.asarray(grid, dtype=float)
    psi = lambda x: levy_exponent_closed(x, params)
    f = np.exp(psi(u))
    cc, ss = iid_covariance(lambda x: np.exp(psi(x)), u)
    acc_cc, acc_ss = cc.copy(), ss.copy()
    ff = np.outer(f, f)
    for j in range(1, count):
        r = params.b ** (j * gap)
        rv = r * u
        base = (psi(u) - psi(rv))[None, :]
        plus = np.exp(psi(u[:, None] + rv[None, :]) + base)
        minus = np.exp(psi(u[:, None] - rv[None, :]) + base)
        lag_cc = 0.5 * (plus + minus) - ff
        lag_ss = 0.5 * (minus - plus)
        w = 1.0 - j / count
        acc_cc += w * (lag_cc + lag_cc.T)
        acc_ss += w * (lag_ss + lag_ss.T)
        if max(np.max(np.abs(lag_cc)), np.max(np.abs(lag_ss))) < 1e-14:
            break
    return acc_cc / count, acc_ss / count


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _gaussian_errors(cov, rng, n_boot) -> np.ndarray:
    cc, ss = cov
    m = cc.shape[0]
    re = rng.standard_normal((n_boot, m)) @ _sqrt_psd(cc).T
    im = rng.standard_normal((n_boot, m)) @ _sqrt_psd(ss).T
    return re + 1j * im


def _upper_quantile(stats: np.ndarray, level: float) -> float:
    return float(np.quantile(stats, 1.0 - level))


def _check_boot(n_boot, level):
    if isinstance(n_boot, bool) or int(n_boot) != n_boot or n_boot < 200:
        raise RangeError("n_boot", f"must be an integer >= 200, got {n_boot!r}")
    if not 0.0 < level < 1.0:
        raise RangeError("level", f"must lie in (0, 1), got {level}")
    return int(n_boot)


def calibrate_threshold(
    n_samples,
    grid,
    n_boot=N_BOOT,
    rng=0,
    *,
    target: Callable,
    sampler: Optional[Callable] = None,
    two_sample: bool = False,
    level: float = LEVEL,
) -> float:
    """Upper ``level`` quantile of the sup CF distance under the null.

    Parameters
    ----------
    n_samples : int
        Sample size of the test (per sample for two-sample tests).
    grid : array
        Frequencies.
    target : callable
        CF of the null law (real, even).
    sampler : callable, optional
        ``sampler(rng, n) -> samples`` from the null law.  When given, each
        replicate draws real samples; otherwise replicates come from the
        Gaussian limit with the covariance implied by ``target``.
    two_sample : bool
        Calibrate ``max |ecf_1 - ecf_2|`` for two independent samples instead
        of ``max |ecf - target|``.
    """
    n_boot = _check_boot(n_boot, level)
    if isinstance(n_samples, bool) or int(n_samples) != n_samples or n_samples < 1:
        raise RangeError("n_samples", f"must be a positive integer, got {n_samples!r}")
    n_samples = int(n_samples)
    grid = np.asarray(grid, dtype=float)
    rng = as_generator(rng)
    if sampler is None:
        cc, ss = iid_covariance(target, grid)
        scale = (2.0 if two_sample else 1.0) / n_samples
        errors = _gaussian_errors((cc * scale, ss * scale), rng, n_boot)
        stats = np.max(np.abs(errors), axis=1)
    else:
        ref = target(grid)
        stats = np.empty(n_boot)
        for i in range(n_boot):
            first = ecf_values(sampler(rng, n_samples), grid)
            other = ecf_values(sampler(rng, n_samples), grid) if two_sample else ref
            stats[i] = np.max(np.abs(first - other))
    return _upper_quantile(stats, level)


# --- checks -----------------------------------------------------------------


def _windows(series: Ar1Series, gap, burn_in, head):
    values = series.values[burn_in:]
    if head is None:
        half = values.size // 2
        first, second = values[:half:gap], values[half::gap]
        return first, gap, second
    first = values[:head]
    return first, 1, values[head + gap::gap]


def check_stationarity(
    series: Ar1Series,
    grid=None,
    *,
    gap: Optional[int] = None,
    burn_in: Optional[int] = None,
    head: Optional[int] = None,
    n_boot: int = N_BOOT,
    level: float = LEVEL,
    rng=0,
    min_samples: int = 10_000,
) -> VerificationReport:
    """Compare the marginal law in two windows of one series with each other and with f.

    By default the series (after ``burn_in``) is cut in halves and each half
    is thinned by ``gap``.  With ``head=m`` the first window is instead the
    first ``m`` consecutive values, which probes start-up transients.

    The statistic is the largest of the two one-sample distances to the
    stationary CF and the two-sample distance between windows; the threshold
    is calibrated jointly under the stationary AR(1) null, lag dependence
    included.  ``burn_in`` defaults to 0 for a stationary start and to
    ``10 * gap`` for a fixed start.
    """
    params = series.params
    n_boot = _check_boot(n_boot, level)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    gap = thinning_gap(params) if gap is None else int(gap)
    if gap < 1:
        raise RangeError("gap", f"must be >= 1, got {gap}")
    if burn_in is None:
        burn_in = 0 if series.stationary_start else 10 * gap
    first, gap1, second = _windows(series, gap, burn_in, head)
    if first.size == 0 or second.size == 0:
        raise InsufficientData("a stationarity window is empty")
    if first.size + second.size < min_samples:
        raise InsufficientData(
            f"only {first.size + second.size} effective samples, {min_samples} required"
        )

    target = cf(grid, 1.0, params)
    e1, e2 = ecf_values(first, grid), ecf_values(second, grid)
    d1 = float(np.max(np.abs(e1 - target)))
    d2 = float(np.max(np.abs(e2 - target)))
    d12 = float(np.max(np.abs(e1 - e2)))

    gen = as_generator(rng)
    err1 = _gaussian_errors(ar1_window_covariance(params, grid, first.size, gap1), gen, n_boot)
    err2 = _gaussian_errors(ar1_window_covariance(params, grid, second.size, gap), gen, n_boot)
    null = np.max(
        np.abs(np.concatenate([err1, err2, err1 - err2], axis=1)), axis=1
    )
    threshold = _upper_quantile(null, level)

    return VerificationReport.from_statistic(
        "stationarity",
        max(d1, d2, d12),
        threshold,
        n_samples=int(first.size + second.size),
        seed=series.seed,
        params=params.as_dict(),
        notes=(
            "sup CF distance: window 1 vs f, window 2 vs f, window 1 vs window 2; "
            "threshold from the Gaussian limit under the stationary AR(1) null"
        ),
        metrics={
            "d_window1": d1,
            "d_window2": d2,
            "d_between": d12,
            "gap": gap,
            "burn_in": int(burn_in),
            "head": head,
            "window1_size": int(first.size),
            "window2_size": int(second.size),
            "level": level,
            "n_boot": n_boot,
            "x0": series.x0,
            "delta": series.scheme.delta,
        },
    )


def _selfsimilar_freqs(grid, joint):
    single = np.column_stack([grid, np.zeros_like(grid)])
    if not joint:
        return single
    sub = grid[::4]
    pairs = np.concatenate([np.column_stack([sub, sub]), np.column_stack([sub, -sub])])
    return np.concatenate([single, pairs])


def check_semiselfsimilar(
    params: ModelParams,
    scheme: TruncationScheme,
    t0: float = SELFSIMILAR_T0,
    n_paths: int = 10_000,
    rng=0,
    *,
    epoch: Optional[float] = None,
    grid=None,
    joint: bool = True,
    n_boot: int = N_BOOT,
    level: float = LEVEL,
    min_paths: int = 10_000,
) -> VerificationReport:
    """Two-sample test of ``(Z(a t0), Z(2 a t0)) = a**H (Z(t0), Z(2 t0))`` in law.

    ``a`` is the epoch ``b**-alpha`` unless ``epoch`` overrides it, and
    ``H = 1/alpha``.  Frequencies are the grid on the first coordinate plus,
    with ``joint``, a set of bivariate pairs; the threshold is calibrated
    jointly from the law of the left-hand side.
    """
    n_boot = _check_boot(n_boot, level)
    if not (isinstance(t0, (int, float)) and math.isfinite(t0) and t0 > 0):
        raise RangeError("t0", f"must be positive, got {t0!r}")
    if isinstance(n_paths, bool) or int(n_paths) != n_paths or n_paths < min_paths:
        raise RangeError("n_paths", f"must be an integer >= {min_paths}, got {n_paths!r}")
    a = params.a if epoch is None else float(epoch)
    if not (math.isfinite(a) and a > 0.0):
        raise RangeError("epoch", f"must be positive, got {epoch!r}")
    n_paths = int(n_paths)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    freqs = _selfsimilar_freqs(grid, joint)
    scale = a**params.H

    stream_a, stream_b, stream_boot = as_generator(rng).spawn(3)
    left = np.cumsum(sample_increment(a * t0, scheme, params, stream_a, size=(n_paths, 2)), axis=1)
    right = scale * np.cumsum(sample_increment(t0, scheme, params, stream_b, size=(n_paths, 2)), axis=1)
    statistic = float(np.max(np.abs(ecf_values(left, freqs) - ecf_values(right, freqs))))

    s = a * t0
    psi = lambda x: levy_exponent_closed(x, params)
    phi = lambda p: np.exp(s * (psi(p[..., 0] + p[..., 1]) + psi(p[..., 1])))
    cc, ss = iid_covariance(phi, freqs)
    errors = _gaussian_errors((2.0 * cc / n_paths, 2.0 * ss / n_paths), stream_boot, n_boot)
    threshold = _upper_quantile(np.max(np.abs(errors), axis=1), level)

    lattice = math.log(a) / math.log(params.a)
    return VerificationReport.from_statistic(
        "semiselfsimilar",
        statistic,
        threshold,
        n_samples=n_paths,
        seed=seed_of(rng),
        params=params.as_dict(),
        notes=(
            "two-sample sup CF distance between (Z(a t0), Z(2 a t0)) and "
            "a^H (Z(t0), Z(2 t0)), H = 1/alpha"
        ),
        metrics={
            "epoch": a,
            "H": params.H,
            "t0": t0,
            "joint": joint,
            "n_freqs": int(freqs.shape[0]),
            "log_epoch_ratio": lattice,
            "level": level,
            "n_boot": n_boot,
            "delta": scheme.delta,
        },
    )


def check_ssd_factor(
    params: ModelParams,
    grid=None,
    *,
    tol: float = 1e-10,
    tamper: float = 1.0,
) -> VerificationReport:
    """Check that ``f0(u) = f(b u)**(a - 1)`` is a CF completing ``f(u) = f(b u) f0(u)``.

    Checked on ``{0} U grid U -grid``: ``f0(0) = 1``, ``0 < f0 <= 1``,
    evenness, positive semi-definiteness of ``[f0(x_i - x_j)]`` on an
    equispaced lattice, and the factorisation itself.  ``tamper`` scales the
    factor exponent (``tamper != 1`` is a negative control).
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    u = np.concatenate([[0.0], grid, -grid])

    def exponent(x):
        return tamper * (params.a - 1.0) * levy_exponent_closed(params.b * np.asarray(x), params)

    f = cf(u, 1.0, params)
    fb = cf(params.b * u, 1.0, params)
    psi0 = exponent(u)
    g = np.exp(psi0)
    m = grid.size
    at_zero = abs(g[0] - 1.0)
    # 0 < f0 <= 1  <=>  psi0 finite and <= 0 (f0 itself may underflow)
    bounds = float(np.max(psi0)) if np.all(np.isfinite(psi0)) else math.inf
    bounds = max(0.0, bounds)
    evenness = float(np.max(np.abs(g[1:m + 1] - g[m + 1:])))
    factorisation = float(np.max(np.abs(f - fb * g)))

    lattice = np.arange(64) * (2.0 * float(np.max(grid)) / 63.0)
    toeplitz = np.exp(exponent(lattice[:, None] - lattice[None, :]))
    min_eig = float(np.linalg.eigvalsh(toeplitz).min())
    definiteness = max(0.0, -min_eig - 1e-12 * toeplitz.shape[0])

    statistic = max(at_zero, bounds, evenness, factorisation, definiteness)
    return VerificationReport.from_statistic(
        "ssd_factor",
        statistic,
        tol,
        n_samples=0,
        seed=None,
        params=params.as_dict(),
        notes="deterministic: worst violation among factorisation and CF-validity conditions",
        metrics={
            "factorisation": factorisation,
            "at_zero": at_zero,
            "bounds": bounds,
            "evenness": evenness,
            "min_eigenvalue": min_eig,
            "tamper": tamper,
            "grid_size": int(m),
        },
    )
