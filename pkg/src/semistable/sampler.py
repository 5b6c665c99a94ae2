"""Simulation of the semi-stable Lévy process.

Jumps larger than ``delta`` in magnitude are simulated exactly as a compound
Poisson process; the small jumps are replaced by a Brownian component with the
same variance.  Every sampling function takes an explicit
:class:`numpy.random.Generator` and never touches global state, so a seed and
the call sequence fully determine the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AccuracyError, InternalError, OrderError, RangeError
from .model import ModelParams, levy_exponent_closed

__all__ = [
    "TruncationScheme",
    "SamplePath",
    "as_generator",
    "seed_of",
    "build_truncation",
    "modulated_moment",
    "modulated_tail",
    "sample_jump",
    "sample_jumps",
    "sample_increment",
    "sample_innovation",
    "sample_path",
    "sample_paths",
    "truncated_exponent",
    "truncation_bias",
]

DEFAULT_DELTA = 0.01
QUALITY_FLOOR = 3.0
# expected number of jumps drawn per block; bounds peak memory
_BLOCK_JUMPS = 1 << 21
_MAX_REJECTION_ROUNDS = 1_000_000


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed or a SeedSequence."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.default_rng(rng)


def seed_of(rng) -> Optional[int]:
    return int(rng) if isinstance(rng, (int, np.integer)) else None


@dataclass(frozen=True)
class TruncationScheme:
    delta: float
    lambda_delta: float
    sigma2_delta: float

    @property
    def quality(self) -> float:
        """``sqrt(sigma2_delta) / delta``; large values mean a faithful substitution."""
        return math.sqrt(self.sigma2_delta) / self.delta

    def as_dict(self) -> dict:
        return {"delta": self.delta, "lambda_delta": self.lambda_delta, "sigma2_delta": self.sigma2_delta}


@dataclass(frozen=True)
class SamplePath:
    times: np.ndarray
    values: np.ndarray
    seed: Optional[int]
    scheme: TruncationScheme


def modulated_moment(p, x, params: ModelParams):
    """``int_0^x y**(p-1) theta(ln y) dy`` for ``p > 0``."""
    z = p + 1j * params.omega
    val = x**p / p
    if params.eps_pert:
        val = val + params.eps_pert * np.real(np.exp(z * np.log(x)) / z)
    return val


def modulated_tail(p, x, params: ModelParams):
    """``int_x^inf y**(-1-p) theta(ln y) dy`` for ``p > 0``."""
    z = p - 1j * params.omega
    val = x ** (-p) / p
    if params.eps_pert:
        val = val + params.eps_pert * np.real(np.exp(-z * np.log(x)) / z)
    return val


def build_truncation(params: ModelParams, delta: float = DEFAULT_DELTA, *, quality_floor=QUALITY_FLOOR):
    """Jump intensity above ``delta`` and variance of the jumps below it.

    Raises
    ------
    RangeError
        If ``delta <= 0``.
    AccuracyError
        If ``sqrt(sigma2_delta)/delta < quality_floor``: ``delta`` is too large
        for the Gaussian substitution to be trusted.
    """
    try:
        delta = float(delta)
    except (TypeError, ValueError):
        raise RangeError("delta", f"expected a real number, got {delta!r}") from None
    if not (math.isfinite(delta) and delta > 0.0):
        raise RangeError("delta", f"must be positive and finite, got {delta}")
    lam = 2.0 * params.c * float(modulated_tail(params.alpha, delta, params))
    sig2 = 2.0 * params.c * float(modulated_moment(2.0 - params.alpha, delta, params))
    if not (lam > 0.0 and sig2 > 0.0 and math.isfinite(lam) and math.isfinite(sig2)):
        raise RangeError("delta", f"gives a degenerate scheme (lambda={lam}, sigma2={sig2})")
    scheme = TruncationScheme(delta, lam, sig2)
    if scheme.quality < quality_floor:
        raise AccuracyError(
            f"delta = {delta} is too large: sqrt(sigma2_delta)/delta = {scheme.quality:.3g} "
            f"is below the floor {quality_floor}"
        )
    return scheme


def sample_jumps(scheme: TruncationScheme, params: ModelParams, rng, size: int) -> np.ndarray:
    """Independent jumps from the normalised Lévy measure restricted to |x| > delta.

    Magnitudes come from a Pareto(alpha, delta) proposal accepted with
    probability ``theta(ln x)/(1 + eps_pert)``; signs are fair coin flips.
    """
    rng = as_generator(rng)
    size = int(size)
    out = np.empty(size)
    alpha, eps, omega = params.alpha, params.eps_pert, params.omega
    filled = 0
    rounds = 0
    log_delta = math.log(scheme.delta)
    while filled < size:
        rounds += 1
        if rounds > _MAX_REJECTION_ROUNDS:
            raise InternalError("jump rejection sampler did not terminate")
        need = size - filled
        if eps == 0.0:
            mag = scheme.delta * rng.random(need) ** (-1.0 / alpha)
        else:
            n_prop = int(need * (1.0 + eps) * 1.1) + 16
            log_mag = log_delta + rng.standard_exponential(n_prop) / alpha
            level = rng.random(n_prop) * (1.0 + eps)
            accept = level < 1.0 + eps * np.cos(omega * log_mag)
            mag = np.exp(log_mag[accept][:need])
        out[filled:filled + mag.size] = mag
        filled += mag.size
    # Pareto proposals equal to delta need U == 1, which random() never returns
    signs = rng.integers(0, 2, size=size) * 2 - 1
    return out * signs


def sample_jump(scheme: TruncationScheme, params: ModelParams, rng) -> float:
    return float(sample_jumps(scheme, params, rng, 1)[0])


def _increments(t: np.ndarray, scheme, params, rng) -> np.ndarray:
    counts = rng.poisson(t * scheme.lambda_delta)
    gauss = rng.standard_normal(t.shape) * np.sqrt(t * scheme.sigma2_delta)
    counts = counts.ravel()
    total = int(counts.sum())
    if total:
        jumps = sample_jumps(scheme, params, rng, total)
        busy = counts > 0
        starts = np.cumsum(counts)[busy] - counts[busy]
        sums = np.zeros(t.size)
        sums[busy] = np.add.reduceat(jumps, starts)
        gauss = gauss + sums.reshape(t.shape)
    return np.where(t == 0.0, 0.0, gauss)


def sample_increment(t, scheme: TruncationScheme, params: ModelParams, rng, size=None):
    """Draw Z(t) (equivalently Z(s + t) - Z(s)).

    ``t`` may be an array; with ``size`` given, ``t`` is broadcast to that
    shape.  Work is split into blocks of bounded expected jump count, drawn
    sequentially from ``rng``.
    """
    rng = as_generator(rng)
    t_arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0.0):
        raise RangeError("t", "time increments must be finite and non-negative")
    shape = t_arr.shape if size is None else (size if isinstance(size, tuple) else (int(size),))
    t_full = np.broadcast_to(t_arr, shape).ravel()
    out = np.empty(t_full.size)
    per_item = max(float(t_full.max(initial=0.0)) * scheme.lambda_delta, 1.0)
    block = max(1, int(_BLOCK_JUMPS / per_item))
    for start in range(0, t_full.size, block):
        stop = min(start + block, t_full.size)
        out[start:stop] = _increments(t_full[start:stop], scheme, params, rng)
    out = out.reshape(shape)
    return float(out) if size is None and t_arr.ndim == 0 else out


def sample_innovation(params: ModelParams, scheme: TruncationScheme, rng, size=None):
    """AR(1) innovation ``b * Z(b**-alpha - 1)``."""
    return params.b * sample_increment(params.a - 1.0, scheme, params, rng, size)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise OrderError("times must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(times)):
        raise OrderError("times must be finite")
    if times[0] != 0.0:
        raise OrderError(f"times must start at 0, got {times[0]}")
    if np.any(np.diff(times) <= 0.0):
        raise OrderError("times must be strictly increasing")
    return times


def sample_paths(params: ModelParams, scheme: TruncationScheme, times, rng, n_paths: int) -> np.ndarray:
    """``n_paths`` independent paths on ``times``; shape ``(n_paths, len(times))``."""
    times = _check_times(times)
    rng = as_generator(rng)
    out = np.zeros((int(n_paths), times.size))
    if times.size > 1:
        steps = sample_increment(np.diff(times), scheme, params, rng, size=(int(n_paths), times.size - 1))
        np.cumsum(steps, axis=1, out=out[:, 1:])
    return out


def sample_path(params: ModelParams, scheme: TruncationScheme, times, rng) -> SamplePath:
    times = _check_times(times)
    values = sample_paths(params, scheme, times, as_generator(rng), 1)[0]
    return SamplePath(times, values, seed_of(rng), scheme)


def truncated_exponent(u, scheme: TruncationScheme, params: ModelParams):
    """Exponent of the law the sampler actually draws from at t = 1.

    Differs from ``psi`` by ``2c int_0^delta (1 - cos ux - (ux)**2/2) nu``,
    summed here as a power series in ``u*delta``.
    """
    u = np.asarray(u, dtype=float)
    ud = np.max(np.abs(u), initial=0.0) * scheme.delta
    if ud > 30.0:
        raise RangeError("u", f"|u|*delta = {ud:.3g} is too large for the series correction")
    corr = np.zeros_like(u)
    for k in range(2, 200):
        p = 2 * k
        term = (-1) ** (k + 1) * np.exp(p * np.log(np.abs(u) + 1e-300) - math.lgamma(p + 1)) * modulated_moment(
            p - params.alpha, scheme.delta, params
        )
        corr = corr + term
        if np.max(np.abs(term), initial=0.0) < 1e-17 * max(np.max(np.abs(corr), initial=0.0), 1e-300) and k > 4:
            break
    return levy_exponent_closed(u, params) + 2.0 * params.c * corr


def truncation_bias(scheme: TruncationScheme, params: ModelParams, grid, t: float = 1.0, scale: float = 1.0) -> float:
    """Sup over ``grid`` of ``|E exp(iu*scale*Z_sim(t)) - E exp(iu*scale*Z(t))|``.

    This is the exact characteristic-function error introduced by the
    small-jump substitution, i.e. the bias floor of any Monte Carlo check.
    """
    v = scale * np.asarray(grid, dtype=float)
    exact = np.exp(t * levy_exponent_closed(v, params))
    approx = np.exp(t * truncated_exponent(v, scheme, params))
    return float(np.max(np.abs(approx - exact)))
