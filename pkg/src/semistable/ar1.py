"""First-order autoregression ``X_k = b X_{k-1} + eps_k`` with semi-stable marginals.

With ``X_0 ~ Z(1)`` and innovations ``eps_k ~ b Z(b**-alpha - 1)`` every
``X_k`` has the law of Z(1): on the exponent scale
``psi(b u) + (a - 1) psi(b u) = a psi(b u) = psi(u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import RangeError
from .model import ModelParams, cf
from .sampler import TruncationScheme, as_generator, sample_increment, sample_innovation, seed_of

__all__ = [
    "Ar1Series",
    "simulate_ar1",
    "nonstationary_start_ar1",
    "theoretical_marginal_cf",
    "thinning_gap",
    "recover_innovations",
]


@dataclass(frozen=True)
class Ar1Series:
    """One realisation ``X_0, ..., X_n``.

    ``x0`` is ``None`` for the stationary start ``X_0 ~ Z(1)`` and holds the
    deterministic starting value otherwise.  ``innovations[k-1]`` is the
    ``eps_k`` that produced ``values[k]``.
    """

    values: np.ndarray
    innovations: np.ndarray
    params: ModelParams
    scheme: TruncationScheme
    seed: Optional[int]
    n: int
    x0: Optional[float] = None

    @property
    def stationary_start(self) -> bool:
        return self.x0 is None


def thinning_gap(params: ModelParams, coupling: float = 0.01) -> int:
    """Smallest g with ``b**g <= coupling``."""
    return max(1, math.ceil(math.log(coupling) / math.log(params.b)))


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise RangeError("n", f"must be a non-negative integer, got {n!r}")
    return int(n)


def _recurse(start: float, innovations: np.ndarray, b: float) -> np.ndarray:
    values = np.empty(innovations.size + 1)
    values[0] = start
    if innovations.size:
        # direct-form filter: X_k = fl(eps_k + fl(b X_{k-1})), same as the loop
        values[1:] = lfilter([1.0], [1.0, -b], innovations, zi=[b * start])[0]
    return values


def simulate_ar1(params: ModelParams, scheme: TruncationScheme, n: int, rng) -> Ar1Series:
    """Stationary series: ``X_0`` is one draw of Z(1), then n innovations."""
    n = _check_n(n)
    gen = as_generator(rng)
    x_start = sample_increment(1.0, scheme, params, gen)
    eps = sample_innovation(params, scheme, gen, size=n)
    return Ar1Series(_recurse(x_start, eps, params.b), eps, params, scheme, seed_of(rng), n)


def nonstationary_start_ar1(params, scheme, n, x0, rng, *, innovations=None) -> Ar1Series:
    """Same recursion from a fixed ``X_0 = x0``.

    ``innovations`` replaces the random stream (length ``n``); passing zeros
    exposes the pure ``b**k x0`` decay.
    """
    n = _check_n(n)
    try:
        x0 = float(x0)
    except (TypeError, ValueError):
        raise RangeError("x0", f"expected a real number, got {x0!r}") from None
    if not math.isfinite(x0):
        raise RangeError("x0", f"must be finite, got {x0}")
    if innovations is None:
        eps = sample_innovation(params, scheme, as_generator(rng), size=n)
    else:
        eps = np.asarray(innovations, dtype=float)
        if eps.shape != (n,):
            raise RangeError("innovations", f"expected shape ({n},), got {eps.shape}")
    return Ar1Series(_recurse(x0, eps, params.b), eps, params, scheme, seed_of(rng), n, x0)


def theoretical_marginal_cf(u, params: ModelParams):
    """Characteristic function of every X_k under the stationary start."""
    return cf(u, 1.0, params)


def recover_innovations(series: Ar1Series) -> np.ndarray:
    """``X_k - b X_{k-1}``; equals the stored innovations up to one rounding."""
    v = series.values
    return v[1:] - series.params.b * v[:-1]
