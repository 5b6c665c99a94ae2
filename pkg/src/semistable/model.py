"""Symmetric semi-stable laws with a log-periodic Lévy measure.

The family is the pure-jump infinitely divisible law with Lévy density

    nu(x) = c * theta(ln|x|) / |x|**(1 + alpha),
    theta(s) = 1 + eps_pert * cos(omega * s),   omega = 2*pi / ln(1/b).

Because ``theta`` has period ``ln(1/b)`` the measure satisfies
``nu(B) = a * nu(B / b)`` with ``a = b**-alpha``, so the characteristic
function obeys ``f(u) = f(b*u)**a``.  With ``eps_pert = 0`` the law is the
symmetric alpha-stable law.

Everything here works on the exponent scale: ``psi(u) = log f(u)`` is real and
non-positive, and the law of Z(t) has characteristic function
``exp(t * psi(u))``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, DomainError, EmptyInput, RangeError

__all__ = [
    "ModelParams",
    "ExponentValue",
    "validate_params",
    "theta",
    "levy_density",
    "kernel_constant",
    "levy_exponent_closed",
    "levy_exponent_quadrature",
    "levy_exponent",
    "exponent_table",
    "cf",
    "semistable_residual",
    "ssd_factor_exponent",
    "ssd_factor_cf",
]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one symmetric semi-stable law.

    Build instances with :func:`validate_params`; the constructor itself does
    not check ranges.
    """

    alpha: float
    b: float
    eps_pert: float = 0.0
    c: float = 1.0

    @property
    def a(self) -> float:
        """Epoch ``b**-alpha`` (> 1)."""
        return self.b ** (-self.alpha)

    @property
    def period(self) -> float:
        """Period ``ln(1/b)`` of the modulation in log jump size."""
        return -math.log(self.b)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def H(self) -> float:
        return 1.0 / self.alpha

    @property
    def is_stable(self) -> bool:
        return self.eps_pert == 0.0

    def as_dict(self) -> dict:
        return asdict(self)

    def detuned(self, factor: float) -> "ModelParams":
        """Copy whose modulation frequency is ``factor * omega``.

        The result is *not* semi-stable for ``factor != 1``; it exists for
        negative controls.
        """
        return _DetunedParams(self.alpha, self.b, self.eps_pert, self.c, factor)


@dataclass(frozen=True)
class _DetunedParams(ModelParams):
    factor: float = 1.0

    @property
    def omega(self) -> float:
        return self.factor * 2.0 * math.pi / self.period


class ExponentValue(NamedTuple):
    u: float
    psi: float


def _real(name, value):
    if isinstance(value, bool):
        raise RangeError(name, f"expected a real number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise RangeError(name, f"expected a real number, got {value!r}") from None
    if not math.isfinite(x):
        raise RangeError(name, f"must be finite, got {value!r}")
    return x


def validate_params(alpha, b, eps_pert=0.0, c=1.0) -> ModelParams:
    """Check raw values and return a :class:`ModelParams`.

    Raises
    ------
    RangeError
        Naming the first offending field.  ``alpha = 2`` is rejected: the
        Gaussian endpoint has no jump part to modulate.
    """
    alpha = _real("alpha", alpha)
    b = _real("b", b)
    eps_pert = _real("eps_pert", eps_pert)
    c = _real("c", c)

    if alpha == 2.0 and eps_pert != 0.0:
        raise RangeError(
            "alpha",
            "alpha = 2 is the Gaussian endpoint; it has no Lévy jump measure, "
            "so a log-periodic perturbation (eps_pert != 0) is impossible",
        )
    if not 0.0 < alpha < 2.0:
        raise RangeError("alpha", f"must lie in (0, 2), got {alpha}")
    if not 0.0 < b < 1.0:
        raise RangeError("b", f"must lie in (0, 1), got {b}")
    if not 0.0 <= eps_pert < 1.0:
        raise RangeError("eps_pert", f"must lie in [0, 1), got {eps_pert}")
    if not c > 0.0:
        raise RangeError("c", f"must be positive, got {c}")
    return ModelParams(alpha, b, eps_pert, c)


def theta(s, params: ModelParams):
    """Log-periodic modulation ``1 + eps_pert*cos(omega*s)``."""
    return 1.0 + params.eps_pert * np.cos(params.omega * np.asarray(s, dtype=float))


def levy_density(x, params: ModelParams):
    """Lévy density ``c*theta(ln|x|)/|x|**(1+alpha)``; symmetric in x."""
    x = np.abs(np.asarray(x, dtype=float))
    if np.any(x == 0.0):
        raise DomainError("the Lévy density is not defined at x = 0")
    return params.c * theta(np.log(x), params) * x ** (-1.0 - params.alpha)


# --- closed form ------------------------------------------------------------


def _log_sin(z: complex) -> complex:
    # log(sin z) without overflow for large |Im z| (branch is irrelevant,
    # the result is only ever exponentiated).
    if z.imag < 0.0:
        return np.conj(_log_sin(np.conj(z)))
    return -1j * z + np.log((np.exp(2j * z) - 1.0) / 2j)


def kernel_constant(beta) -> complex:
    """``K(beta) = int_0^inf (1 - cos y) y**(-1-beta) dy``, 0 < Re beta < 2.

    Uses ``Gamma(2-beta) cos(pi*beta/2) / (beta*(1-beta))`` rewritten as
    ``Gamma(2-beta) * sin(z)/z * pi/(2*beta)`` with ``z = pi*(1-beta)/2`` so
    that ``beta = 1`` (value ``pi/2``) needs no special case and large
    imaginary parts do not overflow.
    """
    beta = complex(beta)
    if not 0.0 < beta.real < 2.0:
        raise DomainError(f"kernel_constant needs 0 < Re(beta) < 2, got {beta}")
    z = math.pi * (1.0 - beta) / 2.0
    if abs(z) < 1e-3:
        sinc = 1.0 - z * z / 6.0 + z**4 / 120.0
        val = np.exp(special.loggamma(2.0 - beta)) * sinc * math.pi / (2.0 * beta)
    else:
        val = np.exp(special.loggamma(2.0 - beta) + _log_sin(z) - np.log(z)) * math.pi / (2.0 * beta)
    if not np.isfinite(val):
        raise DomainError(f"kernel_constant is not finite at beta = {beta}")
    return complex(val)


def _split_u(u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    nz = au > 0.0
    return u, au, nz


def levy_exponent_closed(u, params: ModelParams):
    """Closed-form Lévy exponent.

    ``psi(u) = -2c |u|**alpha [K(alpha) + eps_pert Re(K(alpha - i omega) |u|**(-i omega))]``
    """
    u, au, nz = _split_u(u)
    out = np.zeros_like(au)
    k_real = kernel_constant(params.alpha).real
    v = au[nz]
    bracket = np.full_like(v, k_real)
    if params.eps_pert:
        k_mod = kernel_constant(params.alpha - 1j * params.omega)
        bracket = bracket + params.eps_pert * np.real(k_mod * np.exp(-1j * params.omega * np.log(v)))
    out[nz] = -2.0 * params.c * v**params.alpha * bracket
    return out if out.ndim else float(out)


# --- quadrature -------------------------------------------------------------

# Gauss-Laguerre rule for the rotated-contour Fourier tail.
_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(60)


def _cos_tail(beta: complex, y0: float) -> complex:
    """``int_{y0}^inf y**(-1-beta) cos(y) dy`` by rotating onto y0 +- i t."""
    total = 0.0j
    for sgn in (1.0, -1.0):
        z = y0 + sgn * 1j * _LAG_X
        total += np.sum(_LAG_W * np.exp(-(1.0 + beta) * np.log(z))) * sgn * 1j * np.exp(sgn * 1j * y0)
    return total / 2.0


def levy_exponent_quadrature(u, params: ModelParams, *, tol=1e-10, limit=10_000):
    """Lévy exponent by numerical integration of the Lévy–Khintchine integral.

    ``psi(u) = -2 int_0^inf (1 - cos(u x)) nu(x) dx`` is taken in the variable
    ``y = |u| x`` and split at ``y = 1`` (``x = 1/|u|``):

    * ``y < 1``: the Taylor series of ``1 - cos y`` integrated term by term
      against the modulated power (exact, converges like ``1/(2k)!``);
    * ``1 <= y <= Y``: adaptive Gauss–Kronrod on ``ln y`` (``quad_vec``),
      all frequencies at once;
    * ``y > Y``: the non-oscillatory part in closed form, the ``cos y`` part
      by contour rotation, which turns it into a smooth, exponentially
      decaying integral.

    Raises
    ------
    ConvergenceError
        If the adaptive stage cannot certify an absolute error below 1e-8
        within ``limit`` subintervals.
    """
    u, au, nz = _split_u(u)
    out = np.zeros_like(au)
    if not np.any(nz):
        return out if out.ndim else float(out)

    alpha, eps, c, omega = params.alpha, params.eps_pert, params.c, params.omega
    v = au[nz]
    log_v = np.log(v)
    phase = np.exp(-1j * omega * log_v)
    beta = alpha - 1j * omega
    weight = 2.0 * c * v**alpha

    lower = np.zeros_like(v)
    for k in range(1, 40):
        p = 2 * k
        term = (-1) ** (k + 1) / math.factorial(p) * (1.0 / (p - alpha) + eps * np.real(phase / (p - beta)))
        lower += term
        if np.max(np.abs(term)) < 1e-18:
            break

    y_max = max(200.0 * math.pi, 8.0 * omega)

    def integrand(s):
        y = math.exp(s)
        return weight * (1.0 - math.cos(y)) * (1.0 + eps * np.cos(omega * (s - log_v))) * y ** (-alpha)

    middle, err, info = integrate.quad_vec(
        integrand,
        0.0,
        math.log(y_max),
        epsabs=tol,
        epsrel=1e-13,
        norm="max",
        limit=limit,
        full_output=True,
    )
    # status 2 (round-off detected) is harmless once the estimate is small
    if not err <= 1e-8 or not np.all(np.isfinite(middle)):
        raise ConvergenceError(
            f"Lévy–Khintchine quadrature reached only {err:.3g} (status {info.status}) "
            f"within {limit} subintervals"
        )

    tail_flat = y_max ** (-alpha) / alpha
    tail_cos = _cos_tail(alpha, y_max).real
    if eps:
        tail_flat = tail_flat + eps * np.real(phase * y_max ** (-beta) / beta)
        tail_cos = tail_cos + eps * np.real(phase * _cos_tail(beta, y_max))

    out[nz] = -(weight * (lower + tail_flat - tail_cos) + middle)
    return out if out.ndim else float(out)


def levy_exponent(u, params: ModelParams, method: str = "closed"):
    if method == "closed":
        return levy_exponent_closed(u, params)
    if method == "quadrature":
        return levy_exponent_quadrature(u, params)
    raise ValueError(f"unknown method {method!r}")


def exponent_table(u, params: ModelParams, method: str = "closed") -> list[ExponentValue]:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    psi = levy_exponent(u, params, method)
    return [ExponentValue(float(x), float(p)) for x, p in zip(u, psi)]


def cf(u, t, params: ModelParams, method: str = "closed"):
    """Characteristic function ``exp(t*psi(u))`` of Z(t)."""
    if t < 0:
        raise RangeError("t", f"must be non-negative, got {t}")
    return np.exp(t * levy_exponent(u, params, method))


def semistable_residual(u_grid, params: ModelParams, *, epoch=None, method="closed") -> float:
    """``max |psi(u) - a psi(b u)|`` over the grid.

    With ``epoch`` given, ``a`` is replaced by it and ``b`` by
    ``epoch**(-1/alpha)``; stable laws pass at every epoch, strictly
    semi-stable ones only on the lattice ``{a**k}``.
    """
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    if u.size == 0:
        raise EmptyInput("semistable_residual needs a non-empty grid")
    if epoch is None:
        a, b = params.a, params.b
    else:
        a = float(epoch)
        b = a ** (-1.0 / params.alpha)
    psi = levy_exponent(np.concatenate([u, b * u]), params, method)
    return float(np.max(np.abs(psi[: u.size] - a * psi[u.size:])))


def ssd_factor_exponent(u, params: ModelParams, method: str = "closed"):
    """Exponent of the SSD(b) factor: ``(a - 1) * psi(b u)``."""
    return (params.a - 1.0) * levy_exponent(params.b * np.asarray(u, dtype=float), params, method)


def ssd_factor_cf(u, params: ModelParams, method: str = "closed"):
    return np.exp(ssd_factor_exponent(u, params, method))
