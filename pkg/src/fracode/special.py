"""
frac-ode Special Functions

Gamma family and the two-parameter Mittag-Leffler function E_{alpha,beta}
on the real line. Gamma is a fixed-coefficient Lanczos approximation so that
results do not depend on the platform libm.
"""

from __future__ import annotations

import cmath
import logging
import math
import threading
from dataclasses import dataclass
from collections.abc import Iterable
from functools import lru_cache
from typing import Literal

import mpmath
import numpy as np

from fracode.errors import DomainError, GammaPoleError

logger = logging.getLogger(__name__)


# =============================================================================
# Gamma family
# =============================================================================

LANCZOS_G = 607.0 / 128.0
LANCZOS_COEFFICIENTS: tuple[float, ...] = (
    0.999999999999997092,
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)

GAMMA_OVERFLOW = 171.6243769563027
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)
_EXP_LIMIT = 709.0


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def _sinpi(x: float) -> float:
    """sin(pi*x) with exact argument reduction; exactly 0 at integers."""
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def _lanczos_sum(z: float) -> float:
    coefficients = LANCZOS_COEFFICIENTS
    total = coefficients[0]
    for i in range(1, len(coefficients)):
        total += coefficients[i] / (z + i)
    return total


def gamma_fn(x: float) -> float:
    """
    Gamma function for real x.

    Raises:
        GammaPoleError: x is 0 or a negative integer.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if _is_pole(x):
        raise GammaPoleError(x)
    if x < 0.5:
        return math.pi / (_sinpi(x) * gamma_fn(1.0 - x))
    if x > GAMMA_OVERFLOW:
        return math.inf
    if x == math.floor(x):
        return float(math.factorial(int(x) - 1))

    z = x - 1.0
    t = z + LANCZOS_G + 0.5
    # t**(z+0.5) split in two halves so large x does not overflow early
    half = t ** ((z + 0.5) / 2.0)
    return _SQRT_2PI * half * (half * math.exp(-t)) * _lanczos_sum(z)


def log_abs_gamma(x: float) -> float:
    """log|Gamma(x)|, valid far beyond the overflow point of gamma_fn."""
    x = float(x)
    if _is_pole(x):
        raise GammaPoleError(x)
    if x < 0.5:
        return _LOG_PI - math.log(abs(_sinpi(x))) - log_abs_gamma(1.0 - x)
    z = x - 1.0
    t = z + LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_sign(x: float) -> int:
    """Sign of Gamma(x); 0 at the poles."""
    x = float(x)
    if _is_pole(x):
        return 0
    if x > 0.0:
        return 1
    # Gamma alternates sign between consecutive negative integers
    return -1 if math.floor(x) % 2 else 1


def recip_gamma_fn(x: float) -> float:
    """1/Gamma(x) for any real x; exactly 0 at the poles."""
    x = float(x)
    if math.isnan(x):
        return math.nan
    if _is_pole(x):
        return 0.0
    if x > GAMMA_OVERFLOW:
        return math.exp(-log_abs_gamma(x))
    if x < 0.5:
        s = _sinpi(x)
        if 1.0 - x > GAMMA_OVERFLOW:
            log_mag = math.log(abs(s)) + log_abs_gamma(1.0 - x) - _LOG_PI
            if log_mag > _EXP_LIMIT:
                return math.copysign(math.inf, s)
            return math.copysign(math.exp(log_mag), s)
        return s * gamma_fn(1.0 - x) / math.pi
    return 1.0 / gamma_fn(x)


def _log_abs_recip_gamma(x: float) -> float:
    """log|1/Gamma(x)|; -inf at the poles."""
    if _is_pole(x):
        return -math.inf
    return -log_abs_gamma(x)


# =============================================================================
# Mittag-Leffler types
# =============================================================================

Z_SWITCH = 10.0
ML_TOL = 1e-10
SERIES_CUTOFF = 1e-16
SERIES_MAX_TERMS = 400
EXTENDED_MAX_TERMS = 6000
ASYMPTOTIC_MAX_TERMS = 400
_EPS = 2.0 ** -52
_LOG_STOP = math.log(1e-17)

RegimeKind = Literal["series", "extended", "asymptotic"]
RegimeChoice = Literal["auto", "series", "asymptotic"]


@dataclass(frozen=True)
class MLParams:
    """Arguments of E_{alpha,beta}(z)."""
    alpha: float
    beta: float = 1.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not math.isfinite(self.beta):
            raise DomainError(f"beta must be finite, got {self.beta!r}")
        if not math.isfinite(self.z):
            raise DomainError(f"z must be finite, got {self.z!r}")

    def model_dump(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "z": self.z}


@dataclass(frozen=True)
class MLRegime:
    """How a Mittag-Leffler value was obtained."""
    kind: RegimeKind
    terms_used: int
    est_error: float
    precision_digits: int = 16
    flagged: bool = False

    def model_dump(self) -> dict:
        return {
            "kind": self.kind,
            "terms_used": self.terms_used,
            "est_error": self.est_error,
            "precision_digits": self.precision_digits,
            "flagged": self.flagged,
        }


# =============================================================================
# Series in double precision
# =============================================================================

@lru_cache(maxsize=128)
def _double_coefficients(alpha: float, beta: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """(1/Gamma(alpha*n+beta), log|1/Gamma(alpha*n+beta)|) for n < SERIES_MAX_TERMS."""
    values = []
    logs = []
    for n in range(SERIES_MAX_TERMS):
        arg = alpha * n + beta
        values.append(recip_gamma_fn(arg))
        logs.append(_log_abs_recip_gamma(arg))
    return tuple(values), tuple(logs)


@dataclass(frozen=True)
class _SeriesProfile:
    n_peak: int
    log_max: float
    n_stop: int | None


def _series_profile(alpha: float, beta: float, z: float, cap: int) -> _SeriesProfile:
    """Locate the largest term and the first index past it below the cutoff."""
    log_z = math.log(abs(z))
    log_max = -math.inf
    n_peak = 0
    for n in range(cap):
        arg = alpha * n + beta
        if _is_pole(arg):
            continue
        lt = n * log_z - log_abs_gamma(arg)
        if lt > log_max:
            log_max, n_peak = lt, n
            continue
        # positive z sums to at least the largest term; negative z may cancel to O(1)
        stop_level = _LOG_STOP + (max(log_max, 0.0) if z > 0 else 0.0)
        if n > n_peak and lt < stop_level:
            return _SeriesProfile(n_peak, log_max, n + 1)
    return _SeriesProfile(n_peak, log_max, None)


def _double_series(alpha: float, beta: float, z: float, n_terms: int) -> tuple[float, float]:
    """Sum n_terms series terms in double precision; returns (value, est_error)."""
    values, logs = _double_coefficients(alpha, beta)
    log_z = math.log(abs(z))
    terms = []
    for n in range(n_terms):
        c = values[n]
        if n * log_z < _EXP_LIMIT and c != 0.0:
            term = c * z ** n
        elif logs[n] == -math.inf:
            term = 0.0
        else:
            log_mag = n * log_z + logs[n]
            if log_mag > _EXP_LIMIT:
                return math.inf, math.inf
            sign = gamma_sign(alpha * n + beta) * (-1.0 if z < 0 and n % 2 else 1.0)
            term = sign * math.exp(log_mag)
        terms.append(term)
    value = math.fsum(terms)
    abs_sum = math.fsum(abs(t) for t in terms)
    est_error = abs(terms[-1]) + 4.0 * _EPS * abs_sum
    return value, est_error


# =============================================================================
# Series in extended precision
# =============================================================================

_MP = mpmath.MPContext()
_MP_LOCK = threading.Lock()
_EXTENDED_COEFFICIENTS: dict[tuple[float, float, int], list] = {}


def _extended_coefficients(alpha: float, beta: float, dps: int, count: int) -> list:
    """1/Gamma(alpha*n+beta) as mpf at dps digits; caller holds _MP_LOCK."""
    key = (alpha, beta, dps)
    table = _EXTENDED_COEFFICIENTS.setdefault(key, [])
    a = _MP.mpf(alpha)
    b = _MP.mpf(beta)
    while len(table) < count:
        table.append(_MP.rgamma(a * len(table) + b))
    return table


def _extended_series(
    alpha: float, beta: float, z: float, n_terms: int, log_max: float
) -> tuple[float, float, int]:
    """Series summed at a working precision covering the cancellation."""
    digits_lost = max(0, math.ceil(log_max / math.log(10.0)))
    dps = 10 * math.ceil((digits_lost + 24) / 10)
    with _MP_LOCK:
        _MP.dps = dps
        coefficients = _extended_coefficients(alpha, beta, dps, n_terms)
        zz = _MP.mpf(z)
        power = _MP.mpf(1)
        total = _MP.mpf(0)
        last = _MP.mpf(0)
        for n in range(n_terms):
            last = coefficients[n] * power
            total += last
            power *= zz
        value = float(total)
        est_error = float(abs(last)) + _EPS * abs(value)
    return value, est_error, dps


# =============================================================================
# Asymptotic expansion for large negative argument
# =============================================================================

def _log_envelope(y: float) -> float:
    """Upper bound for log|1/Gamma(y)| that is smooth in y."""
    if y < 0.5:
        return log_abs_gamma(1.0 - y) - _LOG_PI
    return -log_abs_gamma(y)


def _exponential_part(alpha: float, beta: float, x: float) -> float:
    """Contribution of the exponential poles of E_{alpha,beta}(-x); none for alpha < 1."""
    if alpha < 1.0:
        return 0.0
    root = x ** (1.0 / alpha)
    t = cmath.rect(root, math.pi / alpha)
    contribution = t ** (1.0 - beta) * cmath.exp(t)
    # alpha == 1 puts a single pole on the negative axis, otherwise a conjugate pair
    factor = 1.0 / alpha if alpha == 1.0 else 2.0 / alpha
    return factor * contribution.real


def _asymptotic(alpha: float, beta: float, x: float) -> tuple[float, float, int]:
    """
    E_{alpha,beta}(-x) ~ -sum_k (-1)^k x^{-k} / Gamma(beta - alpha*k), optimally truncated.

    Terms are built from log|1/Gamma| and the sign of Gamma; 1/Gamma(y) itself
    overflows for y below about -170.

    Returns (value, est_error, terms_used).
    """
    log_x = math.log(x)
    terms: list[float] = []
    prev_envelope = math.inf
    est_error = 0.0
    terms_used = 0
    for k in range(1, ASYMPTOTIC_MAX_TERMS + 1):
        y = beta - alpha * k
        if _is_pole(y):
            continue
        log_envelope = _log_envelope(y) - k * log_x
        if log_envelope > prev_envelope:
            est_error = math.exp(min(log_envelope, _EXP_LIMIT))
            break
        prev_envelope = log_envelope
        log_mag = _log_abs_recip_gamma(y) - k * log_x
        if log_mag > _EXP_LIMIT:
            return math.inf, math.inf, k
        sign = gamma_sign(y) * (-1.0 if k % 2 == 0 else 1.0)
        terms.append(sign * math.exp(log_mag))
        terms_used = k
    else:
        if prev_envelope < math.inf:
            est_error = math.exp(min(prev_envelope, _EXP_LIMIT))

    exponential = _exponential_part(alpha, beta, x)
    value = math.fsum(terms) + exponential
    abs_sum = math.fsum(abs(t) for t in terms) + abs(exponential)
    return value, est_error + 4.0 * _EPS * abs_sum, terms_used


# =============================================================================
# Public evaluation
# =============================================================================

def _series_candidate(
    alpha: float, beta: float, z: float, tol: float
) -> tuple[float, MLRegime] | None:
    """Best series evaluation for z != 0, or None when no series is feasible."""
    profile = _series_profile(alpha, beta, z, SERIES_MAX_TERMS)
    if profile.n_stop is not None:
        cancellation = _EPS * math.exp(min(profile.log_max, _EXP_LIMIT)) * 10.0
        if z > 0 or cancellation <= tol / 10.0:
            value, est_error = _double_series(alpha, beta, z, profile.n_stop)
            double = MLRegime("series", profile.n_stop, est_error)
            # a negative argument that misses tol goes on to extended precision
            if z > 0 or _within(value, double, tol):
                return value, double

    if z > 0:
        value, est_error = _double_series(alpha, beta, z, SERIES_MAX_TERMS)
        return value, MLRegime("series", SERIES_MAX_TERMS, est_error, flagged=True)

    profile = _series_profile(alpha, beta, z, EXTENDED_MAX_TERMS)
    if profile.n_stop is None:
        return None
    value, est_error, dps = _extended_series(alpha, beta, z, profile.n_stop, profile.log_max)
    return value, MLRegime("extended", profile.n_stop, est_error, precision_digits=dps)


def _within(value: float, regime: MLRegime, tol: float) -> bool:
    # absolute tolerance, relative once |E| exceeds 1
    if not math.isfinite(value):
        return False
    return not regime.flagged and regime.est_error <= tol * max(1.0, abs(value))


def _finite_regime(value: float, regime: MLRegime, tol: float) -> MLRegime:
    est = regime.est_error if math.isfinite(regime.est_error) else 1.0e300
    finite = MLRegime(regime.kind, regime.terms_used, est, regime.precision_digits)
    return MLRegime(
        regime.kind,
        regime.terms_used,
        est,
        regime.precision_digits,
        not _within(value, finite, tol) or regime.flagged,
    )


def mittag_leffler(
    p: MLParams,
    tol: float = ML_TOL,
    regime: RegimeChoice = "auto",
) -> tuple[float, MLRegime]:
    """
    Evaluate E_{alpha,beta}(z) for real z.

    The defining series is used for z >= -Z_SWITCH, switching to extended
    precision when cancellation would exceed the tolerance. Below -Z_SWITCH the
    optimally truncated asymptotic expansion is used, falling back to the series
    when its error estimate is too large. An out-of-tolerance result is returned
    with ``flagged`` set rather than raised.

    Args:
        p: Arguments (alpha, beta, z)
        tol: Absolute accuracy target
        regime: Force "series" or "asymptotic" instead of choosing automatically

    Returns:
        Tuple of (value, regime metadata)
    """
    alpha, beta, z = p.alpha, p.beta, p.z

    if z == 0.0:
        return recip_gamma_fn(beta), MLRegime("series", 1, 0.0)

    if regime == "asymptotic":
        if z >= 0:
            raise DomainError("asymptotic expansion needs a negative argument")
        value, est_error, terms = _asymptotic(alpha, beta, -z)
        return value, _finite_regime(value, MLRegime("asymptotic", terms, est_error), tol)

    if regime == "series":
        candidate = _series_candidate(alpha, beta, z, tol)
        if candidate is None:
            raise DomainError(f"series infeasible for {p.model_dump()}")
        value, info = candidate
        return value, _finite_regime(value, info, tol)

    candidates: list[tuple[float, MLRegime]] = []
    if z >= -Z_SWITCH:
        series = _series_candidate(alpha, beta, z, tol)
        if series is not None:
            if _within(series[0], series[1], tol):
                return series[0], _finite_regime(series[0], series[1], tol)
            candidates.append(series)
        if z < 0:
            # only reached when the series cannot meet the tolerance
            value, est_error, terms = _asymptotic(alpha, beta, -z)
            candidates.append((value, MLRegime("asymptotic", terms, est_error)))
    else:
        value, est_error, terms = _asymptotic(alpha, beta, -z)
        asymptotic = (value, MLRegime("asymptotic", terms, est_error))
        if _within(value, asymptotic[1], tol):
            return value, _finite_regime(value, asymptotic[1], tol)
        candidates.append(asymptotic)
        series = _series_candidate(alpha, beta, z, tol)
        if series is not None:
            candidates.append(series)

    value, info = min(candidates, key=lambda c: (not math.isfinite(c[0]), c[1].est_error))
    info = _finite_regime(value, info, tol)
    if info.flagged:
        logger.warning(
            f"Mittag-Leffler accuracy flagged for {p.model_dump()}: "
            f"{info.kind} estimate {info.est_error:.3e}"
        )
    else:
        logger.debug(f"Mittag-Leffler {p.model_dump()} via {info.kind} ({info.terms_used} terms)")
    return value, info


def ml_e(gamma: float, lam: float, t: float) -> float:
    """e_{gamma,lambda}(t) = E_gamma(lambda * t**gamma)."""
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma!r}")
    if t < 0.0:
        raise DomainError(f"t must be nonnegative, got {t!r}")
    value, _ = mittag_leffler(MLParams(alpha=gamma, beta=1.0, z=lam * t ** gamma))
    return value


def _unit_disk_coefficients(alpha: float, beta: float) -> np.ndarray:
    """Series coefficients needed for |z| <= 1, trailing terms below the cutoff dropped."""
    values = np.array(_double_coefficients(alpha, beta)[0])
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return values[:1]
    significant = np.flatnonzero(np.abs(values) >= SERIES_CUTOFF * 1e-2 * scale)
    return values[: significant[-1] + 1]


def mittag_leffler_values(alpha: float, beta: float, z: Iterable[float]) -> np.ndarray:
    """
    E_{alpha,beta} applied elementwise.

    Arguments with |z| <= 1 are summed together by polynomial evaluation of
    the truncated series; the rest go through mittag_leffler one by one.
    """
    MLParams(alpha=alpha, beta=beta)
    z = np.asarray(list(z) if not isinstance(z, np.ndarray) else z, dtype=float)
    out = np.empty(z.shape)
    inside = np.abs(z) <= 1.0
    if np.any(inside):
        coefficients = _unit_disk_coefficients(alpha, beta)
        out[inside] = np.polynomial.polynomial.polyval(z[inside], coefficients)
    for index in np.flatnonzero(~inside):
        out.flat[index] = mittag_leffler(MLParams(alpha, beta, float(z.flat[index])))[0]
    return out
