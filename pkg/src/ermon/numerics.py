"""Special functions, unitary transforms, Gaussian sampling and resampling.

Everything here is pure: no module-level mutable state except the cached
interpolation table, which is read-only once built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numba
import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence]

_BETA_EPS = 1e-15
_BETA_TINY = 1e-300
_BETA_MAX_ITER = 500

RESAMPLER_TAPS = 64
RESAMPLER_PHASES = 2048
RESAMPLER_BETA = 10.0
MAX_RATE_DEVIATION = 1e-3


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """Buffer length does not match what the operation requires."""


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"beta shape parameters must be positive, got a={self.a}, b={self.b}")


@dataclass
class IqBuffer:
    """Complex baseband samples plus the rate they were taken at.

    ``meta`` carries optional bookkeeping (active-carrier counts, oversampling
    factor) that downstream stages may read; it never affects the samples.
    """

    samples: np.ndarray
    sample_rate: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise SizeError("IqBuffer holds a one-dimensional sample sequence")

    def __len__(self) -> int:
        return self.samples.size

    def replace(self, samples: np.ndarray) -> "IqBuffer":
        return IqBuffer(samples, self.sample_rate, dict(self.meta))


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent child stream for ``key`` (e.g. sweep point, trial index).

    Children are derived with ``SeedSequence(seed, spawn_key=key)``, so the
    stream of trial ``i`` never depends on how many other trials ran or in
    which order.
    """
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


# -- special functions ------------------------------------------------------

def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _betacf(x, a, b):
    """Modified Lentz evaluation of the incomplete-beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _BETA_TINY, _BETA_TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _BETA_TINY, _BETA_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _BETA_TINY, _BETA_TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _BETA_TINY, _BETA_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _BETA_TINY, _BETA_TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _BETA_EPS
        if done.all():
            break
    return h


def incomplete_beta_reg(x, p: BetaParams):
    """Regularized incomplete beta I_x(a, b); accepts scalars or arrays.

    Uses the continued fraction directly when x < (a+1)/(a+b+2) and the
    reflection I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any((xa < 0.0) | (xa > 1.0)):
        raise DomainError("incomplete_beta_reg needs 0 <= x <= 1")
    a, b = float(p.a), float(p.b)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    out = np.empty_like(xa)

    edge0 = xa == 0.0
    edge1 = xa == 1.0
    out[edge0] = 0.0
    out[edge1] = 1.0
    inner = ~(edge0 | edge1)
    if inner.any():
        xi = xa[inner]
        lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        front = np.exp(lbeta + a * np.log(xi) + b * np.log1p(-xi))
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if direct.any():
            xd = xi[direct]
            res[direct] = front[direct] * _betacf(xd, a, b) / a
        if (~direct).any():
            xr = 1.0 - xi[~direct]
            res[~direct] = 1.0 - front[~direct] * _betacf(xr, b, a) / b
        out[inner] = np.clip(res, 0.0, 1.0)
    return float(out[0]) if scalar else out


def beta_pdf(x: float, p: BetaParams) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    a, b = p.a, p.b
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    return math.exp(lbeta + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x))


def inverse_incomplete_beta(prob: float, p: BetaParams, tol: float = 1e-13) -> float:
    """x with I_x(a, b) = prob, by bracketed bisection polished with Newton steps."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"inverse_incomplete_beta needs 0 < prob < 1, got {prob}")
    lo, hi = 0.0, 1.0
    x = 0.5
    # Bisection until the bracket is narrow enough for Newton to be safe.
    for _ in range(60):
        x = 0.5 * (lo + hi)
        fx = incomplete_beta_reg(x, p) - prob
        if fx < 0:
            lo = x
        else:
            hi = x
        if hi - lo < 1e-6:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        fx = incomplete_beta_reg(x, p) - prob
        if abs(fx) <= tol:
            return x
        if fx < 0:
            lo = x
        else:
            hi = x
        dens = beta_pdf(x, p)
        step = fx / dens if dens > 0 else np.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-17:
            x = x_new
            break
        x = x_new
    return x


# -- transforms -------------------------------------------------------------

def _check_fft_size(buf: IqBuffer, size: int) -> None:
    if size < 1 or size & (size - 1):
        raise SizeError(f"transform size must be a power of two, got {size}")
    if len(buf) != size:
        raise SizeError(f"buffer length {len(buf)} != transform size {size}")


def dft(buf: IqBuffer, size: int) -> IqBuffer:
    """Unitary forward DFT (1/sqrt(size) scaling)."""
    _check_fft_size(buf, size)
    return buf.replace(np.fft.fft(buf.samples, norm="ortho"))


def idft(buf: IqBuffer, size: int) -> IqBuffer:
    """Unitary inverse DFT, the exact inverse of :func:`dft`."""
    _check_fft_size(buf, size)
    return buf.replace(np.fft.ifft(buf.samples, norm="ortho"))


# -- random sampling --------------------------------------------------------

def complex_gaussian_array(n: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    z = rng.standard_normal((2, n))
    return scale * (z[0] + 1j * z[1])


def complex_gaussian(n: int, variance: float, seed: SeedLike, sample_rate: float = 1.0) -> IqBuffer:
    """n i.i.d. circularly symmetric complex Gaussians with E|z|^2 = variance."""
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance}")
    return IqBuffer(complex_gaussian_array(int(n), variance, make_rng(seed)), sample_rate)


# -- fractional resampling --------------------------------------------------

@lru_cache(maxsize=4)
def _interp_table(taps: int, phases: int, beta: float) -> np.ndarray:
    """Kaiser-windowed sinc sampled at ``phases + 1`` fractional offsets.

    Row p holds the taps applied to inputs i0-half+1 .. i0+half for an output
    located at i0 + p/phases.
    """
    half = taps // 2
    mu = np.arange(phases + 1)[:, None] / phases
    d = mu + (half - 1) - np.arange(taps)[None, :]
    win = np.i0(beta * np.sqrt(np.clip(1.0 - (d / half) ** 2, 0.0, None))) / np.i0(beta)
    table = np.sinc(d) * win
    table.setflags(write=False)
    return table


@lru_cache(maxsize=4)
def _interp_slope(taps: int, phases: int, beta: float) -> np.ndarray:
    table = _interp_table(taps, phases, beta)
    slope = np.zeros_like(table)
    slope[:-1] = table[1:] - table[:-1]
    slope.setflags(write=False)
    return slope


@numba.njit(cache=True, fastmath=True)
def _resample_kernel(x, positions, table, slope, phases, half, out):
    n = x.size
    taps = 2 * half
    for m in range(positions.size):
        t = positions[m]
        i0 = int(np.floor(t))
        phase = (t - i0) * phases
        p = min(int(phase), phases - 1)
        a = phase - p
        first = i0 - half + 1
        lo = max(0, -first)
        hi = min(taps, n - first)
        acc_re = 0.0
        acc_im = 0.0
        for j in range(lo, hi):
            w = table[p, j] + a * slope[p, j]
            v = x[first + j]
            acc_re += v.real * w
            acc_im += v.imag * w
        out[m] = complex(acc_re, acc_im)


def resample_positions(x: np.ndarray, positions: np.ndarray, taps: int = RESAMPLER_TAPS) -> np.ndarray:
    """Band-limited interpolation of ``x`` at arbitrary real sample positions.

    Positions outside the input see zeros beyond the ends.
    """
    table = _interp_table(taps, RESAMPLER_PHASES, RESAMPLER_BETA)
    x = np.ascontiguousarray(x, dtype=np.complex128)
    out = np.empty(positions.size, dtype=np.complex128)
    slope = _interp_slope(taps, RESAMPLER_PHASES, RESAMPLER_BETA)
    _resample_kernel(x, np.ascontiguousarray(positions, dtype=np.float64), table, slope,
                     RESAMPLER_PHASES, taps // 2, out)
    return out


def fractional_resample(buf: IqBuffer, rate_factor: float, taps: int = RESAMPLER_TAPS) -> IqBuffer:
    """Re-sample ``buf`` at instants m * rate_factor (in input sample periods).

    The output has the same length as the input; instants past the end of the
    input read zeros. A factor of exactly 1 returns an untouched copy.
    """
    if not abs(rate_factor - 1.0) <= MAX_RATE_DEVIATION:
        raise DomainError(f"rate factor {rate_factor} outside 1 +/- {MAX_RATE_DEVIATION}")
    if rate_factor == 1.0:
        return buf.replace(buf.samples.copy())
    positions = np.arange(len(buf)) * float(rate_factor)
    return buf.replace(resample_positions(buf.samples, positions, taps))
