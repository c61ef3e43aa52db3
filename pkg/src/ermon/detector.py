"""Energy-ratio detector: closed forms, streaming state, decisions and fusion.

The decision variable compares the energy U of the newest ``N`` reserved-tone
samples with the energy V of the ``N`` samples before them. Under H0 both
windows hold the same Gaussian process, so X = U/V follows a scaled F law and
the threshold for a target false-alarm rate comes from an inverse incomplete
beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .numerics import BetaParams, DomainError, incomplete_beta_reg, inverse_incomplete_beta


class InputError(ValueError):
    """Rejected detector input (non-finite sample, empty vote list)."""


class InsufficientCalibrationError(ValueError):
    """Stream too short to fill both windows once."""


def _check_n(N: int) -> int:
    if int(N) != N or N < 1:
        raise DomainError(f"window size must be a positive integer, got {N}")
    return int(N)


# -- closed forms ------------------------------------------------------------

def pfa_closed_form(gamma, N: int):
    """P(X > gamma | H0) = 1 - I_{gamma/(1+gamma)}(N, N)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("threshold must be non-negative")
    q = np.where(np.isinf(g), 1.0, g / (1.0 + np.where(np.isinf(g), 0.0, g)))
    out = 1.0 - incomplete_beta_reg(q, BetaParams(_check_n(N), _check_n(N)))
    return float(out) if np.ndim(out) == 0 else out


def threshold_from_pfa(p_fa: float, N: int) -> float:
    """Neyman-Pearson threshold gamma such that P(X > gamma | H0) = p_fa."""
    N = _check_n(N)
    if not 0.0 < p_fa < 1.0:
        raise DomainError(f"p_fa must lie strictly between 0 and 1, got {p_fa}")
    q = inverse_incomplete_beta(1.0 - p_fa, BetaParams(N, N))
    return q / (1.0 - q)


def pd_closed_form(gamma: float, pnr_linear, N: int, sigma_H_sq: float = 1.0):
    """Detection probability when the newer window also holds the primary signal.

    The variance ratio between windows is 1 + sigma_H_sq * PNR, so the H0
    tail is simply evaluated at the reduced threshold gamma / (1 + sigma_H_sq * PNR).
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    pnr = np.asarray(pnr_linear, dtype=float)
    if np.any(pnr < 0):
        raise DomainError("PNR must be non-negative")
    t = gamma / (1.0 + sigma_H_sq * pnr)
    return pfa_closed_form(t, N)


def pdf_x(x, N: int, ratio: float = 1.0):
    """Density of X when the window variances differ by ``ratio`` = sigma_u^2/sigma_v^2."""
    N = _check_n(N)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("X is non-negative")
    y = xa / ratio
    lc = math.lgamma(2 * N) - 2 * math.lgamma(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = lc + (N - 1) * np.log(y) - 2 * N * np.log1p(y) - math.log(ratio)
        out = np.where(y > 0, np.exp(logd), 1.0 / ratio if N == 1 else 0.0)
    out = np.where(np.isinf(y), 0.0, out)
    return float(out) if out.ndim == 0 else out


def cdf_x(x, N: int, ratio: float = 1.0):
    N = _check_n(N)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("X is non-negative")
    y = xa / ratio
    fin = np.isfinite(y)
    q = np.where(fin, y / (1.0 + np.where(fin, y, 0.0)), 1.0)
    out = incomplete_beta_reg(q, BetaParams(N, N))
    return out


def mean_x(N: int, ratio: float = 1.0) -> float:
    """E[X] = N/(N-1) * ratio; infinite for N = 1."""
    N = _check_n(N)
    return math.inf if N == 1 else N / (N - 1) * ratio


def second_moment_x(N: int, ratio: float = 1.0) -> float:
    """E[X^2] = Gamma(N-2) Gamma(N+2) / Gamma(N)^2 * ratio^2 = N(N+1)/((N-1)(N-2)) ratio^2."""
    N = _check_n(N)
    if N <= 2:
        return math.inf
    return N * (N + 1) / ((N - 1) * (N - 2)) * ratio ** 2


def variance_x(N: int, ratio: float = 1.0) -> float:
    if _check_n(N) <= 2:
        return math.inf
    return second_moment_x(N, ratio) - mean_x(N, ratio) ** 2


# -- streaming detector ------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    k: int
    x_value: float
    pu_detected: bool
    binding: bool = True


@dataclass(frozen=True)
class RocPoint:
    p_fa: float
    p_d: float
    gamma: float
    pnr_db: Optional[float] = None
    spr_db: Optional[float] = None

    def __post_init__(self):
        for name in ("p_fa", "p_d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} = {v} is not a probability")


def ratio_of(u: float, v: float) -> float:
    """U/V with the degenerate cases pinned: V = 0 < U gives inf, U = V = 0 gives 1."""
    if v > 0:
        return u / v
    return math.inf if u > 0 else 1.0


@dataclass
class DetectorState:
    """Two back-to-back windows of ``N`` squared magnitudes kept in a ring.

    ``fifo[head]`` is the oldest sample; the first ``N`` entries from there
    form V and the next ``N`` form U. Sums are updated recursively.
    """

    N: int
    gamma: float
    fifo: np.ndarray = field(default=None, repr=False)
    head: int = 0
    U: float = 0.0
    V: float = 0.0
    calibrated: bool = False
    samples_seen: int = 0
    idle_samples: int = 0

    def __post_init__(self):
        self.N = _check_n(self.N)
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.fifo is None:
            self.fifo = np.zeros(2 * self.N)

    @classmethod
    def from_pfa(cls, N: int, p_fa: float) -> "DetectorState":
        return cls(N, threshold_from_pfa(p_fa, N))

    @property
    def filled(self) -> bool:
        return self.samples_seen >= 2 * self.N

    def direct_sums(self) -> Tuple[float, float]:
        """(U, V) recomputed from the ring; reference for the recursive values."""
        order = np.roll(self.fifo, -self.head)
        return float(order[self.N:].sum()), float(order[:self.N].sum())


def ingest(state: DetectorState, z: complex, idle: bool = False) -> Optional[Decision]:
    """Push one reserved-tone sample; returns a decision once both windows are full.

    ``idle`` marks samples the caller knows carry no primary signal (the
    sensing phase). Decisions are binding only after 2N idle samples.
    """
    if not np.isfinite(z):
        raise InputError(f"non-finite sample {z!r}")
    p = float(z.real * z.real + z.imag * z.imag) if isinstance(z, complex) else float(abs(z)) ** 2
    N = state.N
    leaving = float(state.fifo[state.head])
    crossing = float(state.fifo[(state.head + N) % (2 * N)])
    state.fifo[state.head] = p
    state.head = (state.head + 1) % (2 * N)
    state.V = max(state.V + crossing - leaving, 0.0)
    state.U = max(state.U + p - crossing, 0.0)
    state.samples_seen += 1
    if idle:
        state.idle_samples += 1
        if state.idle_samples >= 2 * N:
            state.calibrated = True
    if state.samples_seen < 2 * N:
        return None
    x = ratio_of(state.U, state.V)
    return Decision(state.samples_seen - 2 * N, x, bool(x > state.gamma), state.calibrated)


def energy_ratios(samples, N: int, step: int = 1) -> np.ndarray:
    """Vectorized X_k for k = 0, step, 2*step, ... using direct window sums.

    X_k compares samples [k+N, k+2N) against [k, k+N); the index matches
    :attr:`Decision.k` from :func:`ingest`.
    """
    N = _check_n(N)
    p = np.abs(np.asarray(samples)) ** 2
    if p.shape[-1] < 2 * N:
        raise InsufficientCalibrationError(f"need at least {2 * N} samples, got {p.shape[-1]}")
    c = np.concatenate([np.zeros(p.shape[:-1] + (1,)), np.cumsum(p, axis=-1)], axis=-1)
    k = np.arange(0, p.shape[-1] - 2 * N + 1, step)
    v = c[..., k + N] - c[..., k]
    u = c[..., k + 2 * N] - c[..., k + N]
    with np.errstate(divide="ignore", invalid="ignore"):
        x = u / v
    x = np.where(v > 0, x, np.where(u > 0, np.inf, 1.0))
    return x


def effective_window(N: int, n_rx: int) -> int:
    """Pooling n_rx antennas multiplies the samples per window by n_rx."""
    return _check_n(N) * int(n_rx)


def run_monitor(stream, N: int, p_fa: float, idle_samples: Optional[int] = None
                ) -> Tuple[List[Decision], Optional[int]]:
    """Run the detector over a whole reserved-tone stream.

    ``N`` is the per-antenna window; a stream pooled over ``n_rx`` antennas is
    scored with windows of ``N * n_rx`` samples. The first ``idle_samples``
    (default: one full pair of windows) are treated as the calibration phase.
    Returns every decision and the index of the first binding detection.
    """
    samples = np.asarray(getattr(stream, "samples", stream))
    n_rx = int(getattr(stream, "n_rx", 1))
    n_eff = effective_window(N, n_rx)
    if samples.size < 2 * n_eff:
        raise InsufficientCalibrationError(
            f"stream of {samples.size} samples cannot fill two windows of {n_eff}")
    if not np.all(np.isfinite(samples)):
        raise InputError("stream contains non-finite samples")
    state = DetectorState.from_pfa(n_eff, p_fa)
    n_idle = 2 * n_eff if idle_samples is None else int(idle_samples)
    decisions: List[Decision] = []
    first = None
    for i, z in enumerate(samples.tolist()):
        d = ingest(state, z, idle=i < n_idle)
        if d is None:
            continue
        decisions.append(d)
        if first is None and d.binding and d.pu_detected:
            first = d.k
    return decisions, first


def fuse_majority(votes: Sequence) -> bool:
    """Majority of monitoring votes; an even split counts as a detection."""
    votes = list(votes)
    if not votes:
        raise InputError("majority fusion needs at least one vote")
    hits = sum(bool(v) for v in votes)
    return 2 * hits >= len(votes)


TRACE_COLUMNS = ("k", "x_value", "gamma", "detected", "calibrated")


def write_trace(decisions: Iterable[Decision], gamma: float, path) -> None:
    """Decision trace as CSV rows (k, X_k, gamma, detected, calibrated)."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for d in decisions:
                w.writerow([d.k, f"{d.x_value:.9g}", f"{gamma:.9g}", int(d.pu_detected), int(d.binding)])
    except OSError as exc:
        raise OSError(f"cannot write decision trace to {path}: {exc}") from exc
