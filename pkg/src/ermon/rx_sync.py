"""Secondary receiver front end.

Frame timing is taken as known (the frame starts at sample 0). The chain is::

    fractional CFO (preamble autocorrelation) -> integer CFO (search over L)
    -> compensate -> DFT of preamble bodies -> LS fit of SFO and residual CFO
    -> resample by 1/(1+delta) -> compensate residual CFO
    -> per-symbol window/fold -> DFT -> reserved-tone extraction

CFO is normalized to the sub-carrier spacing throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .numerics import IqBuffer, SizeError, fractional_resample
from .phy_tx import ConfigError, FrameConfig, known_preamble, reserved_index_table


class Window(str, enum.Enum):
    NONE = "NONE"
    HANNING = "HANNING"


class DegenerateGeometryError(ValueError):
    """Pilot layout cannot support the least-squares fit."""


@dataclass
class SyncEstimate:
    eps_frac: float = 0.0
    eps_int: int = 0
    delta_hat: float = 0.0
    eps_resid: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def eps_coarse(self) -> float:
        return self.eps_frac + self.eps_int

    @property
    def eps_total(self) -> float:
        return self.eps_frac + self.eps_int + self.eps_resid


@dataclass
class ReservedToneStream:
    """Reserved-tone samples ordered symbol-major, then tone, then antenna."""

    samples: np.ndarray
    n_rx: int = 1
    n_reserved: int = 1

    def __len__(self) -> int:
        return self.samples.size

    @property
    def per_symbol(self) -> int:
        return self.n_rx * self.n_reserved


# -- CFO ---------------------------------------------------------------------

def _preamble_bodies(buf: IqBuffer, cfg: FrameConfig) -> np.ndarray:
    start = cfg.symbol_start(0)
    need = start + cfg.n_preambles * cfg.fft_len
    if len(buf) < need or cfg.n_preambles < 2:
        raise SizeError(f"need two preamble bodies ({need} samples), got {len(buf)} samples")
    return buf.samples[start:need].reshape(cfg.n_preambles, cfg.fft_len)


def estimate_cfo_fractional(preamble_rx: IqBuffer, cfg: FrameConfig) -> float:
    """Fractional CFO from the phase advance between repeated preamble bodies.

    The bodies are one DFT length apart, so a CFO of eps sub-carriers rotates
    the second by 2*pi*eps; the estimate lies in (-0.5, 0.5].
    """
    bodies = _preamble_bodies(preamble_rx, cfg)
    acc = np.sum(np.conj(bodies[:-1]) * bodies[1:])
    return float(np.angle(acc) / (2 * np.pi))


def integer_cfo_candidates(cfg: FrameConfig, cfo_max_hz: float) -> np.ndarray:
    if cfo_max_hz < 0:
        raise ConfigError("cfo_max_hz must be non-negative")
    m_max = int(math.floor(cfo_max_hz / cfg.subcarrier_spacing))
    return np.arange(-m_max, m_max + 1)


def estimate_cfo_integer(compensated: IqBuffer, known: IqBuffer, cfg: FrameConfig,
                         cfo_max_hz: float, method: str = "coherent") -> int:
    """Integer CFO from a search over the candidate set.

    ``"coherent"`` maximizes the frequency-shifted time-domain cross-correlation
    with the known preamble. Its peak collapses when the channel's first tap
    fades, so ``"differential"`` instead correlates products of neighbouring
    preamble carriers, which a slowly varying channel response leaves intact.
    Ties go to the candidate of smaller magnitude.
    """
    cands = integer_cfo_candidates(cfg, cfo_max_hz)
    if cands.size == 0:
        raise ConfigError("empty integer CFO search set")
    y = _preamble_bodies(compensated, cfg)[0]
    t = _preamble_bodies(known, cfg)[0]
    L = cfg.fft_len
    if method == "coherent":
        # |sum y t* exp(-j 2 pi m n / L)| for every m at once
        mag = np.abs(np.fft.fft(y * np.conj(t)))[cands % L]
    elif method == "differential":
        Y, P = np.fft.fft(y), np.fft.fft(t)
        bins = cfg.signed_index(cfg.preamble_indices) % L
        ref = np.conj(P[bins[:-1]]) * P[bins[1:]]
        idx = (bins[:, None] + cands[None, :]) % L
        prod = Y[idx[:-1]] * np.conj(Y[idx[1:]])
        mag = np.abs(np.sum(prod * ref[:, None], axis=0))
    else:
        raise ConfigError(f"unknown integer CFO method {method!r}")
    order = np.argsort(np.abs(cands), kind="stable")
    best = order[0]
    for i in order[1:]:
        if mag[i] > mag[best]:
            best = i
    return int(cands[best])


def compensate_cfo(buf: IqBuffer, eps_total: float, cfg: FrameConfig) -> IqBuffer:
    """Undo a CFO of ``eps_total`` sub-carrier spacings."""
    if eps_total == 0:
        return buf.replace(buf.samples.copy())
    rate = eps_total * cfg.subcarrier_spacing / buf.sample_rate
    n = np.arange(len(buf))
    return buf.replace(buf.samples * np.exp(-2j * np.pi * rate * n))


# -- windowing ---------------------------------------------------------------

def fold_window(cfg: FrameConfig) -> np.ndarray:
    """Raised-cosine weights over CP + body; each roll-off spans the CP.

    w[t] + w[t + fft_len] = 1 across the overlap, so folding leaves any
    signal that is periodic over the body untouched.
    """
    g, L = cfg.cp_samples, cfg.fft_len
    w = np.ones(g + L)
    if g:
        t = np.arange(g)
        ramp = 0.5 * (1 - np.cos(np.pi * (t + 0.5) / g))
        w[:g] = ramp
        w[-g:] = ramp[::-1]
    return w


def _fold(ext: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Window and fold rows of CP+body samples back to ``fft_len`` samples."""
    g, L = cfg.cp_samples, cfg.fft_len
    half = g // 2
    w = fold_window(cfg)
    x = ext * w
    # virtual body starts half a CP early; the overhangs wrap around
    body = x[..., half:half + L].copy()
    body[..., L - half:] += x[..., :half]
    body[..., :half] += x[..., half + L:]
    return np.roll(body, -half, axis=-1)


def window_fold(symbol_td: IqBuffer, cfg: FrameConfig, window=Window.NONE) -> IqBuffer:
    """One symbol's CP + body reduced to ``fft_len`` samples ready for the DFT."""
    window = Window(window)
    g, L = cfg.cp_samples, cfg.fft_len
    if len(symbol_td) < g + L:
        raise SizeError(f"need {g + L} samples (CP + body), got {len(symbol_td)}")
    ext = symbol_td.samples[:g + L]
    if window is Window.NONE or g < 2:
        return symbol_td.replace(ext[g:].copy())
    return symbol_td.replace(_fold(ext, cfg))


# -- DFT / grid --------------------------------------------------------------

def _to_carriers(td: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    spec = np.fft.fftshift(np.fft.fft(td, axis=-1, norm="ortho"), axes=-1)
    off = (cfg.fft_len - cfg.n_subcarriers) // 2
    return spec[..., off:off + cfg.n_subcarriers]


def demodulate(buf: IqBuffer, cfg: FrameConfig, window=Window.NONE) -> np.ndarray:
    """Frequency grid (n_symbols x N_s, centered order) of a time-aligned frame."""
    window = Window(window)
    if len(buf) < cfg.frame_len:
        raise SizeError(f"frame needs {cfg.frame_len} samples, got {len(buf)}")
    P, g, L = cfg.n_preambles, cfg.cp_samples, cfg.fft_len
    pre = buf.samples[P * g:P * (g + L)].reshape(P, L)
    ext = buf.samples[P * (g + L):cfg.frame_len].reshape(cfg.n_data_symbols, g + L)
    if window is Window.HANNING and g >= 2:
        data_td = _fold(ext, cfg)
    else:
        data_td = ext[:, g:]
    return np.vstack([_to_carriers(pre, cfg), _to_carriers(data_td, cfg)])


# -- SFO / residual CFO ------------------------------------------------------

def pilot_phase_diffs(pre_grid: np.ndarray, cfg: FrameConfig) -> tuple:
    """Averaged phase advance of each preamble carrier between consecutive bodies.

    Returns ``(y, x)``: phases in radians and signed carrier indices.
    """
    idx = cfg.preamble_indices
    vals = pre_grid[:, idx]
    prod = np.sum(vals[1:] * np.conj(vals[:-1]), axis=0)
    return np.angle(prod), cfg.signed_index(idx).astype(float)


def estimate_cfo_sfo_ls(y, x, cfg: FrameConfig, spacing: Optional[float] = None) -> tuple:
    """Least-squares (delta_hat, eps_hat) from pilot phase advances.

    ``y_j = 2*pi*spacing/N_s * (delta*x_j + eps)`` where ``spacing`` is the
    distance between the two observations in nominal samples (default one
    CP'd symbol, N_s + N_g).
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or x.size < 2:
        raise DegenerateGeometryError("need at least two pilots with matching phase samples")
    if np.ptp(x) == 0:
        raise DegenerateGeometryError("all pilot indices are equal; slope is unidentifiable")
    if spacing is None:
        spacing = cfg.n_subcarriers + cfg.cp_len
    X = np.column_stack([x, np.ones_like(x)])
    sol = np.linalg.solve(X.T @ X, X.T @ y)
    scale = cfg.n_subcarriers / (2 * np.pi * spacing)
    return float(scale * sol[0]), float(scale * sol[1])


def synchronize(rx: IqBuffer, cfg: FrameConfig, cfo_max_hz: float = 400e3,
                pilot_seed: int = 0, estimate_sfo: bool = True,
                known: Optional[IqBuffer] = None, int_method: str = "coherent") -> SyncEstimate:
    """Estimate CFO (fractional, integer, residual) and SFO from the preamble."""
    known = known_preamble(cfg, pilot_seed) if known is None else known
    eps_f = estimate_cfo_fractional(rx, cfg)
    y1 = compensate_cfo(rx, eps_f, cfg)
    eps_i = estimate_cfo_integer(y1, known, cfg, cfo_max_hz, int_method)
    est = SyncEstimate(eps_frac=eps_f, eps_int=eps_i)
    if estimate_sfo:
        y2 = compensate_cfo(rx, est.eps_coarse, cfg)
        pre = _to_carriers(_preamble_bodies(y2, cfg), cfg)
        phases, x = pilot_phase_diffs(pre, cfg)
        delta, eps_r = estimate_cfo_sfo_ls(phases, x, cfg, spacing=cfg.n_subcarriers)
        est.delta_hat, est.eps_resid = delta, eps_r
        est.diagnostics["ls_rms_phase"] = float(np.sqrt(np.mean(
            (phases - 2 * np.pi * (delta * x + eps_r)) ** 2)))
    return est


def apply_sync(rx: IqBuffer, est: SyncEstimate, cfg: FrameConfig) -> IqBuffer:
    """Compensate coarse CFO, resample out the SFO, then remove residual CFO."""
    y = compensate_cfo(rx, est.eps_coarse, cfg)
    if est.delta_hat:
        y = fractional_resample(y, 1.0 / (1.0 + est.delta_hat))
    if est.eps_resid:
        y = compensate_cfo(y, est.eps_resid, cfg)
    return y


# -- reserved tones ----------------------------------------------------------

def extract_reserved_tones(grids: Sequence[np.ndarray], cfg: FrameConfig) -> ReservedToneStream:
    grids = [np.asarray(g) for g in grids]
    if not grids:
        raise ConfigError("no antenna grids given")
    for g in grids:
        if g.shape != (cfg.n_symbols, cfg.n_subcarriers):
            raise ConfigError(f"grid shape {g.shape} does not match the frame schedule "
                              f"({cfg.n_symbols}, {cfg.n_subcarriers})")
    table = reserved_index_table(cfg)
    rows = np.arange(cfg.n_preambles, cfg.n_symbols)[:, None]
    stacked = np.stack([g[rows, table] for g in grids], axis=-1)
    return ReservedToneStream(stacked.ravel(), n_rx=len(grids), n_reserved=cfg.n_reserved)


# -- SNR degradation predictions ---------------------------------------------

def snrd_cfo(eps_r: float, snr_linear: float) -> float:
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    return 10.0 / (3.0 * math.log(10.0)) * (math.pi * eps_r) ** 2 * snr_linear


def snrd_sfo(delta_r: float, k: float, snr_linear: float) -> float:
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    return 10.0 * math.log10(1.0 + (math.pi * delta_r * k) ** 2 * snr_linear / 3.0)


# -- full receive path -------------------------------------------------------

def receive(buffers: Sequence[IqBuffer], cfg: FrameConfig, window=Window.NONE,
            estimates: Optional[Sequence[Optional[SyncEstimate]]] = None) -> ReservedToneStream:
    """Reserved-tone stream from already-synchronized (or perfectly timed) buffers.

    When ``estimates`` is given, each antenna's buffer is first corrected with
    :func:`apply_sync` using its estimate.
    """
    grids = []
    for i, buf in enumerate(buffers):
        if estimates is not None and estimates[i] is not None:
            buf = apply_sync(buf, estimates[i], cfg)
        grids.append(demodulate(buf, cfg, window))
    return extract_reserved_tones(grids, cfg)
