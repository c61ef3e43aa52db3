"""Single-trial simulators shared by the experiment harness.

Two sources of reserved-tone samples are provided. The Gaussian source draws
the two windows directly from their model distributions. The OFDM source
runs the whole chain: secondary frame, primary waveform, channel, receiver
synchronization and demodulation.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .channel import ImpairmentSpec, Profile, draw_channel, scene_components, tone_responses
from .numerics import complex_gaussian_array, make_rng
from .phy_tx import FrameConfig, ConfigError, generate_primary, random_frame, random_symbols, synthesize
from .rx_sync import ReservedToneStream, SyncEstimate, Window, receive, synchronize


class SyncMode:
    PERFECT = "perfect"
    GENIE = "genie"
    ESTIMATED = "estimated"
    ALL = (PERFECT, GENIE, ESTIMATED)


def frame_for_window(cfg: FrameConfig, N: int, pre_windows: float = 1.0,
                     post_windows: float = 1.0) -> tuple:
    """Shortest frame holding ``pre_windows`` clean windows then the onset.

    A per-antenna window of ``N`` samples spans ceil(N / N_RT) symbols
    whatever the antenna count. Returns (config, onset data-symbol index).
    """
    per = math.ceil(N / cfg.n_reserved)
    if per * cfg.n_reserved != N:
        raise ConfigError(f"window {N} is not a whole number of symbols of {cfg.n_reserved} tones")
    onset = int(math.ceil(pre_windows * per))
    total = onset + int(math.ceil(post_windows * per))
    return dataclasses.replace(cfg, n_data_symbols=total), onset


def genie_estimate(cfg: FrameConfig, imp: ImpairmentSpec) -> SyncEstimate:
    """The estimate a perfect synchronizer would return for ``imp``."""
    delta = imp.sfo_ppm * 1e-6
    eps = imp.cfo_hz / cfg.subcarrier_spacing * (1.0 + delta)
    eps_int = int(round(eps))
    return SyncEstimate(eps_frac=eps - eps_int, eps_int=eps_int, delta_hat=delta)


@dataclass
class TrialStreams:
    """Reserved-tone streams of one OFDM trial, pooled over every antenna.

    ``base`` carries secondary signal, noise and NBI; ``primary`` is the
    primary contribution at SPR 0 dB. By linearity the received stream at
    any SPR is ``base + 10**(-spr/20) * primary``.
    """

    base: ReservedToneStream
    primary: ReservedToneStream
    onset_symbol: int
    estimates: List[Optional[SyncEstimate]] = field(default_factory=list)
    noise_var: float = 1.0

    def samples(self, spr_db: float, n_rx: Optional[int] = None, pu: bool = True) -> np.ndarray:
        z = self.base.samples
        if pu:
            z = z + 10 ** (-spr_db / 20) * self.primary.samples
        return select_antennas(z, self.base, n_rx)

    def onset_index(self, n_rx: Optional[int] = None) -> int:
        n = self.base.n_rx if n_rx is None else n_rx
        return self.onset_symbol * self.base.n_reserved * n


def select_antennas(z: np.ndarray, layout: ReservedToneStream, n_rx: Optional[int]) -> np.ndarray:
    if n_rx is None or n_rx == layout.n_rx:
        return z
    if n_rx > layout.n_rx:
        raise ConfigError(f"stream has {layout.n_rx} antennas, asked for {n_rx}")
    return z.reshape(-1, layout.n_rx)[:, :n_rx].ravel()


def ofdm_trial(cfg: FrameConfig, imp: ImpairmentSpec, seed, onset_symbol: int,
               sync: str = SyncMode.PERFECT, window=Window.NONE, profile=Profile.AWGN,
               pu_profile=None, random_pu_timing: bool = True,
               int_method: str = "coherent") -> TrialStreams:
    """Run one frame through the chain with the primary starting at data symbol ``onset_symbol``."""
    if sync not in SyncMode.ALL:
        raise ConfigError(f"unknown sync mode {sync!r}")
    if not 0 <= onset_symbol <= cfg.n_data_symbols:
        raise ConfigError("onset symbol outside the frame")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_frame, s_pu, s_timing, s_noise, *s_ch = ss.spawn(4 + 2 * imp.n_rx)
    pu_profile = profile if pu_profile is None else pu_profile

    su = synthesize(random_frame(cfg, s_frame), cfg)
    timing = int(make_rng(s_timing).integers(cfg.symbol_len)) if random_pu_timing else 0
    onset = (cfg.n_preambles + onset_symbol) * cfg.symbol_len
    pu = generate_primary(cfg, 1.0, onset, s_pu, timing_offset=timing, n_samples=len(su))
    channels = [(draw_channel(cfg, profile, s_ch[2 * i]), draw_channel(cfg, pu_profile, s_ch[2 * i + 1]))
                for i in range(imp.n_rx)]
    parts = scene_components(su, pu, imp, channels, s_noise, cfg)

    if sync == SyncMode.PERFECT:
        ests = [None] * imp.n_rx
    elif sync == SyncMode.GENIE:
        ests = [genie_estimate(cfg, imp)] * imp.n_rx
    else:
        ests = [synchronize(b, cfg, imp.cfo_max_hz, int_method=int_method) for b in parts.base]
    base = receive(parts.base, cfg, window, ests)
    prim = receive(parts.primary, cfg, window, ests)
    return TrialStreams(base, prim, onset_symbol, ests, parts.noise_var)


def gaussian_windows(n_trials: int, N: int, rng, ratio_u: float = 1.0, ratio_v: float = 1.0) -> tuple:
    """Energies (U, V) of independent circular Gaussian windows of ``N`` samples."""
    v = np.sum(np.abs(complex_gaussian_array(n_trials * N, ratio_v, rng)).reshape(n_trials, N) ** 2, axis=1)
    u = np.sum(np.abs(complex_gaussian_array(n_trials * N, ratio_u, rng)).reshape(n_trials, N) ** 2, axis=1)
    return u, v


def gaussian_detection_trials(n_trials: int, N: int, rng):
    """Noise-only V and U windows plus an independent unit primary window for U.

    Returns (v, u_noise, pu), each of shape (n_trials, N). The U energy at
    PNR p is sum |u_noise + sqrt(p) pu|^2, so one draw serves a whole sweep.
    """
    shape = (n_trials, N)
    v = complex_gaussian_array(n_trials * N, 1.0, rng).reshape(shape)
    u = complex_gaussian_array(n_trials * N, 1.0, rng).reshape(shape)
    p = complex_gaussian_array(n_trials * N, 1.0, rng).reshape(shape)
    return v, u, p


def faded_primary_samples(cfg: FrameConfig, n_trials: int, N: int, rng) -> np.ndarray:
    """Primary symbols through a fresh exponential-profile channel per sample.

    Tones follow the reserved-tone schedule cyclically; the transmitted
    symbols use the frame's mapper at unit energy.
    """
    from .phy_tx import reserved_index_table

    table = reserved_index_table(cfg).ravel()
    tones = np.resize(table, n_trials * N)
    h = tone_responses(cfg, tones, rng)
    x = random_symbols(cfg.mapper, n_trials * N, rng)
    return (h * x).reshape(n_trials, N)
