"""Impairments between the transmitters and the secondary receiver.

Stage order per receive antenna is fixed: fading, CFO, SFO, AWGN, NBI.
Every stage is linear in the signal, which :func:`scene_components` exploits
to return the secondary and primary contributions separately.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import oaconvolve

from .numerics import IqBuffer, SeedLike, complex_gaussian_array, fractional_resample, make_rng
from .phy_tx import FrameConfig


class Profile(str, enum.Enum):
    AWGN = "AWGN"
    EXP_PDP = "EXP_PDP"


@dataclass
class ChannelProfile:
    """FIR channel ``taps`` spaced ``tap_spacing`` buffer samples apart."""

    taps: np.ndarray
    sigma_H_sq: float
    tap_spacing: int = 1

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=complex)
        if not self.sigma_H_sq > 0:
            raise ValueError("sigma_H_sq must be positive")

    def frequency_response(self, n_fft: int) -> np.ndarray:
        """H(k) for FFT-ordered bins of an ``n_fft``-point DFT at the buffer rate."""
        h = np.zeros(n_fft, dtype=complex)
        h[np.arange(self.taps.size) * self.tap_spacing] = self.taps
        return np.fft.fft(h)


@dataclass(frozen=True)
class NbiSpec:
    """Narrow-band interferer: ``bandwidth_bins`` tones from ``center_bin`` upward.

    ``center_bin`` is a centered sub-carrier index and may be fractional
    (off-grid). ``power_db`` is the per-tone power relative to the secondary
    per-carrier power.
    """

    center_bin: float
    bandwidth_bins: int = 1
    power_db: float = 20.0


@dataclass(frozen=True)
class ImpairmentSpec:
    snr_db: float = 9.0
    cfo_hz: float = 0.0
    sfo_ppm: float = 0.0
    nbi: Optional[NbiSpec] = None
    spr_db: float = 0.0
    n_rx: int = 1
    cfo_max_hz: float = 400e3

    def __post_init__(self):
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")
        if abs(self.cfo_hz) > self.cfo_max_hz:
            raise ValueError(f"|cfo_hz| = {abs(self.cfo_hz)} exceeds cfo_max_hz = {self.cfo_max_hz}")

    @property
    def pnr_db(self) -> float:
        return self.snr_db - self.spr_db


def exp_pdp_sigma_sq(n_taps: int) -> float:
    """Analytic total tap power of the exponential profile, sum of exp(-2l)."""
    l = np.arange(n_taps)
    return float(np.sum(np.exp(-2.0 * l)))


def draw_channel(cfg: FrameConfig, profile, seed: SeedLike) -> ChannelProfile:
    profile = Profile(profile)
    if profile is Profile.AWGN:
        return ChannelProfile(np.ones(1), 1.0, cfg.oversample)
    rng = make_rng(seed)
    n = cfg.cp_len
    taps = complex_gaussian_array(n, 1.0, rng) * np.exp(-np.arange(n))
    return ChannelProfile(taps, exp_pdp_sigma_sq(n), cfg.oversample)


def tone_responses(cfg: FrameConfig, tones, seed: SeedLike) -> np.ndarray:
    """H(k) at centered carriers ``tones``, one fresh exponential-profile channel per entry.

    Each response is a sum of independent complex Gaussian taps, so it is
    itself CN(0, sigma_H^2) at every tone.
    """
    rng = make_rng(seed)
    tones = np.asarray(tones)
    n = cfg.cp_len
    l = np.arange(n)
    taps = complex_gaussian_array(tones.size * n, 1.0, rng).reshape(tones.size, n) * np.exp(-l)
    k = cfg.signed_index(tones.ravel())[:, None]
    return np.sum(taps * np.exp(-2j * np.pi * k * l / cfg.n_subcarriers), axis=1).reshape(tones.shape)


def apply_cfo(buf: IqBuffer, cfo_hz: float, f_s: Optional[float] = None) -> IqBuffer:
    if cfo_hz == 0:
        return buf.replace(buf.samples.copy())
    f_s = buf.sample_rate if f_s is None else f_s
    n = np.arange(len(buf))
    return buf.replace(buf.samples * np.exp(2j * np.pi * (cfo_hz / f_s) * n))


def apply_sfo(buf: IqBuffer, sfo_ppm: float) -> IqBuffer:
    """Receiver clock running at (1 + sfo_ppm * 1e-6) times the nominal period."""
    if abs(sfo_ppm) > 1000:
        raise ValueError(f"sfo_ppm {sfo_ppm} outside +/-1000")
    return fractional_resample(buf, 1.0 + sfo_ppm * 1e-6)


def apply_channel(buf: IqBuffer, ch: ChannelProfile) -> IqBuffer:
    """Linear convolution with the channel, truncated to the input length."""
    if ch.taps.size == 1 and ch.taps[0] == 1:
        return buf.replace(buf.samples.copy())
    h = np.zeros((ch.taps.size - 1) * ch.tap_spacing + 1, dtype=complex)
    h[::ch.tap_spacing] = ch.taps
    return buf.replace(oaconvolve(buf.samples, h)[:len(buf)])


def carrier_power(buf: IqBuffer) -> float:
    """Average energy per active carrier of a synthesized waveform."""
    if "carrier_power" in buf.meta:
        return float(buf.meta["carrier_power"])
    # Unknown structure: treat every DFT bin as active.
    return float(np.mean(np.abs(buf.samples) ** 2))


def noise_variance(su: IqBuffer, snr_db: float, h_ss: ChannelProfile) -> float:
    """Per-sample (equivalently per-bin) noise variance for the requested SNR.

    The reference is the expected received secondary power per active carrier,
    i.e. transmitted carrier power times the channel's total tap power.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return carrier_power(su) * h_ss.sigma_H_sq / 10 ** (snr_db / 10)


def nbi_waveform(n: int, spec: NbiSpec, cfg: FrameConfig, ref_power: float, rng) -> np.ndarray:
    L = cfg.fft_len
    t = np.arange(n)
    # bin power of a length-L unitary DFT is L * |A|^2
    amp = math.sqrt(ref_power * 10 ** (spec.power_db / 10) / L)
    out = np.zeros(n, dtype=complex)
    for i in range(spec.bandwidth_bins):
        f = (spec.center_bin + i - cfg.n_subcarriers // 2) / L
        out += amp * np.exp(1j * (2 * np.pi * f * t + rng.uniform(0, 2 * np.pi)))
    return out


@dataclass
class SceneParts:
    """Per-antenna secondary-plus-noise part and unit-SPR primary part."""

    base: list = field(default_factory=list)
    primary: list = field(default_factory=list)
    noise_var: float = 0.0
    pu_gain_0db: float = 0.0

    def combine(self, spr_db: float) -> list:
        g = 10 ** (-spr_db / 20)
        return [b.replace(b.samples + g * p.samples) for b, p in zip(self.base, self.primary)]


def _front_end(buf: IqBuffer, ch: ChannelProfile, cfo_hz: float, sfo_ppm: float) -> IqBuffer:
    y = apply_channel(buf, ch)
    if cfo_hz:
        y = apply_cfo(y, cfo_hz)
    if sfo_ppm:
        y = apply_sfo(y, sfo_ppm)
    return y


def scene_components(su: IqBuffer, pu: IqBuffer, spec: ImpairmentSpec,
                     channels: Sequence[tuple], seed: SeedLike,
                     cfg: Optional[FrameConfig] = None) -> SceneParts:
    """Impaired secondary (with noise/NBI) and primary streams, kept apart.

    The primary part is scaled as if SPR were 0 dB; scaling it by
    10**(-spr_db/20) and adding reproduces :func:`mix_scene` exactly.
    """
    if len(su) != len(pu):
        raise ValueError("secondary and primary buffers must have equal length")
    if len(channels) != spec.n_rx:
        raise ValueError(f"need {spec.n_rx} channel pairs, got {len(channels)}")
    rng = make_rng(seed)
    streams = rng.spawn(spec.n_rx)
    ref = carrier_power(su) * channels[0][0].sigma_H_sq
    sigma2 = noise_variance(su, spec.snr_db, channels[0][0])
    pu_cp = carrier_power(pu)
    g0 = math.sqrt(ref / pu_cp) if pu_cp > 0 else 0.0

    parts = SceneParts(noise_var=sigma2, pu_gain_0db=g0)
    for (h_ss, h_ps), r in zip(channels, streams):
        y_su = _front_end(su, h_ss, spec.cfo_hz, spec.sfo_ppm)
        y_pu = _front_end(pu, h_ps, spec.cfo_hz, spec.sfo_ppm)
        noise = complex_gaussian_array(len(su), sigma2, r) if sigma2 > 0 else 0.0
        base = y_su.samples + noise
        if spec.nbi is not None:
            if cfg is None:
                raise ValueError("NBI needs the frame config for its tone frequencies")
            base = base + nbi_waveform(len(su), spec.nbi, cfg, ref, r)
        parts.base.append(y_su.replace(base))
        parts.primary.append(y_pu.replace(g0 * y_pu.samples))
    return parts


def mix_scene(su: IqBuffer, pu: IqBuffer, spec: ImpairmentSpec, channels: Sequence[tuple],
              seed: SeedLike, cfg: Optional[FrameConfig] = None) -> list:
    """Received buffers, one per antenna: fading, CFO, SFO, AWGN, then NBI.

    Noise variance follows ``snr_db`` against the expected received secondary
    carrier power; the primary is scaled so PNR = SNR - SPR (dB).
    """
    return scene_components(su, pu, spec, channels, seed, cfg).combine(spec.spr_db)
