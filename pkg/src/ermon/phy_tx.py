"""Secondary-user OFDM transmitter and primary-user waveform generator.

Sub-carriers are addressed by a *centered* index ``c`` in ``[0, N_s)``: ``c =
N_s // 2`` is DC and ``k = c - N_s // 2`` is the signed frequency index used
in the synthesis sum. The used band is the centered block left after removing
``n_guard_total // 2`` carriers at each edge.

Frame layout (time domain, every length multiplied by ``oversample``)::

    [ P*N_g guard | body | body | ... ]   P preamble bodies, one shared guard
    [ N_g CP | body ]                     each data symbol

The preamble bodies are identical and contiguous, so the preamble occupies
exactly ``P`` symbol slots and the data-symbol grid is unchanged.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .numerics import IqBuffer, SeedLike, SizeError, make_rng


class ConfigError(ValueError):
    """Frame configuration cannot be realized."""


class Role(enum.IntEnum):
    GUARD = 0
    DATA = 1
    PILOT = 2
    RESERVED = 3
    DISABLED = 4
    PREAMBLE = 5
    NULL = 6


MAPPERS = ("BPSK", "QPSK", "16PSK", "4QAM", "16QAM")
PREAMBLE_STEP = 4
PREAMBLE_AMPLITUDE = 2.0


def constellation(mapper: str) -> np.ndarray:
    """Unit average-energy constellation points."""
    mapper = mapper.upper()
    if mapper == "BPSK":
        return np.array([1.0, -1.0], dtype=complex)
    if mapper in ("QPSK", "4QAM"):
        return np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2.0)
    if mapper == "16PSK":
        return np.exp(2j * np.pi * np.arange(16) / 16)
    if mapper == "16QAM":
        lv = np.array([-3.0, -1.0, 1.0, 3.0])
        pts = (lv[:, None] + 1j * lv[None, :]).ravel()
        return pts / math.sqrt(10.0)
    raise ConfigError(f"unknown mapper {mapper!r}; choose from {MAPPERS}")


def random_symbols(mapper: str, n: int, seed: SeedLike) -> np.ndarray:
    pts = constellation(mapper)
    return pts[make_rng(seed).integers(0, pts.size, size=n)]


@dataclass(frozen=True)
class FrameConfig:
    n_subcarriers: int = 1024
    n_guard_total: int = 224
    n_pilots: int = 32
    n_reserved: int = 4
    cp_len: int = 64
    sample_rate: float = 16e6
    delta_r: int = 2
    n_preambles: int = 2
    n_data_symbols: int = 256
    mapper: str = "16PSK"
    disabled_tones: frozenset = field(default_factory=frozenset)
    oversample: int = 1

    def __post_init__(self):
        object.__setattr__(self, "disabled_tones", frozenset(int(t) for t in self.disabled_tones))
        object.__setattr__(self, "mapper", self.mapper.upper())
        ns = self.n_subcarriers
        if ns < 8 or ns & (ns - 1):
            raise ConfigError(f"n_subcarriers must be a power of two, got {ns}")
        if not 0 <= self.cp_len < ns:
            raise ConfigError("cyclic prefix must be shorter than the symbol")
        if self.n_guard_total < 0 or self.n_guard_total % 2:
            raise ConfigError("n_guard_total must be even (split between band edges)")
        if self.n_reserved + self.n_pilots + self.n_guard_total >= ns:
            raise ConfigError("pilots + reserved + guards leave no data carriers")
        if self.delta_r < 1:
            raise ConfigError("delta_r must be >= 1")
        if self.n_preambles < 1 or self.n_data_symbols < 0:
            raise ConfigError("need at least one preamble and a non-negative data symbol count")
        if self.oversample < 1 or self.oversample & (self.oversample - 1):
            raise ConfigError("oversample must be a power of two")
        if self.mapper not in MAPPERS:
            raise ConfigError(f"unknown mapper {self.mapper!r}")
        used = set(self.used_indices.tolist())
        bad = [t for t in self.disabled_tones if t not in used]
        if bad:
            raise ConfigError(f"disabled tones outside the used band: {sorted(bad)}")
        if self.disabled_tones & set(self.pilot_indices.tolist()):
            raise ConfigError("disabled tones collide with pilot carriers")
        if self.data_carriers_per_symbol < 1:
            raise ConfigError("disabled tones leave no data carriers")

    # -- numerology --
    @property
    def used_start(self) -> int:
        return self.n_guard_total // 2

    @property
    def used_width(self) -> int:
        return self.n_subcarriers - self.n_guard_total

    @property
    def used_indices(self) -> np.ndarray:
        return np.arange(self.used_start, self.used_start + self.used_width)

    @property
    def subcarrier_spacing(self) -> float:
        return self.sample_rate / self.n_subcarriers

    @property
    def fft_len(self) -> int:
        return self.n_subcarriers * self.oversample

    @property
    def cp_samples(self) -> int:
        return self.cp_len * self.oversample

    @property
    def symbol_len(self) -> int:
        return self.fft_len + self.cp_samples

    @property
    def n_symbols(self) -> int:
        return self.n_preambles + self.n_data_symbols

    @property
    def frame_len(self) -> int:
        return self.n_symbols * self.symbol_len

    @property
    def buffer_rate(self) -> float:
        return self.sample_rate * self.oversample

    @property
    def symbol_duration(self) -> float:
        return (self.n_subcarriers + self.cp_len) / self.sample_rate

    @property
    def pilot_indices(self) -> np.ndarray:
        j = np.arange(self.n_pilots)
        return self.used_start + ((2 * j + 1) * self.used_width) // (2 * self.n_pilots)

    @property
    def preamble_indices(self) -> np.ndarray:
        idx = self.used_indices[::PREAMBLE_STEP]
        return np.array([c for c in idx if c not in self.disabled_tones], dtype=int)

    @property
    def data_carriers_per_symbol(self) -> int:
        return self.used_width - self.n_pilots - self.n_reserved - len(self.disabled_tones)

    @property
    def reserved_overhead(self) -> float:
        return self.n_reserved / self.used_width

    def signed_index(self, c):
        return np.asarray(c) - self.n_subcarriers // 2

    def symbol_start(self, m: int) -> int:
        """First sample of the body of symbol ``m`` (preamble bodies included)."""
        if m < self.n_preambles:
            return self.n_preambles * self.cp_samples + m * self.fft_len
        return m * self.symbol_len + self.cp_samples

    def config_hash(self) -> str:
        d = asdict(self)
        d["disabled_tones"] = sorted(d["disabled_tones"])
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disabled_tones"] = sorted(d["disabled_tones"])
        return d


@dataclass(frozen=True)
class ToneSchedule:
    symbol_index: int
    reserved_indices: tuple


@dataclass
class FrequencyGrid:
    """Per-symbol carrier values (n_symbols x N_s, centered order) and roles."""

    values: np.ndarray
    roles: np.ndarray

    @property
    def n_symbols(self) -> int:
        return self.values.shape[0]


# -- reserved tone scheduling ------------------------------------------------

@lru_cache(maxsize=64)
def _schedule_table(cfg: FrameConfig) -> np.ndarray:
    rows = [_schedule_one(cfg, m) for m in range(cfg.n_preambles, cfg.n_symbols)]
    out = np.array(rows, dtype=np.int64).reshape(len(rows), cfg.n_reserved)
    out.setflags(write=False)
    return out


def _schedule_one(cfg: FrameConfig, m: int) -> list:
    width = cfg.used_width
    blocked = set(cfg.pilot_indices.tolist()) | cfg.disabled_tones
    shift = ((m - cfg.n_preambles) * cfg.delta_r) % width
    chosen: list[int] = []
    for i in range(cfg.n_reserved):
        off = (i * width // cfg.n_reserved + shift) % width
        for _ in range(width):
            c = cfg.used_start + off
            if c not in blocked and c not in chosen:
                break
            off = (off + 1) % width
        else:
            raise ConfigError(f"no free sub-carrier for reserved tone {i} of symbol {m}")
        chosen.append(c)
    return chosen


def schedule_reserved_tones(cfg: FrameConfig, m: int) -> ToneSchedule:
    """Reserved (null) tones of data symbol ``m``.

    Base pattern: ``n_reserved`` evenly spaced offsets across the used band,
    advanced by ``delta_r`` every data symbol and wrapped inside the band.
    A tone landing on a pilot or disabled carrier steps forward until free.
    """
    if m < cfg.n_preambles:
        raise ConfigError(f"symbol {m} is a preamble; preambles carry no reserved tones")
    if m < cfg.n_symbols:
        return ToneSchedule(m, tuple(int(c) for c in _schedule_table(cfg)[m - cfg.n_preambles]))
    return ToneSchedule(m, tuple(_schedule_one(cfg, m)))


def reserved_index_table(cfg: FrameConfig) -> np.ndarray:
    """(n_data_symbols x n_reserved) array of scheduled centered indices."""
    return _schedule_table(cfg)


# -- frame building ----------------------------------------------------------

def pilot_values(cfg: FrameConfig, pilot_seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng([int(pilot_seed), 1])
    return rng.choice([-1.0, 1.0], size=cfg.n_pilots).astype(complex)


def preamble_values(cfg: FrameConfig, pilot_seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng([int(pilot_seed), 2])
    n = cfg.preamble_indices.size
    return PREAMBLE_AMPLITUDE * rng.choice([-1.0, 1.0], size=n).astype(complex)


def data_capacity(cfg: FrameConfig) -> int:
    return cfg.n_data_symbols * cfg.data_carriers_per_symbol


def build_frame(cfg: FrameConfig, payload_symbols: Sequence[complex], pilot_seed: int = 0) -> FrequencyGrid:
    """Lay out preambles, pilots, payload and null tones on the time-frequency grid.

    Payload fills data carriers symbol by symbol in increasing carrier order;
    a short payload leaves the remaining data carriers at zero.
    """
    payload = np.asarray(payload_symbols, dtype=complex).ravel()
    cap = data_capacity(cfg)
    if payload.size > cap:
        raise SizeError(f"payload of {payload.size} symbols exceeds frame capacity {cap}")
    ns = cfg.n_subcarriers
    values = np.zeros((cfg.n_symbols, ns), dtype=complex)
    roles = np.full((cfg.n_symbols, ns), Role.GUARD, dtype=np.int8)

    used = cfg.used_indices
    pre_idx = cfg.preamble_indices
    pre_val = preamble_values(cfg, pilot_seed)
    for m in range(cfg.n_preambles):
        roles[m, used] = Role.NULL
        roles[m, list(cfg.disabled_tones)] = Role.DISABLED
        roles[m, pre_idx] = Role.PREAMBLE
        values[m, pre_idx] = pre_val

    pil_idx = cfg.pilot_indices
    pil_val = pilot_values(cfg, pilot_seed)
    disabled = list(cfg.disabled_tones)
    table = reserved_index_table(cfg)
    pos = 0
    for i, m in enumerate(range(cfg.n_preambles, cfg.n_symbols)):
        roles[m, used] = Role.DATA
        roles[m, disabled] = Role.DISABLED
        roles[m, pil_idx] = Role.PILOT
        roles[m, table[i]] = Role.RESERVED
        values[m, pil_idx] = pil_val
        data_idx = np.flatnonzero(roles[m] == Role.DATA)
        take = min(data_idx.size, payload.size - pos)
        if take > 0:
            values[m, data_idx[:take]] = payload[pos:pos + take]
            pos += take
    return FrequencyGrid(values, roles)


def random_frame(cfg: FrameConfig, seed: SeedLike, pilot_seed: int = 0) -> FrequencyGrid:
    """Frame carrying a full random uncoded payload."""
    return build_frame(cfg, random_symbols(cfg.mapper, data_capacity(cfg), seed), pilot_seed)


# -- waveform synthesis ------------------------------------------------------

def _bodies(values: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Unitary IDFT of each row, embedded in the centre of an oversampled grid."""
    ns, L = cfg.n_subcarriers, cfg.fft_len
    big = np.zeros((values.shape[0], L), dtype=complex)
    off = (L - ns) // 2
    big[:, off:off + ns] = values
    return np.fft.ifft(np.fft.ifftshift(big, axes=1), axis=1, norm="ortho")


def synthesize(grid: FrequencyGrid, cfg: FrameConfig) -> IqBuffer:
    if grid.values.shape != (cfg.n_symbols, cfg.n_subcarriers):
        raise SizeError(f"grid shape {grid.values.shape} does not match config "
                        f"({cfg.n_symbols}, {cfg.n_subcarriers})")
    g, P = cfg.cp_samples, cfg.n_preambles
    bodies = _bodies(grid.values, cfg)

    pre = bodies[:P].ravel()
    pre_guard = pre[pre.size - P * g:] if P * g else pre[:0]
    data = bodies[P:]
    data = np.concatenate([data[:, data.shape[1] - g:], data], axis=1).ravel()
    samples = np.concatenate([pre_guard, pre, data])

    data_vals = grid.values[P:]
    active = np.count_nonzero(data_vals, axis=1)
    meta = {
        "oversample": cfg.oversample,
        "fft_len": cfg.fft_len,
        "active_carriers": float(active.mean()) if active.size else 0.0,
        # preamble-only frames fall back to the nominal unit carrier energy
        "carrier_power": float(np.mean(np.abs(data_vals[data_vals != 0]) ** 2)) if active.sum() else 1.0,
    }
    return IqBuffer(samples, cfg.buffer_rate, meta)


def known_preamble(cfg: FrameConfig, pilot_seed: int = 0) -> IqBuffer:
    """Transmitted time-domain preamble block (guard plus bodies) of a frame."""
    head = replace(cfg, n_data_symbols=0)
    return synthesize(build_frame(head, [], pilot_seed), head)


def generate_primary(cfg: FrameConfig, power_scale: float, onset_sample: int, seed: SeedLike,
                     timing_offset: int = 0, n_samples: Optional[int] = None) -> IqBuffer:
    """Primary-user OFDM waveform, silent before ``onset_sample``.

    Same numerology as the secondary frame, every used carrier data-bearing,
    per-carrier energy ``power_scale`` (constellations have unit energy).
    ``timing_offset`` delays the primary symbol grid against the secondary
    one by that many samples.
    """
    n = cfg.frame_len if n_samples is None else int(n_samples)
    if not 0 <= onset_sample <= n:
        raise ValueError(f"onset sample {onset_sample} outside [0, {n}]")
    if power_scale < 0:
        raise ValueError("power_scale must be non-negative")
    meta = {"oversample": cfg.oversample, "fft_len": cfg.fft_len,
            "active_carriers": float(cfg.used_width), "carrier_power": float(power_scale)}
    if power_scale == 0:
        return IqBuffer(np.zeros(n, dtype=complex), cfg.buffer_rate, meta)
    rng = make_rng(seed)
    timing_offset = int(timing_offset) % cfg.symbol_len
    n_sym = (n + timing_offset) // cfg.symbol_len + 2
    vals = np.zeros((n_sym, cfg.n_subcarriers), dtype=complex)
    vals[:, cfg.used_indices] = random_symbols(cfg.mapper, n_sym * cfg.used_width, rng).reshape(n_sym, -1)
    bodies = _bodies(vals, cfg)
    g = cfg.cp_samples
    wave = np.concatenate([bodies[:, bodies.shape[1] - g:], bodies], axis=1).ravel()
    # primary symbol boundary lands ``timing_offset`` samples after the SU one
    start = cfg.symbol_len - timing_offset if timing_offset else 0
    wave = math.sqrt(power_scale) * wave[start:start + n]
    wave[:onset_sample] = 0.0
    return IqBuffer(wave, cfg.buffer_rate, meta)


# -- IQ export ---------------------------------------------------------------

def write_iq(buf: IqBuffer, path, cfg: Optional[FrameConfig] = None) -> Path:
    """Interleaved little-endian float32 I/Q plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    inter = np.empty(2 * len(buf), dtype="<f4")
    inter[0::2] = buf.samples.real
    inter[1::2] = buf.samples.imag
    try:
        inter.tofile(path)
        side = {
            "format": "cf32_le",
            "sample_rate": buf.sample_rate,
            "n_samples": len(buf),
            "config_hash": cfg.config_hash() if cfg is not None else None,
            "config": cfg.to_dict() if cfg is not None else None,
        }
        Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
    except OSError as exc:
        raise OSError(f"cannot write IQ file {path}: {exc}") from exc
    return path


def read_iq(path) -> IqBuffer:
    path = Path(path)
    side = json.loads(Path(str(path) + ".json").read_text())
    raw = np.fromfile(path, dtype="<f4")
    return IqBuffer(raw[0::2].astype(float) + 1j * raw[1::2].astype(float), side["sample_rate"],
                    {"config_hash": side.get("config_hash")})
