"""Monte Carlo experiment driver and CSV output.

Every scenario returns a :class:`Table` whose rows aggregate trials at one
swept point. Empirical probabilities come with their closed-form companions
and a 95 % normal-approximation half-width so tolerances can be judged.

Seeding: the trial (or chunk) with key ``k`` at scenario code ``c`` draws
from ``split_seed(spec.seed, c, *k)``. A trial therefore never depends on
how many others ran or in which order.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .channel import ImpairmentSpec, NbiSpec, Profile, exp_pdp_sigma_sq
from .detector import (cdf_x, energy_ratios, mean_x, pd_closed_form, pdf_x, second_moment_x,
                       threshold_from_pfa)
from .numerics import make_rng, split_seed
from .phy_tx import ConfigError, FrameConfig
from .rx_sync import Window, synchronize
from .simulate import (SyncMode, faded_primary_samples, frame_for_window, gaussian_detection_trials,
                       genie_estimate, ofdm_trial)


class Scenario(str, enum.Enum):
    PDF_CHECK = "PDF_CHECK"
    COND_PDF = "COND_PDF"
    PD_VS_SPR = "PD_VS_SPR"
    ROC = "ROC"
    SYNC_MSE = "SYNC_MSE"
    IMPAIRMENT_ABLATION = "IMPAIRMENT_ABLATION"
    FADING_MIMO = "FADING_MIMO"
    LATENCY = "LATENCY"


_CODES = {s: i for i, s in enumerate(Scenario)}
SOURCES = ("tone", "ofdm")
CHUNK = 2048

# Ablation cases: (oversample, sync mode, receive window, keep CFO/SFO).
CASES: Dict[str, Tuple[int, str, Window, bool]] = {
    "perfect": (1, SyncMode.PERFECT, Window.NONE, False),
    "leakage": (4, SyncMode.PERFECT, Window.NONE, False),
    "leakage_hanning": (4, SyncMode.PERFECT, Window.HANNING, False),
    "impaired_rect": (4, SyncMode.ESTIMATED, Window.NONE, True),
    "impaired": (4, SyncMode.ESTIMATED, Window.HANNING, True),
    "impaired_genie": (4, SyncMode.GENIE, Window.HANNING, True),
}


def _tuple(v) -> tuple:
    if isinstance(v, (list, tuple, np.ndarray)):
        return tuple(v)
    return (v,)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: scenario, sweep lists, trial count, configs and seed.

    ``source`` selects how reserved-tone samples are produced. ``"tone"``
    draws them from the per-tone model (Gaussian noise; Gaussian primary on
    AWGN, faded PSK with a fresh channel per sample on EXP_PDP). ``"ofdm"``
    runs the full transmitter, channel and receiver chain.
    """

    scenario: Scenario
    trials: int = 1000
    seed: int = 0
    frame: FrameConfig = field(default_factory=FrameConfig)
    impairments: ImpairmentSpec = field(default_factory=ImpairmentSpec)
    n_window: tuple = (32,)
    p_fa: tuple = (0.025,)
    spr_db: tuple = tuple(range(0, 17, 2))
    pnr_db: tuple = (-2.0, 0.0, 2.0, 4.0)
    snr_db: tuple = (0.0, 3.0, 6.0, 9.0, 12.0)
    ratio_db: tuple = (5.0,)
    n_rx: tuple = (1,)
    source: str = "tone"
    sync: str = SyncMode.PERFECT
    window: Window = Window.NONE
    channel: Profile = Profile.AWGN
    cases: tuple = ("perfect", "impaired")
    pu_present: bool = True
    random_pu_timing: bool = True
    cfo_int_method: str = "coherent"
    hist_bins: int = 40
    x_max: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "window", Window(self.window))
        object.__setattr__(self, "channel", Profile(self.channel))
        for name in ("n_window", "p_fa", "spr_db", "pnr_db", "snr_db", "ratio_db", "n_rx", "cases"):
            val = _tuple(getattr(self, name))
            if not val:
                raise ConfigError(f"sweep list {name!r} is empty")
            object.__setattr__(self, name, val)
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.sync not in SyncMode.ALL:
            raise ConfigError(f"sync must be one of {SyncMode.ALL}, got {self.sync!r}")
        if any(not 0 < p < 1 for p in self.p_fa):
            raise ConfigError("every p_fa must lie strictly between 0 and 1")
        if any(int(n) != n or n < 1 for n in self.n_window + self.n_rx):
            raise ConfigError("window sizes and antenna counts must be positive integers")
        unknown = [c for c in self.cases if c not in CASES]
        if unknown:
            raise ConfigError(f"unknown ablation case(s) {unknown}; known: {sorted(CASES)}")

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentSpec":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = sorted(set(d) - known)
        if extra:
            raise ConfigError(f"unknown experiment field(s): {extra}")
        if isinstance(d.get("frame"), dict):
            fr = dict(d["frame"])
            if "disabled_tones" in fr:
                fr["disabled_tones"] = frozenset(fr["disabled_tones"])
            d["frame"] = FrameConfig(**fr)
        if isinstance(d.get("impairments"), dict):
            imp = dict(d["impairments"])
            if isinstance(imp.get("nbi"), dict):
                imp["nbi"] = NbiSpec(**imp["nbi"])
            d["impairments"] = ImpairmentSpec(**imp)
        return cls(**d)

    def to_dict(self) -> Dict[str, Any]:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, FrameConfig):
                v = v.to_dict()
            elif isinstance(v, ImpairmentSpec):
                v = dataclasses.asdict(v)
            elif isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d


@dataclass
class TrialReport:
    seed: tuple
    scenario: Scenario
    swept: Dict[str, Any]
    decision: Optional[bool] = None
    latency_samples: Optional[int] = None
    latency_symbols: Optional[float] = None
    sync: Dict[str, float] = field(default_factory=dict)
    pu_present: bool = True


@dataclass
class Table:
    columns: Tuple[str, ...]
    rows: List[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> "Table":
        idx = [self.columns.index(k) for k in match]
        keep = [r for r in self.rows if all(r[i] == v for i, v in zip(idx, match.values()))]
        return Table(self.columns, keep)


def reference_config() -> Tuple[FrameConfig, ImpairmentSpec]:
    """Frame and impairment settings of the reference OFDM system."""
    return FrameConfig(), ImpairmentSpec(snr_db=9.0, cfo_hz=320e3, sfo_ppm=100.0, cfo_max_hz=400e3)


# -- helpers -----------------------------------------------------------------

def ci_halfwidth(p: float, n: int, z: float = 1.96) -> float:
    return z * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def spr_at_pd(spr_db: Sequence[float], p_d: Sequence[float], target: float = 0.9) -> float:
    """SPR where a P_D-versus-SPR curve crosses ``target`` (linear interpolation).

    P_D falls with SPR; the first downward crossing is used. Returns nan when
    the curve never crosses the target.
    """
    s = np.asarray(spr_db, dtype=float)
    p = np.asarray(p_d, dtype=float)
    order = np.argsort(s)
    s, p = s[order], p[order]
    for i in range(len(s) - 1):
        if p[i] >= target > p[i + 1]:
            return float(s[i] + (p[i] - target) / (p[i] - p[i + 1]) * (s[i + 1] - s[i]))
    return math.nan


def _chunks(trials: int):
    start = 0
    while start < trials:
        yield start // CHUNK, min(CHUNK, trials - start)
        start += CHUNK


def _sigma_h_sq(spec: ExperimentSpec) -> float:
    return exp_pdp_sigma_sq(spec.frame.cp_len) if spec.channel is Profile.EXP_PDP else 1.0


def _pnr_lin(spec: ExperimentSpec, spr_db: float, snr_db: Optional[float] = None) -> float:
    snr = spec.impairments.snr_db if snr_db is None else snr_db
    return 10 ** ((snr - spr_db) / 10)


# -- distribution scenarios -------------------------------------------------

def _window_pair_ratios(N: int, ratio: float, n_pairs: int, rng) -> np.ndarray:
    """X from a stream of back-to-back (V, U) window pairs, scored without overlap."""
    from .numerics import complex_gaussian_array

    z = complex_gaussian_array(n_pairs * 2 * N, 1.0, rng).reshape(n_pairs, 2 * N)
    z[:, N:] *= math.sqrt(ratio)
    return energy_ratios(z.ravel(), N, step=2 * N)


def _pdf_check(spec: ExperimentSpec, reports) -> Table:
    t = Table(("n_window", "ratio_db", "pairs", "ks_stat", "ks_pvalue",
               "mean_emp", "mean_theory", "m2_emp", "m2_theory"))
    code = _CODES[spec.scenario]
    for pi, (N, rdb) in enumerate((n, r) for n in spec.n_window for r in spec.ratio_db):
        rho = 10 ** (rdb / 10)
        x = np.concatenate([_window_pair_ratios(N, rho, c, make_rng(split_seed(spec.seed, code, pi, ci)))
                            for ci, c in _chunks(spec.trials)])
        ks = stats.kstest(x, lambda q: cdf_x(q, N, rho))
        t.rows.append((N, rdb, x.size, ks.statistic, ks.pvalue, x.mean(), mean_x(N, rho),
                       np.mean(x ** 2), second_moment_x(N, rho)))
    return t


def _cond_pdf(spec: ExperimentSpec, reports) -> Table:
    t = Table(("hypothesis", "n_window", "pnr_db", "x", "pdf_emp", "pdf_theory", "trials"))
    code = _CODES[spec.scenario]
    edges = np.linspace(0.0, spec.x_max, spec.hist_bins + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    for ni, N in enumerate(spec.n_window):
        points = [("H0", None)] + [("H1", p) for p in spec.pnr_db]
        for pi, (hyp, pnr_db) in enumerate(points):
            rho = 1.0 if pnr_db is None else 1.0 + 10 ** (pnr_db / 10)
            x = np.concatenate([_window_pair_ratios(N, rho, c, make_rng(split_seed(spec.seed, code, ni, pi, ci)))
                                for ci, c in _chunks(spec.trials)])
            counts, _ = np.histogram(x, edges)
            dens = counts / (x.size * width)
            theory = pdf_x(mids, N, rho)
            for xm, de, th in zip(mids, dens, theory):
                t.rows.append((hyp, N, pnr_db, xm, de, th, x.size))
    return t


# -- detection scenarios ----------------------------------------------------

@dataclass
class _Counts:
    h1: np.ndarray
    h0: np.ndarray
    n: int = 0


def _tone_counts(spec: ExperimentSpec, N: int, n_rx: int, gammas: np.ndarray, key: tuple) -> _Counts:
    """Aligned-window detections with the per-tone sample model."""
    n_eff = N * n_rx
    pnr = np.array([_pnr_lin(spec, s) for s in spec.spr_db])
    h1 = np.zeros((len(gammas), len(pnr)), dtype=np.int64)
    h0 = np.zeros((len(gammas), len(pnr)), dtype=np.int64)
    for ci, c in _chunks(spec.trials):
        rng = make_rng(split_seed(spec.seed, *key, ci))
        v, u, p = gaussian_detection_trials(c, n_eff, rng)
        if spec.channel is Profile.EXP_PDP:
            p = faded_primary_samples(spec.frame, c, n_eff, rng)
        V = np.sum(np.abs(v) ** 2, axis=1)
        x0 = np.sum(np.abs(u) ** 2, axis=1) / V
        for j, q in enumerate(pnr):
            x1 = np.sum(np.abs(u + math.sqrt(q) * p) ** 2, axis=1) / V if spec.pu_present else x0
            h1[:, j] += np.sum(x1[None, :] > gammas[:, None], axis=1)
            h0[:, j] += np.sum(x0[None, :] > gammas[:, None], axis=1)
    return _Counts(h1, h0, spec.trials)


def _aligned_x(z: np.ndarray, k0: int, n_eff: int) -> float:
    p = np.abs(z[k0:k0 + 2 * n_eff]) ** 2
    v, u = p[:n_eff].sum(), p[n_eff:].sum()
    return u / v if v > 0 else (math.inf if u > 0 else 1.0)


def _ofdm_counts(spec: ExperimentSpec, frame: FrameConfig, imp: ImpairmentSpec, sync: str, window,
                 gammas: Dict[Tuple[int, int], np.ndarray], key: tuple, reports) -> Dict:
    """Aligned-window detections from full-chain trials, all sweep points at once."""
    n_max = max(spec.n_window)
    cfg, onset = frame_for_window(frame, n_max)
    rx_max = max(spec.n_rx)
    imp = dataclasses.replace(imp, n_rx=rx_max)
    out = {k: _Counts(np.zeros((len(g), len(spec.spr_db)), np.int64),
                      np.zeros((len(g), len(spec.spr_db)), np.int64), spec.trials)
           for k, g in gammas.items()}
    for trial in range(spec.trials):
        ts = ofdm_trial(cfg, imp, split_seed(spec.seed, *key, trial), onset, sync, window,
                        spec.channel, random_pu_timing=spec.random_pu_timing,
                        int_method=spec.cfo_int_method)
        for (N, n_rx), g in gammas.items():
            n_eff = N * n_rx
            k0 = ts.onset_index(n_rx) - n_eff
            x0 = _aligned_x(ts.samples(0.0, n_rx, pu=False), k0, n_eff)
            cnt = out[(N, n_rx)]
            for j, spr in enumerate(spec.spr_db):
                x1 = _aligned_x(ts.samples(spr, n_rx, pu=spec.pu_present), k0, n_eff)
                cnt.h1[:, j] += x1 > g
                cnt.h0[:, j] += x0 > g
        if reports is not None and ts.estimates and ts.estimates[0] is not None:
            e = ts.estimates[0]
            reports.append(TrialReport((spec.seed, *key, trial), spec.scenario, {},
                                       sync={"eps_total": e.eps_total, "delta_hat": e.delta_hat}))
    return out


DETECTION_COLUMNS = ("case", "channel", "n_window", "n_rx", "spr_db", "pnr_db", "p_fa_target", "gamma",
                     "p_fa_emp", "p_d_emp", "p_d_theory", "ci_halfwidth", "trials")


def _detection_rows(spec: ExperimentSpec, case: str, frame: FrameConfig, imp: ImpairmentSpec,
                    sync: str, window, key: tuple, reports) -> List[tuple]:
    points = [(N, r) for N in spec.n_window for r in spec.n_rx]
    gammas = {(N, r): np.array([threshold_from_pfa(p, N * r) for p in spec.p_fa]) for N, r in points}
    if spec.source == "ofdm":
        counts = _ofdm_counts(spec, frame, imp, sync, window, gammas, key, reports)
    else:
        counts = {(N, r): _tone_counts(spec, N, r, gammas[(N, r)], key + (pi,))
                  for pi, (N, r) in enumerate(points)}
    sh = _sigma_h_sq(spec)
    rows = []
    for (N, r) in points:
        c = counts[(N, r)]
        for i, p in enumerate(spec.p_fa):
            g = gammas[(N, r)][i]
            for j, spr in enumerate(spec.spr_db):
                pnr = _pnr_lin(spec, spr)
                pd_emp = c.h1[i, j] / c.n
                theory = pd_closed_form(g, pnr if spec.pu_present else 0.0, N * r, sh)
                rows.append((case, spec.channel.value, N, r, spr, 10 * math.log10(pnr), p, g,
                             c.h0[i, j] / c.n, pd_emp, theory, ci_halfwidth(pd_emp, c.n), c.n))
    return rows


def _pd_vs_spr(spec: ExperimentSpec, reports) -> Table:
    rows = _detection_rows(spec, spec.source, spec.frame, spec.impairments, spec.sync, spec.window,
                           (_CODES[spec.scenario],), reports)
    return Table(DETECTION_COLUMNS, rows)


ROC_COLUMNS = ("spr_db", "pnr_db", "gamma", "p_fa_target", "p_fa_emp", "p_d_emp", "p_d_theory",
               "ci_halfwidth", "trials")


def _roc(spec: ExperimentSpec, reports) -> Table:
    single = dataclasses.replace(spec, n_window=spec.n_window[:1], n_rx=spec.n_rx[:1])
    det = Table(DETECTION_COLUMNS, _detection_rows(single, spec.source, spec.frame, spec.impairments,
                                                   spec.sync, spec.window, (_CODES[spec.scenario],), reports))
    cols = [DETECTION_COLUMNS.index(c) for c in ROC_COLUMNS]
    rows = sorted((tuple(r[i] for i in cols) for r in det.rows), key=lambda r: (r[0], r[3]))
    return Table(ROC_COLUMNS, rows)


def _ablation(spec: ExperimentSpec, reports) -> Table:
    """P_D versus SPR for each impairment case, common random numbers across cases."""
    if spec.source != "ofdm":
        raise ConfigError("IMPAIRMENT_ABLATION needs source 'ofdm'")
    rows = []
    for case in spec.cases:
        over, sync, window, keep = CASES[case]
        frame = dataclasses.replace(spec.frame, oversample=over)
        imp = spec.impairments if keep else dataclasses.replace(spec.impairments, cfo_hz=0.0, sfo_ppm=0.0)
        rows += _detection_rows(spec, case, frame, imp, sync, window, (_CODES[spec.scenario],), reports)
    return Table(DETECTION_COLUMNS, rows)


def _fading(spec: ExperimentSpec, reports) -> Table:
    rows = _detection_rows(spec, spec.source, spec.frame, spec.impairments, spec.sync, spec.window,
                           (_CODES[spec.scenario],), reports)
    return Table(DETECTION_COLUMNS + ("sigma_h_sq",), [r + (_sigma_h_sq(spec),) for r in rows])


def pd_shift_db(table: Table, reference: str, other: str, target: float = 0.9, **match) -> float:
    """Right shift (dB) of case ``other``'s P_D curve against ``reference`` at ``target``."""
    def crossing(case):
        sub = table.where(case=case, **match)
        return spr_at_pd(sub.column("spr_db"), sub.column("p_d_emp"), target)
    return crossing(reference) - crossing(other)


# -- synchronization --------------------------------------------------------

def _sync_mse(spec: ExperimentSpec, reports) -> Table:
    t = Table(("channel", "snr_db", "mse_cfo", "mse_sfo", "gross_error_rate", "trials"))
    code = _CODES[spec.scenario]
    cfg = dataclasses.replace(spec.frame, n_data_symbols=0)
    base = dataclasses.replace(spec.impairments, n_rx=1)
    delta = base.sfo_ppm * 1e-6
    eps_true = genie_estimate(cfg, base).eps_total
    from .channel import draw_channel, scene_components
    from .phy_tx import generate_primary, random_frame, synthesize

    su_cache = synthesize(random_frame(cfg, 0), cfg)
    silent = generate_primary(cfg, 0.0, len(su_cache), 0, n_samples=len(su_cache))
    for snr in spec.snr_db:
        imp = dataclasses.replace(base, snr_db=snr)
        e_cfo, e_sfo, bad = [], [], 0
        for trial in range(spec.trials):
            # same key at every SNR: the noise shape is shared and only scaled
            ss = split_seed(spec.seed, code, trial)
            s_ch, s_noise = ss.spawn(2)
            ch = draw_channel(cfg, spec.channel, s_ch)
            rx = scene_components(su_cache, silent, imp, [(ch, ch)], s_noise, cfg).base[0]
            est = synchronize(rx, cfg, imp.cfo_max_hz, int_method=spec.cfo_int_method)
            e_cfo.append(est.eps_total - eps_true)
            e_sfo.append(est.delta_hat - delta)
            # a wrapped fractional part moves eps_int by one without any error
            bad += abs(e_cfo[-1]) > 0.5
            if reports is not None:
                reports.append(TrialReport((spec.seed, code, trial), spec.scenario, {"snr_db": snr},
                                           sync={"eps_err": e_cfo[-1], "delta_err": e_sfo[-1]}, pu_present=False))
        n = spec.trials
        t.rows.append((spec.channel.value, snr, float(np.mean(np.square(e_cfo))),
                       float(np.mean(np.square(e_sfo))), bad / n, n))
    return t


# -- latency ----------------------------------------------------------------

def _latency(spec: ExperimentSpec, reports) -> Table:
    """Time from primary onset to the first binding detection.

    Frames carry two calibration windows, one more clean window, then the
    primary for two windows. A detection emitted before the onset counts as
    an early (false) alarm and is excluded from the latency statistics.
    """
    t = Table(("n_window", "n_rx", "spr_db", "pnr_db", "p_fa_target", "detect_rate", "early_rate",
               "mean_latency_samples", "median_latency_samples", "mean_latency_symbols",
               "mean_latency_us", "trials"))
    code = _CODES[spec.scenario]
    frame = spec.frame
    sym_us = frame.symbol_duration * 1e6
    for N in spec.n_window:
        cfg, onset = frame_for_window(frame, N, pre_windows=3.0, post_windows=2.0)
        rx_max = max(spec.n_rx)
        lat: Dict[tuple, list] = {}
        early: Dict[tuple, int] = {}
        for trial in range(spec.trials):
            key = split_seed(spec.seed, code, N, trial)
            if spec.source == "ofdm":
                ts = ofdm_trial(cfg, dataclasses.replace(spec.impairments, n_rx=rx_max), key, onset,
                                spec.sync, spec.window, spec.channel, random_pu_timing=spec.random_pu_timing,
                                int_method=spec.cfo_int_method)
                streams = {(r, s): ts.samples(s, r, pu=spec.pu_present) for r in spec.n_rx for s in spec.spr_db}
                onset_idx = {r: ts.onset_index(r) for r in spec.n_rx}
            else:
                streams, onset_idx = _tone_latency_streams(spec, cfg, onset, rx_max, key)
            for r in spec.n_rx:
                n_eff = N * r
                for s in spec.spr_db:
                    x = energy_ratios(streams[(r, s)], n_eff)
                    for p in spec.p_fa:
                        g = threshold_from_pfa(p, n_eff)
                        hit = np.flatnonzero(x > g)
                        # decisions before 2N samples are calibration only
                        first = int(hit[0]) if hit.size else None
                        emitted = None if first is None else first + 2 * n_eff
                        pt = (r, s, p)
                        lat.setdefault(pt, [])
                        early.setdefault(pt, 0)
                        if emitted is not None and emitted <= onset_idx[r]:
                            early[pt] += 1
                            latency = None
                        else:
                            latency = None if emitted is None else emitted - onset_idx[r]
                            if latency is not None:
                                lat[pt].append(latency)
                        if reports is not None:
                            reports.append(TrialReport(
                                (spec.seed, code, N, trial), spec.scenario,
                                {"n_window": N, "n_rx": r, "spr_db": s, "p_fa": p},
                                decision=emitted is not None, latency_samples=latency,
                                latency_symbols=None if latency is None else latency / (frame.n_reserved * r),
                                pu_present=spec.pu_present))
        n = spec.trials
        for r in spec.n_rx:
            for s in spec.spr_db:
                for p in spec.p_fa:
                    L = np.array(lat[(r, s, p)], dtype=float)
                    per_sym = frame.n_reserved * r
                    mean_l = float(L.mean()) if L.size else math.nan
                    t.rows.append((N, r, s, 10 * math.log10(_pnr_lin(spec, s)), p, L.size / n,
                                   early[(r, s, p)] / n, mean_l,
                                   float(np.median(L)) if L.size else math.nan,
                                   mean_l / per_sym, mean_l / per_sym * sym_us, n))
    return t


def _tone_latency_streams(spec: ExperimentSpec, cfg: FrameConfig, onset_symbol: int, rx_max: int, key):
    from .numerics import complex_gaussian_array

    rng = make_rng(key)
    n_sym = cfg.n_data_symbols
    per = cfg.n_reserved * rx_max
    noise = complex_gaussian_array(n_sym * per, 1.0, rng)
    if spec.channel is Profile.EXP_PDP:
        pu = faded_primary_samples(cfg, 1, n_sym * per, rng).ravel()
    else:
        pu = complex_gaussian_array(n_sym * per, 1.0, rng)
    pu[: onset_symbol * per] = 0.0
    out, onset_idx = {}, {}
    for r in spec.n_rx:
        for s in spec.spr_db:
            z = noise + (math.sqrt(_pnr_lin(spec, s)) * pu if spec.pu_present else 0.0)
            out[(r, s)] = z.reshape(n_sym, cfg.n_reserved, rx_max)[:, :, :r].ravel()
        onset_idx[r] = onset_symbol * cfg.n_reserved * r
    return out, onset_idx


_DISPATCH = {
    Scenario.PDF_CHECK: _pdf_check,
    Scenario.COND_PDF: _cond_pdf,
    Scenario.PD_VS_SPR: _pd_vs_spr,
    Scenario.ROC: _roc,
    Scenario.SYNC_MSE: _sync_mse,
    Scenario.IMPAIRMENT_ABLATION: _ablation,
    Scenario.FADING_MIMO: _fading,
    Scenario.LATENCY: _latency,
}


def run_experiment(spec: ExperimentSpec, reports: Optional[list] = None) -> Table:
    """Run every trial of ``spec`` and aggregate per swept point.

    Pass a list as ``reports`` to also collect per-trial :class:`TrialReport`
    records where the scenario produces them.
    """
    if spec.source == "ofdm":
        for N in spec.n_window:
            frame_for_window(spec.frame, N)
    return _DISPATCH[spec.scenario](spec, reports)


# -- presets ----------------------------------------------------------------

def presets() -> Dict[str, ExperimentSpec]:
    """Ready-made specs for the reference figures, at desk-scale trial counts."""
    frame, imp = reference_config()
    perfect = dataclasses.replace(imp, cfo_hz=0.0, sfo_ppm=0.0)
    return {
        "pdf": ExperimentSpec(Scenario.PDF_CHECK, trials=100_000, n_window=(32,), ratio_db=(5.0,)),
        "cond-pdf": ExperimentSpec(Scenario.COND_PDF, trials=100_000, n_window=(32,)),
        "pd-sweep": ExperimentSpec(Scenario.PD_VS_SPR, trials=20_000, impairments=perfect,
                                   p_fa=(0.01, 0.025, 0.04, 0.1), spr_db=tuple(range(0, 17))),
        "roc": ExperimentSpec(Scenario.ROC, trials=20_000, impairments=perfect,
                              p_fa=tuple(np.round(np.logspace(-3, -0.3, 12), 5)), spr_db=(6, 8, 10, 12)),
        "compare-qpsk": ExperimentSpec(Scenario.PD_VS_SPR, trials=2000, source="ofdm",
                                       frame=dataclasses.replace(frame, mapper="QPSK"),
                                       impairments=dataclasses.replace(perfect, snr_db=6.0),
                                       n_window=(128,), p_fa=(0.04,), spr_db=tuple(range(0, 17))),
        "sync-mse": ExperimentSpec(Scenario.SYNC_MSE, trials=1000, impairments=imp),
        "ablation": ExperimentSpec(Scenario.IMPAIRMENT_ABLATION, trials=1000, source="ofdm",
                                   impairments=imp, spr_db=tuple(range(0, 15)),
                                   cases=tuple(CASES)),
        "fading": ExperimentSpec(Scenario.FADING_MIMO, trials=2000, source="ofdm", impairments=perfect,
                                 channel=Profile.EXP_PDP, n_window=(128,), n_rx=(1, 2, 4),
                                 spr_db=tuple(range(0, 21, 2))),
        "latency": ExperimentSpec(Scenario.LATENCY, trials=500, source="ofdm", impairments=perfect,
                                  n_window=(32, 128), n_rx=(1, 2), spr_db=(4.0, 8.0)),
    }


# -- CSV --------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    if isinstance(v, enum.Enum):
        return str(v.value)
    return str(v)


def write_csv(table: Table, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])


def emit_csv(table: Table, path) -> None:
    """UTF-8 CSV with a header row; floats carry 9 significant digits."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_csv(table, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc
