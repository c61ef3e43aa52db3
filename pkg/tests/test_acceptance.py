"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict; the lines are printed in the pytest
terminal summary (and immediately when run with ``-s``).
"""

import dataclasses
import io
import math
import time

import numpy as np
import pytest

from ermon.channel import Profile, apply_cfo, exp_pdp_sigma_sq
from ermon.detector import (DetectorState, energy_ratios, ingest, pd_closed_form, pfa_closed_form,
                            run_monitor, threshold_from_pfa)
from ermon.harness import (ExperimentSpec, Scenario, binomial_sigma, reference_config, pd_shift_db,
                           presets, run_experiment, spr_at_pd, write_csv)
from ermon.numerics import complex_gaussian_array, make_rng
from ermon.phy_tx import FrameConfig, known_preamble
from ermon.rx_sync import ReservedToneStream, estimate_cfo_sfo_ls, snrd_cfo, snrd_sfo, synchronize

RESULTS = []


def record(n, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {n:>2}: {title}: {detail}"
    RESULTS.append((n, line))
    print(line)
    assert passed, line


def _perfect_imp():
    return dataclasses.replace(reference_config()[1], cfo_hz=0.0, sfo_ppm=0.0)


def _csv(table):
    buf = io.StringIO()
    write_csv(table, buf)
    return buf.getvalue().encode("utf-8")


def test_01_pdf_match():
    t0 = time.perf_counter()
    t = run_experiment(ExperimentSpec(Scenario.PDF_CHECK, trials=100_000, n_window=(32,), ratio_db=(5.0,), seed=1))
    elapsed = time.perf_counter() - t0
    ks = t.column("ks_stat")[0]
    record(1, "PDF match", ks < 0.02 and elapsed <= 60.0,
           f"N=32, ratio 5 dB, {t.column('pairs')[0]} pairs, KS={ks:.4f} (<0.02), {elapsed:.1f} s (<=60 s)")


def test_02_false_alarm_calibration():
    n_eval = 10_000
    worst, fails = 0.0, []
    for N in (32, 128):
        for p in (0.01, 0.025, 0.04, 0.1):
            rng = make_rng([2, N, int(p * 1e4)])
            z = complex_gaussian_array(2 * N * n_eval, 1.0, rng)
            x = energy_ratios(z, N, step=2 * N)
            rate = float(np.mean(x > threshold_from_pfa(p, N)))
            dev = abs(rate - p) / binomial_sigma(p, n_eval)
            worst = max(worst, dev)
            if dev > 3:
                fails.append((N, p, rate))
    record(2, "false-alarm calibration", not fails,
           f"8 (N, p_fa) points at {n_eval} non-overlapping evaluations, worst deviation {worst:.2f} sigma (<=3)")


def test_03_detection_closed_form():
    trials = 20_000
    pnrs = (-2.0, 0.0, 2.0, 4.0)
    spec = ExperimentSpec(Scenario.PD_VS_SPR, trials=trials, seed=3, impairments=_perfect_imp(),
                          n_window=(32,), p_fa=(0.025,), spr_db=tuple(9.0 - p for p in pnrs))
    t = run_experiment(spec)
    devs = [abs(e - th) / binomial_sigma(th, trials) for e, th in zip(t.column("p_d_emp"), t.column("p_d_theory"))]
    g = threshold_from_pfa(0.025, 32)
    exact = pd_closed_form(g, 0.0, 32) == pfa_closed_form(g, 32)
    record(3, "detection closed form", max(devs) <= 3 and exact,
           f"N=32, p_fa=0.025, PNR {pnrs} dB: max deviation {max(devs):.2f} sigma (<=3); "
           f"P_D(PNR=0) == P_FA exactly: {exact}")


def test_04_threshold_identity():
    errs = [abs(threshold_from_pfa(0.5, N) - 1.0) for N in (4, 32, 128)]
    record(4, "threshold identity", max(errs) <= 1e-9, f"max |gamma(0.5) - 1| = {max(errs):.1e} (<=1e-9)")


def test_05_snr_degradation():
    snr = 10 ** 0.9
    a = snrd_cfo(9e-3, snr)
    b = snrd_sfo(5e-6, 1023, snr)
    ok = abs(a - 0.0092) <= 1e-4 and abs(b - 0.003) <= 2e-4
    record(5, "SNR degradation spot values", ok, f"CFO {a:.5f} dB (0.0092 +/-1e-4), SFO {b:.5f} dB (0.003 +/-2e-4)")


def test_06_sync_estimators():
    cfg = FrameConfig(n_data_symbols=0)
    pre = known_preamble(cfg)
    est = synchronize(apply_cfo(pre, 320e3), cfg, 400e3)
    eps = 320e3 / cfg.subcarrier_spacing
    cfo_err = abs(est.eps_total - eps)
    x = cfg.signed_index(cfg.pilot_indices).astype(float)
    y = 2 * np.pi * (cfg.n_subcarriers + cfg.cp_len) / cfg.n_subcarriers * (1e-4 * x + 0.01)
    d, e = estimate_cfo_sfo_ls(y, x, cfg)
    ls_err = max(abs(d - 1e-4), abs(e - 0.01))

    base = dataclasses.replace(presets()["sync-mse"], trials=1000, seed=6)
    curves = {"AWGN/coherent": run_experiment(base),
              "EXP_PDP/differential": run_experiment(dataclasses.replace(
                  base, channel=Profile.EXP_PDP, cfo_int_method="differential"))}
    monotone = {}
    for name, t in curves.items():
        c, s = np.array(t.column("mse_cfo")), np.array(t.column("mse_sfo"))
        monotone[name] = bool(np.all(np.diff(c) <= 0) and np.all(np.diff(s) <= 0))
    ok = est.eps_int == 20 and cfo_err < 1e-4 and ls_err < 1e-10 and all(monotone.values())
    record(6, "sync estimators", ok,
           f"eps_i={est.eps_int}, total CFO error {cfo_err:.1e} (<1e-4); LS error {ls_err:.1e} (<1e-10); "
           f"MSE non-increasing over SNR 0..12 dB at 1000 trials: {monotone}")


def test_07_impairment_robustness():
    spec = ExperimentSpec(Scenario.IMPAIRMENT_ABLATION, trials=800, seed=7, source="ofdm",
                          impairments=reference_config()[1], n_window=(32,), p_fa=(0.025,),
                          spr_db=tuple(float(s) for s in range(3, 13)), cases=("perfect", "impaired"))
    t = run_experiment(spec)
    shift = -pd_shift_db(t, "perfect", "impaired")
    ok = math.isfinite(shift) and shift <= 1.0
    p_ref = spr_at_pd(t.where(case="perfect").column("spr_db"), t.where(case="perfect").column("p_d_emp"))
    record(7, "impairment robustness", ok,
           f"leakage+CFO+SFO+Hanning vs perfect at P_D=0.9: right shift {shift:+.2f} dB (<=1 dB); "
           f"perfect crosses at SPR {p_ref:.2f} dB; 800 trials")


def test_08_fading_closed_form():
    trials = 20_000
    main_pnr = (0.0, 4.0)
    extra_pnr = (-4.0, -6.0, -8.0)
    spec = ExperimentSpec(Scenario.FADING_MIMO, trials=trials, seed=8, channel=Profile.EXP_PDP,
                          impairments=_perfect_imp(), n_window=(128,), p_fa=(0.025,),
                          spr_db=tuple(9.0 - p for p in main_pnr + extra_pnr))
    t = run_experiment(spec)
    sh = t.column("sigma_h_sq")[0]
    analytic = 1 / (1 - math.exp(-2))
    devs = []
    for e, th in zip(t.column("p_d_emp"), t.column("p_d_theory")):
        devs.append(abs(e - th) / max(binomial_sigma(th, trials), 1.0 / trials))
    ok = max(devs) <= 3 and abs(sh - exp_pdp_sigma_sq(64)) < 1e-12 and abs(sh - analytic) < 1e-12
    record(8, "fading closed form", ok,
           f"sigma_H^2={sh:.6f} (1/(1-e^-2)={analytic:.6f}); PNR {main_pnr} dB plus {extra_pnr} dB: "
           f"max deviation {max(devs):.2f} sigma (<=3), N=128, {trials} trials")


def test_09_mimo_equivalence():
    rng = make_rng(9)
    z = complex_gaussian_array(40_000, 1.0, rng)
    z[20_000:] *= 1.3
    pooled = ReservedToneStream(z, n_rx=2, n_reserved=4)
    a, fa = run_monitor(pooled, 64, 0.025)
    b, fb = run_monitor(z, 128, 0.025)
    identical = a == b and fa == fb

    spec = dataclasses.replace(presets()["fading"], trials=10_000, seed=9, n_rx=(1, 2))
    t = run_experiment(spec)
    siso = t.where(n_rx=1).column("p_d_emp")
    mimo = t.where(n_rx=2).column("p_d_emp")
    gain = all(m >= s for m, s in zip(mimo, siso))
    worst = min(m - s for m, s in zip(mimo, siso))
    record(9, "MIMO equivalence", identical and gain,
           f"pooled n_rx=2 window N vs SISO window 2N decision-identical over {len(a)} decisions: {identical}; "
           f"P_D(2x2) >= P_D(SISO) at all {len(siso)} SPR points (min gap {worst:+.4f}), 10^4 trials")


def test_10_recursive_energies():
    rng = make_rng(10)
    z = complex_gaussian_array(100_000, 1.0, rng) * np.repeat(rng.uniform(0.1, 10.0, 100), 1000)
    worst = 0.0
    for N in (32, 128, 512):
        st = DetectorState(N, 2.0)
        for i, s in enumerate(z.tolist()):
            ingest(st, s)
            if i % 997 == 0 and st.filled:
                U, V = st.direct_sums()
                worst = max(worst, abs(st.U - U) / U, abs(st.V - V) / V)
        U, V = st.direct_sums()
        worst = max(worst, abs(st.U - U) / U, abs(st.V - V) / V)
    record(10, "architecture consistency", worst < 1e-6,
           f"recursive vs direct window sums over 10^5 samples, N in (32, 128, 512): max rel error {worst:.1e} (<1e-6)")


def test_11_determinism():
    specs = {
        "pd-sweep": dataclasses.replace(presets()["pd-sweep"], trials=3000),
        "roc": dataclasses.replace(presets()["roc"], trials=2000),
        "sync-mse": dataclasses.replace(presets()["sync-mse"], trials=20, snr_db=(0.0, 9.0)),
        "ablation": dataclasses.replace(presets()["ablation"], trials=3, spr_db=(4.0, 8.0),
                                        cases=("perfect", "impaired")),
        "latency": dataclasses.replace(presets()["latency"], trials=5, n_window=(32,)),
    }
    same = {name: _csv(run_experiment(s)) == _csv(run_experiment(s)) for name, s in specs.items()}
    record(11, "determinism", all(same.values()), f"byte-identical CSV on re-run: {same}")


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
