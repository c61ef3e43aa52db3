"""Energy-ratio spectrum monitoring for OFDM secondary users.

Modules: :mod:`numerics` (special functions, transforms, resampling),
:mod:`phy_tx` (frames with reserved tones), :mod:`channel` (impairments),
:mod:`rx_sync` (synchronization and demodulation), :mod:`detector`
(energy-ratio statistic) and :mod:`harness` (Monte Carlo experiments).
"""

from .channel import ImpairmentSpec, NbiSpec, Profile, draw_channel, mix_scene
from .detector import (Decision, DetectorState, cdf_x, fuse_majority, ingest, pd_closed_form, pdf_x,
                       run_monitor, threshold_from_pfa)
from .harness import ExperimentSpec, Scenario, reference_config, emit_csv, run_experiment
from .numerics import IqBuffer, split_seed
from .phy_tx import FrameConfig, build_frame, generate_primary, synthesize
from .rx_sync import ReservedToneStream, Window, receive, synchronize

__all__ = [
    "Decision", "DetectorState", "ExperimentSpec", "FrameConfig", "ImpairmentSpec", "IqBuffer",
    "NbiSpec", "Profile", "ReservedToneStream", "Scenario", "Window", "build_frame", "cdf_x",
    "reference_config", "draw_channel", "emit_csv", "fuse_majority", "generate_primary", "ingest",
    "mix_scene", "pd_closed_form", "pdf_x", "receive", "run_experiment", "run_monitor", "split_seed",
    "synchronize", "synthesize", "threshold_from_pfa",
]
