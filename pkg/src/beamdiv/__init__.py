"""Link-level Monte Carlo simulator for beamformed high-mobility uplinks.

A mobile terminal with a large uniform linear array transmits through a bank
of fixed matched-filter beams, pre-rotating each beam's signal to cancel the
Doppler shift seen in that beam's direction.  The package simulates three
ways of sending data over the resulting set of near-static equivalent
channels (a rotated signal-space code, a space-time code over two beam
groups, and plain single-stream transmission) and measures symbol error
rates, residual Doppler spread and diversity order.
"""

from .arrays import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    BeamformerBank,
    DopplerParams,
    make_bank,
    make_beamformer,
    normalization_coefficient,
    phase_ramp,
    select_directions,
    steering_vector,
    transmit_matrix,
)
from .channel import (
    PathSet,
    add_noise,
    beam_coupling,
    conventional_channel_series,
    doppler_spread,
    draw_paths,
    equivalent_channel,
    noise_sigma,
    propagate,
)
from .coding import (
    QPSK,
    Constellation,
    alamouti_frames,
    assemble_frame,
    beamformer_assignment,
    demap_symbols,
    map_bits,
    pilot_sequence,
    rotation_matrix,
    slice_indices,
    ssd_blocks,
)
from .engine import (
    BATCH_TRIALS,
    SCHEMES,
    DiversityFit,
    FitUnavailableError,
    SerPoint,
    SimConfig,
    SweepResult,
    active_backend,
    diversity_order_fit,
    run_sweep,
    run_trial,
    trial_rng,
)
from .receiver import (
    alamouti_combine,
    candidate_matrix,
    count_symbol_errors,
    equalize,
    estimate_channel,
    ml_detect,
)

__all__ = [
    "BATCH_TRIALS",
    "QPSK",
    "SCHEMES",
    "SPEED_OF_LIGHT",
    "ArrayGeometry",
    "BeamformerBank",
    "Constellation",
    "DiversityFit",
    "DopplerParams",
    "FitUnavailableError",
    "PathSet",
    "SerPoint",
    "SimConfig",
    "SweepResult",
    "active_backend",
    "add_noise",
    "alamouti_combine",
    "alamouti_frames",
    "assemble_frame",
    "beam_coupling",
    "beamformer_assignment",
    "candidate_matrix",
    "conventional_channel_series",
    "count_symbol_errors",
    "demap_symbols",
    "diversity_order_fit",
    "doppler_spread",
    "draw_paths",
    "equalize",
    "equivalent_channel",
    "estimate_channel",
    "make_bank",
    "make_beamformer",
    "map_bits",
    "ml_detect",
    "noise_sigma",
    "phase_ramp",
    "pilot_sequence",
    "propagate",
    "rotation_matrix",
    "run_sweep",
    "run_trial",
    "select_directions",
    "slice_indices",
    "ssd_blocks",
    "steering_vector",
    "transmit_matrix",
    "trial_rng",
]

__version__ = "0.1.0"
