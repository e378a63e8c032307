"""Matrix product state generative models trained by a deterministic density sweep."""

from ._backend import BACKEND
from .data import (
    Bitstring, TrainingSet, even_strings, group_by_suffix, load_dataset, parity, sample_training_set,
    save_dataset, training_size,
)
from .errors import (
    AmbiguousReconstructionError, ContractViolation, ConvergenceError, DegenerateBlockError,
    EmptyModelError, EmptyTrainingSetError, InfeasibleConstraintError, MemoryGuardError,
)
from .linalg import svd, sym_eig, two_by_two_eig
from .mps import (
    MPS, amplitude, born_probability, load_model, overlap, parity_target_mps, sample, sample_many,
    save_model,
)
from .theory import (
    AngleSchedule, BlockStats, CalibrationTable, PredictionPoint, angles_from_stats,
    bhattacharya_distance, exact_replay, expected_G2, expected_se, gap_model, measure_block_stats,
    predict_curve, predict_overlap, prefix_weight, string_weight,
)
from .trainer import TrainDiagnostics, TruncationPolicy, effective_density, train, truncate_and_extract

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Bitstring", "TrainingSet", "even_strings", "group_by_suffix", "load_dataset", "parity",
    "sample_training_set", "save_dataset", "training_size",
    "AmbiguousReconstructionError", "ContractViolation", "ConvergenceError", "DegenerateBlockError",
    "EmptyModelError", "EmptyTrainingSetError", "InfeasibleConstraintError", "MemoryGuardError",
    "svd", "sym_eig", "two_by_two_eig",
    "MPS", "amplitude", "born_probability", "load_model", "overlap", "parity_target_mps", "sample",
    "sample_many", "save_model",
    "AngleSchedule", "BlockStats", "CalibrationTable", "PredictionPoint", "angles_from_stats",
    "bhattacharya_distance", "exact_replay", "expected_G2", "expected_se", "gap_model",
    "measure_block_stats", "predict_curve", "predict_overlap", "prefix_weight", "string_weight",
    "TrainDiagnostics", "TruncationPolicy", "effective_density", "train", "truncate_and_extract",
]
