"""Multimodal LSTM, cross-modal X-LSTM and weight-sharing SH-LSTM in numpy."""

__version__ = "0.1.0"

from .arch import ArchitectureSpec, count_params, dnn_spec, lstm_spec, sh_spec, xlstm_spec  # noqa: E402
from .budget import AllocationResult, ModalityScores, allocate, sweep_k  # noqa: E402
from .crossval import CVResult, FoldReport, compare, crossvalidate, unimodal_scores  # noqa: E402
from .dream import DreamConfig, DreamResult, dream, export_dream  # noqa: E402
from .model import Model, build_model, forward, load_model, save_model  # noqa: E402
from .rng import Rng  # noqa: E402
from .train import TrainConfig, predict, train  # noqa: E402

__all__ = [
    "AllocationResult", "ArchitectureSpec", "CVResult", "DreamConfig", "DreamResult", "FoldReport",
    "Model", "ModalityScores", "Rng", "TrainConfig", "allocate", "build_model", "compare",
    "count_params", "crossvalidate", "dnn_spec", "dream", "export_dream", "forward", "load_model",
    "lstm_spec", "predict", "save_model", "sh_spec", "sweep_k", "train", "unimodal_scores", "xlstm_spec",
]
