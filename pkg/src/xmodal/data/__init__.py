"""Datasets: schema, synthetic generation, preprocessing and splitting."""

from .preprocess import lift_example, preprocess
from .schema import Dataset, DayRecord, Example, NormStats, read_jsonl, write_jsonl
from .splits import class_weights, normalize, stratified_folds
from .synthetic import SyntheticConfig, generate_synthetic

__all__ = [
    "Dataset", "DayRecord", "Example", "NormStats", "SyntheticConfig",
    "class_weights", "generate_synthetic", "lift_example", "normalize",
    "preprocess", "read_jsonl", "stratified_folds", "write_jsonl",
]
