"""Experiment front end: generators, sampling baseline, pipeline, CLI."""

from .generator import GeneratorSpec, generate
from .baseline import BaselineReport, sample_baseline
from .pipeline import ExperimentReport, InstanceRecord, run_pipeline

__all__ = [
    "BaselineReport",
    "ExperimentReport",
    "GeneratorSpec",
    "InstanceRecord",
    "generate",
    "run_pipeline",
    "sample_baseline",
]
