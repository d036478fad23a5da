"""Domain types, criteria and exact reference solutions."""

from mckv.core.criteria import Verdict, VerdictKind, blowup_linear, blowup_log, delta_verdict
from mckv.core.model import Density, DensityKind, ModelKind, ModelParams, TimeSeries
from mckv.core.selfsim import SelfSimilar, SelfSimilarStart, beta_inf

__all__ = [
    "Density",
    "DensityKind",
    "ModelKind",
    "ModelParams",
    "SelfSimilar",
    "SelfSimilarStart",
    "TimeSeries",
    "Verdict",
    "VerdictKind",
    "beta_inf",
    "blowup_linear",
    "blowup_log",
    "delta_verdict",
]
