"""Readout twirling, dynamical decoupling, Pauli twirling, zero-noise
extrapolation and self-mitigation."""

from .config import (
    DDConfig,
    MitigatedEstimate,
    MitigationConfig,
    PTConfig,
    SMConfig,
    TrexConfig,
    ZNEConfig,
)
from .dd import dd_insert
from .runner import execute_counts, execute_level, run_mitigated_experiment, run_repetitions
from .sm import sm_mitigate
from .trex import apply_mask, trex_collapse, trex_expand, trex_masks
from .twirl import TWIRL_TABLE, TwirlTable, pauli_twirl
from .zne import zne_extrapolate, zne_fold

__all__ = [
    "DDConfig",
    "MitigatedEstimate",
    "MitigationConfig",
    "PTConfig",
    "SMConfig",
    "TWIRL_TABLE",
    "TrexConfig",
    "TwirlTable",
    "ZNEConfig",
    "apply_mask",
    "dd_insert",
    "execute_counts",
    "execute_level",
    "pauli_twirl",
    "run_mitigated_experiment",
    "run_repetitions",
    "sm_mitigate",
    "trex_collapse",
    "trex_expand",
    "trex_masks",
    "zne_extrapolate",
    "zne_fold",
]
