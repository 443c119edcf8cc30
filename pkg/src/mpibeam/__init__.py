"""Behavioural model of a multiphase-interpolating switched-capacitor PA and
a digital beamforming transmitter built from it."""
from .core import (BasisPhaseSet, PhasorTarget, PhaseWeights, decompose_exact,
                   enumerate_states, quantize, reconstruct_exact)
from .estimators import Detrougher, MultiphaseTransmitter, PhaseWeightEncoder

__version__ = "0.1.0"

__all__ = [
    "BasisPhaseSet", "PhasorTarget", "PhaseWeights", "decompose_exact", "reconstruct_exact",
    "quantize", "enumerate_states", "MultiphaseTransmitter", "PhaseWeightEncoder", "Detrougher",
]
