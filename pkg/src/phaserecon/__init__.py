"""Speech phase reconstruction from amplitude spectrograms."""
from .antiwrap import AntiWrapKind, LossReport, antiwrap, phase_losses, total_loss
from .estimators import GriffinLim, NeuralPhasePredictor, RAAR, ZeroPhase
from .iterative import IterativeConfig, gla, raar
from .metrics import evaluate, f0_rmse, snr
from .spectral import StftConfig, istft, principal_phase, stft

__version__ = "0.1.0"

__all__ = [
    "AntiWrapKind",
    "GriffinLim",
    "IterativeConfig",
    "LossReport",
    "NeuralPhasePredictor",
    "RAAR",
    "StftConfig",
    "ZeroPhase",
    "antiwrap",
    "evaluate",
    "f0_rmse",
    "gla",
    "istft",
    "phase_losses",
    "principal_phase",
    "raar",
    "snr",
    "stft",
    "total_loss",
]
