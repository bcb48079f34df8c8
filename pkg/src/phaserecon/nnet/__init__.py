from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .model import (
    ForwardTrace,
    ModelConfig,
    NsppModel,
    conv1d,
    latency_ms,
    paper_config,
    phase_formula,
    receptive_future,
    tiny_config,
    zeta,
)
from .streaming import StreamState, stream, stream_step

__all__ = [
    "CheckpointError",
    "ForwardTrace",
    "ModelConfig",
    "NsppModel",
    "StreamState",
    "conv1d",
    "latency_ms",
    "load_checkpoint",
    "paper_config",
    "phase_formula",
    "receptive_future",
    "save_checkpoint",
    "stream",
    "stream_step",
    "tiny_config",
    "zeta",
]
