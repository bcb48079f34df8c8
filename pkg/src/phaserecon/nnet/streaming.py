"""Frame-by-frame inference for causal models.

Each convolution keeps a buffer of its last ``(k - 1) * d`` input frames,
initialised to zeros to match the left padding of the batch path.
"""
import numpy as np
import torch
import torch.nn.functional as F


class StreamState:
    """Per-stream convolution buffers.  One state per stream, one owner."""

    def __init__(self, model):
        if not model.config.causal:
            raise ValueError("streaming inference requires a causal model")
        self.model = model
        self.reset()

    def reset(self):
        dtype = next(self.model.parameters()).dtype
        self.buffers = {
            id(layer): torch.zeros(1, layer.weight.shape[1], layer.context, dtype=dtype)
            for layer in self.model.convs()
        }
        self.frames_seen = 0

    def _conv(self, layer, x):
        key = id(layer)
        full = torch.cat([self.buffers[key], x], dim=-1)
        self.buffers[key] = full[..., 1:]
        return F.conv1d(full, layer.weight, layer.bias, dilation=layer.dilation)


def stream_step(model, state, log_amp_frame):
    """Consume one log-amplitude frame (N,) and emit one phase frame (N,)."""
    if state.model is not model:
        raise ValueError("state belongs to a different model")
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        x = torch.as_tensor(np.asarray(log_amp_frame), dtype=dtype).reshape(1, -1, 1)
        if x.shape[1] != model.config.n_bins:
            raise ValueError(f"expected {model.config.n_bins} bins, got {x.shape[1]}")
        *_, phase = model._run(x, state._conv)
    state.frames_seen += 1
    return phase[0, :, 0].double().numpy()


def stream(model, log_amp, state=None):
    """Run :func:`stream_step` over every frame of ``log_amp`` (F, N)."""
    state = state or StreamState(model)
    return np.stack([stream_step(model, state, frame) for frame in np.asarray(log_amp)])
