"""Residual convolutional phase predictor with a parallel estimation head.

Input is a log-amplitude spectrogram ``(batch, frames, bins)``; output is a
wrapped phase spectrogram of the same shape.  Convolutions run along the
time axis with the frequency bins as channels.
"""
import math
from dataclasses import dataclass, field, fields

import torch
import torch.nn.functional as F
from torch import nn


def zeta(kernel, dilation):
    """Number of future frames a centred convolution reads."""
    return (kernel - 1) * dilation // 2


@dataclass(frozen=True)
class ModelConfig:
    n_bins: int = 513
    channels: int = 512
    input_kernel: int = 7
    kernel_sizes: tuple = (3, 7, 11)
    dilations: tuple = ((1, 3, 5), (1, 3, 5), (1, 3, 5))
    output_kernel: int = 7
    causal: bool = False
    lrelu_slope: float = 0.1
    use_pea: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kernel_sizes", tuple(int(k) for k in self.kernel_sizes))
        object.__setattr__(self, "dilations", tuple(tuple(int(d) for d in row) for row in self.dilations))
        kernels = (self.input_kernel, self.output_kernel) + self.kernel_sizes
        if any(k < 1 or k % 2 == 0 for k in kernels):
            raise ValueError(f"kernel sizes must be odd and positive, got {kernels}")
        if self.channels < 1 or self.n_bins < 2:
            raise ValueError("channels must be >= 1 and n_bins >= 2")
        if not self.kernel_sizes:
            raise ValueError("need at least one residual block")
        if len(self.dilations) != len(self.kernel_sizes):
            raise ValueError("one row of dilations per residual block is required")
        q = len(self.dilations[0])
        if q < 1 or any(len(row) != q for row in self.dilations):
            raise ValueError("every block needs the same, non-zero number of sub-blocks")
        if any(d < 1 for row in self.dilations for d in row):
            raise ValueError("dilations must be positive")

    @property
    def num_blocks(self):
        return len(self.kernel_sizes)

    @property
    def subblocks(self):
        return len(self.dilations[0])

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ModelConfig(**values)


def paper_config(causal=False):
    return ModelConfig(causal=causal)


def tiny_config(n_bins=513, channels=32, causal=False, **kw):
    return ModelConfig(
        n_bins=n_bins,
        channels=channels,
        kernel_sizes=(3, 7),
        dilations=((1, 3), (1, 3)),
        causal=causal,
        **kw,
    )


def receptive_future(cfg):
    """Future input frames needed to emit one output frame (0 if causal)."""
    if cfg.causal:
        return 0
    q = cfg.subblocks
    per_block = max(
        sum(zeta(k, d) for d in row) + q * zeta(k, 1)
        for k, row in zip(cfg.kernel_sizes, cfg.dilations)
    )
    return zeta(cfg.input_kernel, 1) + per_block + zeta(cfg.output_kernel, 1)


def latency_ms(cfg, hop_ms, window_ms):
    """Algorithmic latency: look-ahead frames times hop, or one window if causal."""
    if cfg.causal:
        return float(window_ms)
    return receptive_future(cfg) * float(hop_ms)


def conv1d(x, weight, bias=None, dilation=1, causal=False):
    """Same-length 1-D convolution over the last axis of ``(batch, C_in, T)``.

    Non-causal layers pad ``zeta(k, d)`` zeros on both sides; causal layers
    pad ``(k - 1) * d`` zeros on the left only.
    """
    k = weight.shape[-1]
    if x.shape[-2] != weight.shape[1]:
        raise ValueError(f"expected {weight.shape[1]} input channels, got {x.shape[-2]}")
    if causal:
        pad = (k - 1) * dilation, 0
    else:
        pad = zeta(k, dilation), (k - 1) * dilation - zeta(k, dilation)
    return F.conv1d(F.pad(x, pad), weight, bias, dilation=dilation)


class Conv(nn.Module):
    def __init__(self, c_in, c_out, kernel, dilation=1, causal=False):
        super().__init__()
        self.weight = nn.Parameter(torch.empty(c_out, c_in, kernel))
        self.bias = nn.Parameter(torch.zeros(c_out))
        self.dilation = dilation
        self.causal = causal

    @property
    def context(self):
        return (self.weight.shape[-1] - 1) * self.dilation

    def forward(self, x):
        return conv1d(x, self.weight, self.bias, self.dilation, self.causal)


class _PhaseFormula(torch.autograd.Function):
    @staticmethod
    def forward(ctx, real, imag):
        ctx.save_for_backward(real, imag)
        return principal_phase(real, imag)

    @staticmethod
    def backward(ctx, grad):
        real, imag = ctx.saved_tensors
        denom = real * real + imag * imag
        safe = torch.where(denom > 0, denom, torch.ones_like(denom))
        scale = torch.where(denom > 0, grad / safe, torch.zeros_like(grad))
        return -imag * scale, real * scale


def principal_phase(real, imag):
    """Torch twin of :func:`phaserecon.spectral.principal_phase` (no autograd)."""
    sgn_r = torch.where(real >= 0, 1.0, -1.0).to(real.dtype)
    sgn_i = torch.where(imag >= 0, 1.0, -1.0).to(real.dtype)
    zero_r = real == 0
    base = torch.where(
        zero_r, sgn_i * (math.pi / 2), torch.atan(imag / torch.where(zero_r, torch.ones_like(real), real))
    )
    out = base - (math.pi / 2) * sgn_i * (sgn_r - 1.0)
    # R < 0 with a vanishing negative I rounds to -pi; fold onto +pi
    out = torch.where(out <= -math.pi, torch.full_like(out, math.pi), out)
    return torch.where(zero_r & (imag == 0), torch.zeros_like(out), out)


def phase_formula(real, imag):
    """Differentiable wrapped phase of ``real + j*imag``; gradient 0 at the origin."""
    return _PhaseFormula.apply(real, imag)


@dataclass
class ForwardTrace:
    """Outputs of one forward pass, all frame-major ``(batch, frames, dim)``."""

    phase: torch.Tensor
    pseudo_real: torch.Tensor
    pseudo_imag: torch.Tensor
    input_conv_out: torch.Tensor
    block_outs: list = field(default_factory=list)


class NsppModel(nn.Module):
    """Input conv, parallel residual blocks, averaged skip sum, phase head."""

    def __init__(self, config, seed=0):
        super().__init__()
        self.config = config
        c, n, causal = config.channels, config.n_bins, config.causal
        self.input_conv = Conv(n, c, config.input_kernel, causal=causal)
        self.blocks = nn.ModuleList()
        for k, row in zip(config.kernel_sizes, config.dilations):
            block = nn.ModuleList()
            for d in row:
                block.append(
                    nn.ModuleDict(
                        {
                            "dilated": Conv(c, c, k, dilation=d, causal=causal),
                            "plain": Conv(c, c, k, causal=causal),
                        }
                    )
                )
            self.blocks.append(block)
        if config.use_pea:
            self.out_real = Conv(c, n, config.output_kernel, causal=causal)
            self.out_imag = Conv(c, n, config.output_kernel, causal=causal)
        else:
            self.out_phase = Conv(c, n, config.output_kernel, causal=causal)
        self.reset_parameters(seed)

    def reset_parameters(self, seed=0, std=0.01):
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name.endswith("weight"):
                    p.copy_(torch.randn(p.shape, generator=gen, dtype=p.dtype) * std)
                else:
                    p.zero_()

    def convs(self):
        """Convolution layers in evaluation order."""
        layers = [self.input_conv]
        for block in self.blocks:
            for sub in block:
                layers += [sub["dilated"], sub["plain"]]
        if self.config.use_pea:
            layers += [self.out_real, self.out_imag]
        else:
            layers.append(self.out_phase)
        return layers

    def _run(self, x, conv):
        # x: (batch, bins, frames); ``conv(layer, x)`` applies one layer
        slope = self.config.lrelu_slope
        h = conv(self.input_conv, x)
        outs = []
        for block in self.blocks:
            y = h
            for sub in block:
                r = conv(sub["dilated"], F.leaky_relu(y, slope))
                r = conv(sub["plain"], F.leaky_relu(r, slope))
                y = y + r
            outs.append(y)
        z = F.leaky_relu(sum(outs) / len(outs), slope)
        if self.config.use_pea:
            real = conv(self.out_real, z)
            imag = conv(self.out_imag, z)
            phase = phase_formula(real, imag)
        else:
            phase = conv(self.out_phase, z)
            real = imag = phase
        return h, outs, real, imag, phase

    def forward(self, log_amp):
        """Return a :class:`ForwardTrace` for ``log_amp`` of shape (B, F, N) or (F, N)."""
        squeeze = log_amp.dim() == 2
        if squeeze:
            log_amp = log_amp.unsqueeze(0)
        if log_amp.shape[-1] != self.config.n_bins:
            raise ValueError(f"expected {self.config.n_bins} bins, got {log_amp.shape[-1]}")
        h, outs, real, imag, phase = self._run(log_amp.transpose(1, 2), lambda layer, v: layer(v))

        def fm(t):
            t = t.transpose(1, 2)
            return t[0] if squeeze else t

        trace = ForwardTrace(
            phase=fm(phase),
            pseudo_real=fm(real),
            pseudo_imag=fm(imag),
            input_conv_out=fm(h),
            block_outs=[fm(o) for o in outs],
        )
        if not torch.isfinite(trace.phase).all() or not torch.isfinite(trace.pseudo_real).all():
            raise FloatingPointError("non-finite values in forward pass (diverged parameters?)")
        return trace

    def predict_phase(self, log_amp):
        """Phase for a single (F, N) array-like, returned as float64 numpy."""
        dtype = next(self.parameters()).dtype
        with torch.no_grad():
            x = torch.as_tensor(log_amp, dtype=dtype)
            return self.forward(x).phase.double().numpy()

    def num_parameters(self):
        return sum(p.numel() for p in self.parameters())
