"""Anti-wrapping functions and the IP / GD / IAF phase losses.

The functions accept numpy arrays or torch tensors.  Numpy inputs are
evaluated in float64; torch inputs keep their dtype and stay
differentiable, so the same code serves as training criterion and as
evaluation metric.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class AntiWrapKind(str, enum.Enum):
    line = "line"
    log = "log"
    cub = "cub"
    para = "para"
    cos = "cos"


def _backend(x):
    if isinstance(x, np.ndarray) or np.isscalar(x):
        return np
    import torch

    return torch


def wrap(x):
    """Fold ``x`` into ``[-pi, pi]`` by removing the nearest multiple of 2*pi."""
    xp = _backend(x)
    return x - TWO_PI * xp.round(x / TWO_PI)


def antiwrap(kind, x):
    """Evaluate the anti-wrapping function ``kind`` at ``x``.

    Every kind is even, 2*pi-periodic and non-decreasing on [0, pi], with
    ``f(0) = 0`` and ``f(pi) = pi``.  The printed formulas are defined on
    the primary period only; they are applied to the folded magnitude.
    """
    kind = AntiWrapKind(kind)
    if not hasattr(x, "shape"):
        x = np.float64(x)
    xp = _backend(x)
    mag = xp.abs(wrap(x))
    if kind is AntiWrapKind.line:
        return mag
    if kind is AntiWrapKind.log:
        return (math.pi / math.log(math.pi + 1.0)) * xp.log(mag + 1.0)
    if kind is AntiWrapKind.cub:
        return (4.0 / math.pi**2) * (mag - math.pi / 2) ** 3 + math.pi / 2
    if kind is AntiWrapKind.para:
        return mag**2 / math.pi
    return -(math.pi / 2) * xp.cos(mag) + math.pi / 2


def _as_pair(pred, ref):
    if isinstance(pred, np.ndarray) or isinstance(ref, np.ndarray):
        pred = np.asarray(pred, dtype=np.float64)
        ref = np.asarray(ref, dtype=np.float64)
    if tuple(pred.shape) != tuple(ref.shape):
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(ref.shape)}")
    return pred, ref


def diff_freq(p):
    """Adjacent-bin difference along the last axis."""
    if p.shape[-1] < 2:
        raise ValueError("need at least two bins for the group-delay loss")
    return p[..., :-1] - p[..., 1:]


def diff_time(p):
    """Adjacent-frame difference along the second-to-last axis."""
    if p.shape[-2] < 2:
        raise ValueError("need at least two frames for the IAF loss")
    return p[..., :-1, :] - p[..., 1:, :]


def ip_loss(pred, ref, kind=AntiWrapKind.line):
    """Mean anti-wrapped instantaneous-phase error."""
    pred, ref = _as_pair(pred, ref)
    return antiwrap(kind, pred - ref).mean()


def gd_loss(pred, ref, kind=AntiWrapKind.line):
    """Mean anti-wrapped group-delay error (differences along frequency)."""
    pred, ref = _as_pair(pred, ref)
    return antiwrap(kind, diff_freq(pred) - diff_freq(ref)).mean()


def iaf_loss(pred, ref, kind=AntiWrapKind.line):
    """Mean anti-wrapped instantaneous angular frequency error (along time)."""
    pred, ref = _as_pair(pred, ref)
    return antiwrap(kind, diff_time(pred) - diff_time(ref)).mean()


@dataclass
class LossReport:
    ip: float = 0.0
    gd: float = 0.0
    iaf: float = 0.0
    total: float = 0.0
    kd: float = 0.0

    def as_row(self):
        return [self.ip, self.gd, self.iaf, self.total]


@dataclass(frozen=True)
class LossSwitches:
    use_ip: bool = True
    use_gd: bool = True
    use_iaf: bool = True


def phase_losses(pred, ref, kind=AntiWrapKind.line, switches=LossSwitches()):
    """Return ``(total, components)`` keeping the backend's native scalars.

    Disabled components are reported as 0 and take no part in ``total``.
    """
    if not (switches.use_ip or switches.use_gd or switches.use_iaf):
        raise ValueError("at least one of use_ip/use_gd/use_iaf must be enabled")
    parts = {}
    if switches.use_ip:
        parts["ip"] = ip_loss(pred, ref, kind)
    if switches.use_gd:
        parts["gd"] = gd_loss(pred, ref, kind)
    if switches.use_iaf:
        parts["iaf"] = iaf_loss(pred, ref, kind)
    total = sum(parts.values())
    return total, parts


def total_loss(pred, ref, kind=AntiWrapKind.line, switches=LossSwitches()):
    """Sum of the enabled phase losses as a :class:`LossReport` of floats."""
    total, parts = phase_losses(pred, ref, kind, switches)
    return LossReport(
        ip=float(parts.get("ip", 0.0)),
        gd=float(parts.get("gd", 0.0)),
        iaf=float(parts.get("iaf", 0.0)),
        total=float(total),
    )
