"""Teacher and student training loops."""
import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch

from .antiwrap import AntiWrapKind, LossReport, LossSwitches, phase_losses
from .spectral import StftConfig, log_amplitude, split, stft

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-4
    beta1: float = 0.8
    beta2: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.01
    lr_decay_per_epoch: float = 0.999
    batch_size: int = 16
    segment_samples: int = 8000
    epochs: int = 1
    max_steps: int = 0
    alpha_kd: float = 1.0
    loss_kind: AntiWrapKind = AntiWrapKind.line
    use_ip: bool = True
    use_gd: bool = True
    use_iaf: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "loss_kind", AntiWrapKind(self.loss_kind))
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.alpha_kd < 0:
            raise ValueError("alpha_kd must be >= 0")
        if not (self.use_ip or self.use_gd or self.use_iaf):
            raise ValueError("at least one phase loss must be enabled")

    @property
    def switches(self):
        return LossSwitches(self.use_ip, self.use_gd, self.use_iaf)


def adamw_update(params, grads, state, cfg, step, lr=None):
    """One AdamW step with decoupled weight decay, in place.

    ``params`` and ``grads`` map names to tensors; ``state`` holds the
    first/second moment buffers and is filled on first use.  ``step``
    counts from 1.
    """
    lr = cfg.lr if lr is None else lr
    c1 = 1.0 - cfg.beta1**step
    c2 = 1.0 - cfg.beta2**step
    with torch.no_grad():
        for name, p in params.items():
            g = grads.get(name)
            if g is None:
                continue
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {tuple(g.shape)} != parameter shape {tuple(p.shape)} for {name}")
            m, v = state.setdefault(name, (torch.zeros_like(p), torch.zeros_like(p)))
            p.mul_(1.0 - lr * cfg.weight_decay)
            m.mul_(cfg.beta1).add_(g, alpha=1.0 - cfg.beta1)
            v.mul_(cfg.beta2).addcmul_(g, g, value=1.0 - cfg.beta2)
            denom = (v / c2).sqrt_().add_(cfg.eps)
            p.addcdiv_(m, denom, value=-lr / c1)
    return params, state


def kd_loss(student, teacher):
    """Sum of mean squared differences over the traced intermediate outputs.

    Groups: input-convolution output, each block output, pseudo real part
    and pseudo imaginary part.
    """
    pairs = [(student.input_conv_out, teacher.input_conv_out)]
    if len(student.block_outs) != len(teacher.block_outs):
        raise ValueError("student and teacher have a different number of blocks")
    pairs += list(zip(student.block_outs, teacher.block_outs))
    pairs += [(student.pseudo_real, teacher.pseudo_real), (student.pseudo_imag, teacher.pseudo_imag)]
    total = 0.0
    for s, t in pairs:
        if tuple(s.shape) != tuple(t.shape):
            raise ValueError(f"trace shape mismatch: {tuple(s.shape)} vs {tuple(t.shape)}")
        total = total + ((s - t) ** 2).mean()
    return total


def features(waveform, stft_cfg=StftConfig()):
    """``(log_amplitude, phase)`` of a waveform, float64 frame-major."""
    amp, phase = split(stft(waveform, stft_cfg))
    return log_amplitude(amp), phase


class SegmentSampler:
    """Random fixed-length crops, one per utterance per epoch, in batches.

    Utterances shorter than the segment are zero-padded.  Order and crop
    offsets depend only on ``seed``.
    """

    def __init__(self, waveforms, segment_samples, batch_size, stft_cfg=StftConfig(), seed=0):
        if not waveforms:
            raise ValueError("no training data")
        self.waveforms = [np.asarray(w, dtype=np.float64) for w in waveforms]
        self.segment = int(segment_samples)
        self.batch_size = int(batch_size)
        self.stft_cfg = stft_cfg
        self.rng = np.random.default_rng(seed)

    def _crop(self, wav):
        if wav.size <= self.segment:
            return np.pad(wav, (0, self.segment - wav.size))
        start = self.rng.integers(0, wav.size - self.segment + 1)
        return wav[start : start + self.segment]

    def epoch(self):
        order = self.rng.permutation(len(self.waveforms))
        for i in range(0, len(order), self.batch_size):
            feats = [features(self._crop(self.waveforms[j]), self.stft_cfg) for j in order[i : i + self.batch_size]]
            log_amp = torch.from_numpy(np.stack([f[0] for f in feats])).float()
            phase = torch.from_numpy(np.stack([f[1] for f in feats])).float()
            yield log_amp, phase


def parameter_hash(model):
    """SHA-256 over all parameter bytes, for freeze/determinism checks."""
    h = hashlib.sha256()
    for name, t in model.state_dict().items():
        h.update(name.encode())
        h.update(t.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def _item(t):
    return 0.0 if t is None else float(t.detach())


class Trainer:
    """Optimiser state plus the step logic shared by teacher and student runs."""

    def __init__(self, model, cfg, teacher=None):
        self.model = model
        self.cfg = cfg
        self.teacher = teacher
        self.state = {}
        self.step_count = 0
        self.lr = cfg.lr
        if teacher is not None:
            if not model.config.causal:
                raise ValueError("the distilled student must be causal")
            s, t = model.config, teacher.config
            if (s.channels, s.n_bins, s.num_blocks) != (t.channels, t.n_bins, t.num_blocks):
                raise ValueError("teacher and student must share channels, bins and block count")
            teacher.eval()
            for p in teacher.parameters():
                p.requires_grad_(False)

    def train_step(self, log_amp, phase):
        """One forward/backward/update; returns the loss components."""
        model, cfg = self.model, self.cfg
        model.train()
        trace = model(log_amp)
        total, parts = phase_losses(trace.phase, phase, cfg.loss_kind, cfg.switches)
        kd = None
        if self.teacher is not None:
            with torch.no_grad():
                target = self.teacher(log_amp)
            kd = kd_loss(trace, target)
            total = total + cfg.alpha_kd * kd
        if not torch.isfinite(total):
            raise FloatingPointError(
                f"non-finite loss at step {self.step_count + 1}: "
                + ", ".join(f"{k}={float(v):.4g}" for k, v in parts.items())
            )
        model.zero_grad(set_to_none=True)
        total.backward()
        params = dict(model.named_parameters())
        grads = {k: p.grad for k, p in params.items() if p.grad is not None}
        self.step_count += 1
        adamw_update(params, grads, self.state, self.cfg, self.step_count, lr=self.lr)
        return LossReport(
            ip=_item(parts.get("ip")),
            gd=_item(parts.get("gd")),
            iaf=_item(parts.get("iaf")),
            kd=_item(kd),
            total=_item(total),
        )

    def end_epoch(self):
        self.lr *= self.cfg.lr_decay_per_epoch


def fit(model, waveforms, cfg, stft_cfg=StftConfig(), teacher=None, callback=None):
    """Train ``model`` on random crops of ``waveforms``.

    Runs ``cfg.epochs`` epochs, or exactly ``cfg.max_steps`` steps when that
    is positive.  With ``teacher`` the loss adds ``alpha_kd`` times the
    distillation loss and the teacher stays frozen.  ``callback(step,
    report)`` is called after every step.  Returns the list of reports.
    """
    torch.manual_seed(cfg.seed)
    sampler = SegmentSampler(waveforms, cfg.segment_samples, cfg.batch_size, stft_cfg, cfg.seed)
    trainer = Trainer(model, cfg, teacher)
    history = []
    n_epochs = cfg.epochs if cfg.max_steps <= 0 else math.inf
    epoch = 0
    while epoch < n_epochs:
        for log_amp, phase in sampler.epoch():
            report = trainer.train_step(log_amp, phase)
            history.append(report)
            if callback is not None:
                callback(trainer.step_count, report)
            if cfg.max_steps > 0 and trainer.step_count >= cfg.max_steps:
                return history
        trainer.end_epoch()
        epoch += 1
        log.debug("epoch %d done, lr=%.3g", epoch, trainer.lr)
    return history


def train_student(student, teacher, waveforms, cfg, stft_cfg=StftConfig(), callback=None):
    """Distil a causal ``student`` from a frozen non-causal ``teacher``."""
    return fit(student, waveforms, cfg, stft_cfg, teacher=teacher, callback=callback)


def warm_start(student, teacher):
    """Copy every teacher tensor whose shape matches into the student."""
    src = teacher.state_dict()
    dst = student.state_dict()
    for name, t in src.items():
        if name in dst and dst[name].shape == t.shape:
            dst[name] = t.clone()
    student.load_state_dict(dst)
    return student


def evaluate_losses(model, waveforms, stft_cfg=StftConfig(), kind=AntiWrapKind.line):
    """Mean IP/GD/IAF of ``model`` over whole utterances, accumulated in float64."""
    from .antiwrap import total_loss

    reports = []
    for wav in waveforms:
        log_amp, phase = features(wav, stft_cfg)
        reports.append(total_loss(model.predict_phase(log_amp), phase, kind))
    return LossReport(
        ip=float(np.mean([r.ip for r in reports])),
        gd=float(np.mean([r.gd for r in reports])),
        iaf=float(np.mean([r.iaf for r in reports])),
        total=float(np.mean([r.total for r in reports])),
    )
