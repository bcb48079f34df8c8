"""Objective evaluation: SNR, F0-RMSE, phase losses, real-time factor."""
import time
from dataclasses import dataclass, field

import numpy as np

from .antiwrap import AntiWrapKind, LossReport, total_loss
from .spectral import StftConfig, fit_length, reconstruct, split, stft

SNR_CAP_DB = 100.0


def snr(reference, estimate):
    """Time-domain SNR in dB, capped at 100 dB for (near-)exact estimates."""
    x = np.asarray(reference, dtype=np.float64)
    y = np.asarray(estimate, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    signal = np.sum(x**2)
    if signal == 0:
        raise ValueError("reference has zero energy")
    noise = np.sum((x - y) ** 2)
    if noise < 1e-10 * signal:
        return SNR_CAP_DB
    return float(10.0 * np.log10(signal / noise))


@dataclass(frozen=True)
class F0Config:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    fmin: float = 60.0
    fmax: float = 400.0
    voicing_threshold: float = 0.45


def track_f0(x, sample_rate=16000, cfg=F0Config()):
    """Frame-wise F0 in Hz by normalised cross-correlation; 0 marks unvoiced.

    The lag with the strongest correlation is chosen, preferring the
    shortest lag within 10% of the best peak to avoid octave errors, and
    refined by parabolic interpolation.
    """
    x = np.asarray(x, dtype=np.float64)
    n = int(round(cfg.frame_ms * sample_rate / 1000))
    hop = int(round(cfg.hop_ms * sample_rate / 1000))
    min_lag = int(np.floor(sample_rate / cfg.fmax))
    max_lag = int(np.ceil(sample_rate / cfg.fmin))
    if x.size < n + max_lag + 1:
        return np.zeros(0)
    starts = range(0, x.size - n - max_lag - 1, hop)
    f0 = np.zeros(len(starts))
    lags = np.arange(min_lag - 1, max_lag + 2)
    for i, s in enumerate(starts):
        a = x[s : s + n]
        ea = a @ a
        if ea <= 1e-10 * n:
            continue
        segs = np.lib.stride_tricks.sliding_window_view(x[s : s + n + max_lag + 1], n)[lags]
        eb = np.einsum("ij,ij->i", segs, segs)
        r = segs @ a / np.sqrt(ea * np.maximum(eb, 1e-20))
        inner = r[1:-1]
        peaks = np.flatnonzero((inner >= r[:-2]) & (inner >= r[2:])) + 1
        if peaks.size == 0:
            continue
        best = r[peaks].max()
        if best < cfg.voicing_threshold:
            continue
        k = peaks[r[peaks] >= 0.9 * best][0]
        den = r[k - 1] - 2 * r[k] + r[k + 1]
        shift = 0.5 * (r[k - 1] - r[k + 1]) / den if den < 0 else 0.0
        f0[i] = sample_rate / (lags[k] + shift)
    return f0


@dataclass
class F0Result:
    rmse_cent: float
    voiced_frames: int

    @property
    def no_voicing(self):
        return self.voiced_frames == 0


def f0_rmse(reference, estimate, sample_rate=16000, cfg=F0Config()):
    """RMSE in cents over frames voiced in both signals.

    Returns an :class:`F0Result`; with no commonly voiced frame the RMSE is
    0 and ``no_voicing`` is set.
    """
    x = np.asarray(reference, dtype=np.float64)
    y = np.asarray(estimate, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    fx = track_f0(x, sample_rate, cfg)
    fy = track_f0(y, sample_rate, cfg)
    both = (fx > 0) & (fy > 0)
    if not both.any():
        return F0Result(0.0, 0)
    cents = 1200.0 * np.log2(fy[both] / fx[both])
    return F0Result(float(np.sqrt(np.mean(cents**2))), int(both.sum()))


def rtf(elapsed_s, audio_s):
    """Real-time factor: processing time over audio duration."""
    if audio_s <= 0:
        raise ValueError("audio duration must be positive")
    if elapsed_s < 0:
        raise ValueError("elapsed time must be non-negative")
    return elapsed_s / audio_s


def format_rtf(value):
    """``"0.051 (19.6x)"`` style string."""
    if value == 0:
        return "0 (infx)"
    return f"{value:.3g} ({1.0 / value:.3g}x)"


@dataclass
class EvalReport:
    snr_db: float
    f0_rmse_cent: float
    losses: LossReport
    rtf: float
    latency_ms: float
    no_voicing: bool = False
    extra: dict = field(default_factory=dict)


def _predict(estimator, amplitude):
    fn = getattr(estimator, "predict", estimator)
    return np.asarray(fn(amplitude), dtype=np.float64)


def evaluate(reference, amplitude, estimator, cfg=StftConfig(), kind=AntiWrapKind.line, natural_phase=None):
    """Run ``estimator`` on ``amplitude`` and score the reconstruction.

    ``estimator`` is a callable or an object with ``predict`` mapping an
    amplitude spectrogram to a phase spectrogram.  The waveform is
    rebuilt from ``amplitude`` and the predicted phase, then trimmed or
    zero-padded to the reference length.  Phase losses are measured
    against the natural phase of ``reference``.
    """
    reference = np.asarray(reference, dtype=np.float64)
    if natural_phase is None:
        natural_phase = split(stft(reference, cfg))[1]
    amplitude = np.asarray(amplitude, dtype=np.float64)
    if amplitude.shape != natural_phase.shape:
        raise ValueError(f"amplitude shape {amplitude.shape} does not match reference {natural_phase.shape}")
    start = time.perf_counter()
    phase = _predict(estimator, amplitude)
    estimate = reconstruct(amplitude, phase, cfg, reference.size)
    elapsed = time.perf_counter() - start
    duration = reference.size / cfg.sample_rate
    f0 = f0_rmse(reference, estimate, cfg.sample_rate)
    latency = getattr(estimator, "latency_ms", None)
    if latency is None:
        latency = 1000.0 * duration
    elif callable(latency):
        latency = latency()
    return EvalReport(
        snr_db=snr(reference, estimate),
        f0_rmse_cent=f0.rmse_cent,
        losses=total_loss(phase, natural_phase, kind),
        rtf=rtf(elapsed, duration),
        latency_ms=float(latency),
        no_voicing=f0.no_voicing,
    )


def mean_report(reports):
    """Average a list of :class:`EvalReport` field by field."""
    if not reports:
        raise ValueError("no reports to average")

    def avg(get):
        return float(np.mean([get(r) for r in reports]))

    return EvalReport(
        snr_db=avg(lambda r: r.snr_db),
        f0_rmse_cent=avg(lambda r: r.f0_rmse_cent),
        losses=LossReport(
            ip=avg(lambda r: r.losses.ip),
            gd=avg(lambda r: r.losses.gd),
            iaf=avg(lambda r: r.losses.iaf),
            total=avg(lambda r: r.losses.total),
        ),
        rtf=avg(lambda r: r.rtf),
        latency_ms=avg(lambda r: r.latency_ms),
        no_voicing=all(r.no_voicing for r in reports),
    )


def spectral_convergence_db(amplitude, waveform, cfg=StftConfig()):
    """``20 log10 |A - |STFT(x)|| / |A|``: how well ``waveform`` matches ``amplitude``.

    Floored at -300 dB for exact matches.
    """
    amplitude = np.asarray(amplitude, dtype=np.float64)
    n = (amplitude.shape[0] - 1) * cfg.hop_len
    rebuilt = np.abs(stft(fit_length(np.asarray(waveform, dtype=np.float64), n), cfg))
    ratio = np.linalg.norm(amplitude - rebuilt) / np.linalg.norm(amplitude)
    return float(20 * np.log10(max(ratio, 1e-15)))
