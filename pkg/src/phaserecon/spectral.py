"""STFT analysis/synthesis, the wrapped-phase formula and phase differences.

All routines work on frame-major matrices: a spectrogram has shape
``(n_frames, n_bins)``.  Computation is done in float64 / complex128.
"""
from dataclasses import dataclass

import numpy as np

WINDOWS = ("hann",)


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters, all in samples.

    The default is 20 ms window / 5 ms hop / 1024-point FFT at 16 kHz.
    """

    window_len: int = 320
    hop_len: int = 80
    fft_len: int = 1024
    window: str = "hann"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise ValueError(f"unsupported window {self.window!r}")
        if not 0 < self.hop_len <= self.window_len <= self.fft_len:
            raise ValueError(
                "need 0 < hop_len <= window_len <= fft_len, got "
                f"{self.hop_len}/{self.window_len}/{self.fft_len}"
            )
        if self.fft_len % 2:
            raise ValueError("fft_len must be even")
        if self.window_len % 2:
            raise ValueError("window_len must be even (centred padding)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def n_bins(self):
        return self.fft_len // 2 + 1

    @property
    def hop_ms(self):
        return 1000.0 * self.hop_len / self.sample_rate

    @property
    def window_ms(self):
        return 1000.0 * self.window_len / self.sample_rate

    def n_frames(self, n_samples):
        return 1 + n_samples // self.hop_len

    def get_window(self):
        # periodic Hann: sums to a constant under 25%/50% hops
        n = np.arange(self.window_len)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.window_len)


def stft(x, cfg=StftConfig()):
    """Centred one-sided STFT.

    The signal is reflect-padded by ``window_len // 2`` on both sides so
    frame ``f`` is centred on sample ``f * hop_len``.  Each frame is
    Hann-windowed and zero-padded at the end to ``fft_len``.

    Returns a complex array of shape ``(n_frames, n_bins)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D waveform, got shape {x.shape}")
    if x.size == 0:
        raise ValueError("empty waveform")
    if not np.all(np.isfinite(x)):
        raise ValueError("waveform contains non-finite samples")
    half = cfg.window_len // 2
    n_frames = cfg.n_frames(x.size)
    if x.size <= half:
        # reflect padding needs more than half a window of signal
        x = np.pad(x, (0, half + 1 - x.size))
    padded = np.pad(x, half, mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, cfg.window_len)[:: cfg.hop_len][:n_frames]
    return np.fft.rfft(frames * cfg.get_window(), n=cfg.fft_len, axis=-1)


def istft(spec, cfg=StftConfig()):
    """Least-squares overlap-add inverse of :func:`stft`.

    Output length is ``(n_frames - 1) * hop_len``.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.n_bins:
        raise ValueError(f"spectrogram shape {spec.shape} does not match {cfg.n_bins} bins")
    n_frames = spec.shape[0]
    if n_frames < 1:
        raise ValueError("spectrogram has no frames")
    win = cfg.get_window()
    frames = np.fft.irfft(spec, n=cfg.fft_len, axis=-1)[:, : cfg.window_len] * win

    total = cfg.window_len + (n_frames - 1) * cfg.hop_len
    out = np.zeros(total)
    wsum = np.zeros(total)
    win_sq = win**2
    for f in range(n_frames):
        start = f * cfg.hop_len
        out[start : start + cfg.window_len] += frames[f]
        wsum[start : start + cfg.window_len] += win_sq

    half = cfg.window_len // 2
    length = (n_frames - 1) * cfg.hop_len
    out = out[half : half + length]
    wsum = wsum[half : half + length]
    if length and wsum.min() < 1e-8:
        raise ValueError("window sum below 1e-8: configuration violates COLA")
    return out / wsum if length else out


def principal_phase(real, imag):
    """Wrapped phase of ``real + j*imag`` in ``(-pi, pi]``.

    Evaluates ``arctan(I/R) - pi/2 * sgn(I) * (sgn(R) - 1)`` where
    ``sgn(x)`` is +1 for ``x >= 0`` and -1 otherwise, with the origin
    mapped to 0.  ``R == 0`` is handled as the limit of ``arctan``.
    """
    r = np.asarray(real, dtype=np.float64)
    i = np.asarray(imag, dtype=np.float64)
    r, i = np.broadcast_arrays(r, i)
    sgn_r = np.where(r >= 0, 1.0, -1.0)
    sgn_i = np.where(i >= 0, 1.0, -1.0)
    zero_r = r == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(zero_r, sgn_i * (np.pi / 2), np.arctan(i / np.where(zero_r, 1.0, r)))
    out = base - (np.pi / 2) * sgn_i * (sgn_r - 1.0)
    # R < 0 with a vanishing negative I rounds to -pi; fold onto +pi
    out = np.where(out <= -np.pi, np.pi, out)
    out = np.where(zero_r & (i == 0), 0.0, out)
    return out if out.ndim else float(out)


def split(spec):
    """Split a complex spectrogram into (amplitude, wrapped phase)."""
    spec = np.asarray(spec)
    return np.abs(spec), principal_phase(spec.real, spec.imag)


def combine(amplitude, phase):
    """``amplitude * exp(j * phase)``."""
    amplitude = np.asarray(amplitude, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    if amplitude.shape != phase.shape:
        raise ValueError(f"shape mismatch: {amplitude.shape} vs {phase.shape}")
    if np.any(amplitude < 0):
        raise ValueError("amplitude must be non-negative")
    return amplitude * (np.cos(phase) + 1j * np.sin(phase))


def diff_freq(phase):
    """Adjacent-bin difference ``p[:, n] - p[:, n+1]``, shape ``(F, N-1)``."""
    phase = np.asarray(phase)
    if phase.ndim != 2 or phase.shape[1] < 2:
        raise ValueError("diff_freq needs at least two bins")
    return phase[:, :-1] - phase[:, 1:]


def diff_time(phase):
    """Adjacent-frame difference ``p[f] - p[f+1]``, shape ``(F-1, N)``."""
    phase = np.asarray(phase)
    if phase.ndim != 2 or phase.shape[0] < 2:
        raise ValueError("diff_time needs at least two frames")
    return phase[:-1] - phase[1:]


def log_amplitude(amplitude, floor=1e-5):
    """Natural log of the amplitude with an additive floor."""
    return np.log(np.asarray(amplitude, dtype=np.float64) + floor)


def reconstruct(amplitude, phase, cfg=StftConfig(), length=None):
    """Waveform from amplitude and phase, trimmed or zero-padded to ``length``."""
    y = istft(combine(amplitude, phase), cfg)
    if length is not None:
        y = fit_length(y, length)
    return y


def fit_length(y, length):
    if y.size >= length:
        return y[:length]
    return np.pad(y, (0, length - y.size))
