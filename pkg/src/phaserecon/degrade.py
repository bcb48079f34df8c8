"""Synthetic amplitude degradations standing in for BWE and synthesis front-ends."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DegradeMode:
    """``none``, ``lowpass_extend`` (param = cutoff bin) or ``mel_roundtrip`` (param = n_mels)."""

    kind: str = "none"
    param: int = 0

    @classmethod
    def parse(cls, text):
        """Parse ``"none"``, ``"lowpass_extend:257"`` or ``"mel_roundtrip:80"``."""
        name, _, value = text.partition(":")
        if name == "none":
            return cls()
        if name not in ("lowpass_extend", "mel_roundtrip"):
            raise ValueError(f"unknown degrade mode {name!r}")
        if not value:
            raise ValueError(f"degrade mode {name!r} needs a parameter, e.g. {name}:80")
        return cls(name, int(value))

    def __str__(self):
        return self.kind if self.kind == "none" else f"{self.kind}:{self.param}"


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_mels, n_bins, sample_rate=16000):
    """Triangular mel filterbank of shape ``(n_mels, n_bins)``."""
    freqs = np.linspace(0.0, sample_rate / 2, n_bins)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2), n_mels + 2))
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(up, down))


def degrade(amplitude, mode, sample_rate=16000):
    """Degraded copy of ``amplitude`` (frames, bins) with identical shape."""
    a = np.asarray(amplitude, dtype=np.float64)
    n_bins = a.shape[-1]
    if mode.kind == "none":
        return a.copy()
    if mode.kind == "lowpass_extend":
        cut = mode.param
        if not 0 < cut < n_bins:
            raise ValueError(f"cutoff bin must lie in (0, {n_bins}), got {cut}")
        out = a.copy()
        width = n_bins - cut
        # mirror the band just below the cutoff upwards, attenuated
        src = cut - 1 - (np.arange(width) % cut)
        out[:, cut:] = 0.1 * a[:, src]
        return out
    if mode.kind == "mel_roundtrip":
        n_mels = mode.param
        if not 0 < n_mels < n_bins:
            raise ValueError(f"n_mels must lie in (0, {n_bins}), got {n_mels}")
        fb = mel_filterbank(n_mels, n_bins, sample_rate)
        return np.maximum(0.0, (a @ fb.T) @ np.linalg.pinv(fb).T)
    raise ValueError(f"unknown degrade mode {mode.kind!r}")
