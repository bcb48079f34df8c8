"""16-bit PCM mono WAV reading and writing."""
import wave

import numpy as np

EXPECTED_RATE = 16000


def read_wav(path, expected_rate=EXPECTED_RATE):
    """Read a PCM16 mono WAV as float64 samples in [-1, 1).

    ``expected_rate=None`` accepts any sample rate.  Returns ``(samples, rate)``.
    """
    with wave.open(str(path), "rb") as fh:
        if fh.getsampwidth() != 2:
            raise ValueError(f"{path}: only 16-bit PCM is supported")
        if fh.getnchannels() != 1:
            raise ValueError(f"{path}: only mono audio is supported")
        rate = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def write_wav(path, samples, rate=EXPECTED_RATE):
    """Write float samples as PCM16, clipping to the representable range."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("only mono audio is supported")
    if not np.all(np.isfinite(samples)):
        raise ValueError("refusing to write non-finite samples")
    pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(rate))
        fh.writeframes(pcm.tobytes())
