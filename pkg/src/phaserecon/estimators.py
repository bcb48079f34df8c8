"""scikit-learn style wrappers: every estimator maps amplitude -> phase via ``predict``."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import iterative
from .antiwrap import AntiWrapKind, total_loss
from .nnet import (
    ModelConfig,
    NsppModel,
    latency_ms,
    load_checkpoint,
    receptive_future,
    save_checkpoint,
    stream,
)
from .spectral import StftConfig, log_amplitude, split, stft
from .train import TrainConfig, evaluate_losses, fit, warm_start


def check_amplitude(amplitude, n_bins=None):
    """Validate an amplitude spectrogram: 2-D, finite, non-negative, float64."""
    a = np.asarray(amplitude, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a (frames, bins) amplitude spectrogram, got shape {a.shape}")
    if n_bins is not None and a.shape[1] != n_bins:
        raise ValueError(f"expected {n_bins} bins, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("amplitude contains non-finite values")
    if np.any(a < 0):
        raise ValueError("amplitude must be non-negative")
    return a


def check_waveforms(X):
    """Validate a list of 1-D waveforms."""
    if isinstance(X, np.ndarray) and X.ndim == 1:
        X = [X]
    out = []
    for w in X:
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("each waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)):
            raise ValueError("waveform contains non-finite samples")
        out.append(w)
    if not out:
        raise ValueError("no waveforms given")
    return out


class _SpectralParams:
    def _stft_config(self):
        return StftConfig(self.window_len, self.hop_len, self.fft_len, sample_rate=self.sample_rate)

    def fit(self, X=None, y=None):
        """No training needed; validates the analysis configuration."""
        self.stft_config_ = self._stft_config()
        return self

    def score(self, X, y=None):
        """Negative mean IP+GD+IAF loss against the natural phase of waveforms ``X``."""
        cfg = self._stft_config()
        losses = []
        for w in check_waveforms(X):
            amp, phase = split(stft(w, cfg))
            losses.append(total_loss(self.predict(amp), phase).total)
        return -float(np.mean(losses))


class GriffinLim(_SpectralParams, BaseEstimator):
    """Griffin-Lim phase estimation with zero-phase initialisation."""

    def __init__(self, n_iter=100, window_len=320, hop_len=80, fft_len=1024, sample_rate=16000):
        self.n_iter = n_iter
        self.window_len = window_len
        self.hop_len = hop_len
        self.fft_len = fft_len
        self.sample_rate = sample_rate

    def predict(self, amplitude):
        cfg = self._stft_config()
        a = check_amplitude(amplitude, cfg.n_bins)
        return iterative.gla(a, iterative.IterativeConfig(self.n_iter, stft=cfg))


class RAAR(_SpectralParams, BaseEstimator):
    """Relaxed averaged alternating reflections (``literal`` drops the beta/2 factor)."""

    def __init__(
        self, n_iter=100, beta=0.9, literal=False, window_len=320, hop_len=80, fft_len=1024, sample_rate=16000
    ):
        self.n_iter = n_iter
        self.beta = beta
        self.literal = literal
        self.window_len = window_len
        self.hop_len = hop_len
        self.fft_len = fft_len
        self.sample_rate = sample_rate

    def predict(self, amplitude):
        cfg = self._stft_config()
        a = check_amplitude(amplitude, cfg.n_bins)
        return iterative.raar(a, iterative.IterativeConfig(self.n_iter, self.beta, cfg), literal=self.literal)


class ZeroPhase(_SpectralParams, BaseEstimator):
    """Baseline predicting zero phase everywhere."""

    latency_ms = 0.0

    def __init__(self, window_len=320, hop_len=80, fft_len=1024, sample_rate=16000):
        self.window_len = window_len
        self.hop_len = hop_len
        self.fft_len = fft_len
        self.sample_rate = sample_rate

    def predict(self, amplitude):
        return np.zeros_like(check_amplitude(amplitude))


class NeuralPhasePredictor(BaseEstimator):
    """Convolutional phase predictor trained with anti-wrapping losses.

    ``fit`` takes a list of waveforms; natural phase targets are derived
    from them.  When ``teacher`` (a fitted non-causal predictor or an
    :class:`NsppModel`) is given, the model must be causal and is trained
    with the added distillation loss weighted by ``alpha_kd``.
    """

    def __init__(
        self,
        channels=512,
        input_kernel=7,
        kernel_sizes=(3, 7, 11),
        dilations=((1, 3, 5), (1, 3, 5), (1, 3, 5)),
        output_kernel=7,
        causal=False,
        lrelu_slope=0.1,
        use_pea=True,
        lr=2e-4,
        beta1=0.8,
        beta2=0.99,
        weight_decay=0.01,
        lr_decay_per_epoch=0.999,
        batch_size=16,
        segment_samples=8000,
        epochs=1,
        max_steps=0,
        loss_kind="line",
        use_ip=True,
        use_gd=True,
        use_iaf=True,
        alpha_kd=1.0,
        teacher=None,
        warm_start=False,
        seed=0,
        window_len=320,
        hop_len=80,
        fft_len=1024,
        sample_rate=16000,
    ):
        self.channels = channels
        self.input_kernel = input_kernel
        self.kernel_sizes = kernel_sizes
        self.dilations = dilations
        self.output_kernel = output_kernel
        self.causal = causal
        self.lrelu_slope = lrelu_slope
        self.use_pea = use_pea
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.weight_decay = weight_decay
        self.lr_decay_per_epoch = lr_decay_per_epoch
        self.batch_size = batch_size
        self.segment_samples = segment_samples
        self.epochs = epochs
        self.max_steps = max_steps
        self.loss_kind = loss_kind
        self.use_ip = use_ip
        self.use_gd = use_gd
        self.use_iaf = use_iaf
        self.alpha_kd = alpha_kd
        self.teacher = teacher
        self.warm_start = warm_start
        self.seed = seed
        self.window_len = window_len
        self.hop_len = hop_len
        self.fft_len = fft_len
        self.sample_rate = sample_rate

    def _stft_config(self):
        return StftConfig(self.window_len, self.hop_len, self.fft_len, sample_rate=self.sample_rate)

    def _model_config(self):
        return ModelConfig(
            n_bins=self.fft_len // 2 + 1,
            channels=self.channels,
            input_kernel=self.input_kernel,
            kernel_sizes=tuple(self.kernel_sizes),
            dilations=tuple(tuple(r) for r in self.dilations),
            output_kernel=self.output_kernel,
            causal=self.causal,
            lrelu_slope=self.lrelu_slope,
            use_pea=self.use_pea,
        )

    def _train_config(self):
        return TrainConfig(
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            weight_decay=self.weight_decay,
            lr_decay_per_epoch=self.lr_decay_per_epoch,
            batch_size=self.batch_size,
            segment_samples=self.segment_samples,
            epochs=self.epochs,
            max_steps=self.max_steps,
            alpha_kd=self.alpha_kd,
            loss_kind=AntiWrapKind(self.loss_kind),
            use_ip=self.use_ip,
            use_gd=self.use_gd,
            use_iaf=self.use_iaf,
            seed=self.seed,
        )

    def _teacher_model(self):
        t = self.teacher
        if t is None or isinstance(t, NsppModel):
            return t
        check_is_fitted(t, "model_")
        return t.model_

    def fit(self, X, y=None, callback=None):
        """Train on waveforms ``X``; ``callback(step, report)`` runs after each step."""
        waveforms = check_waveforms(X)
        self.model_ = NsppModel(self._model_config(), seed=self.seed)
        teacher = self._teacher_model()
        if teacher is not None and self.warm_start:
            warm_start(self.model_, teacher)
        self.history_ = fit(
            self.model_, waveforms, self._train_config(), self._stft_config(), teacher=teacher, callback=callback
        )
        return self

    def predict(self, amplitude):
        """Wrapped phase for an amplitude spectrogram (frames, bins)."""
        check_is_fitted(self, "model_")
        a = check_amplitude(amplitude, self.model_.config.n_bins)
        return self.model_.predict_phase(log_amplitude(a))

    def predict_stream(self, amplitude):
        """Frame-by-frame prediction (causal models only)."""
        check_is_fitted(self, "model_")
        a = check_amplitude(amplitude, self.model_.config.n_bins)
        return stream(self.model_, log_amplitude(a))

    def losses(self, X):
        """Mean IP/GD/IAF over whole waveforms ``X``."""
        check_is_fitted(self, "model_")
        return evaluate_losses(self.model_, check_waveforms(X), self._stft_config(), AntiWrapKind(self.loss_kind))

    def score(self, X, y=None):
        """Negative mean total phase loss (higher is better)."""
        return -self.losses(X).total

    @property
    def latency_ms(self):
        cfg = self._stft_config()
        return latency_ms(self._model_config(), cfg.hop_ms, cfg.window_ms)

    @property
    def future_frames(self):
        return receptive_future(self._model_config())

    def save(self, path):
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path)

    @classmethod
    def from_model(cls, model, **params):
        """Wrap an already-built :class:`NsppModel`."""
        c = model.config
        est = cls(
            channels=c.channels,
            input_kernel=c.input_kernel,
            kernel_sizes=c.kernel_sizes,
            dilations=c.dilations,
            output_kernel=c.output_kernel,
            causal=c.causal,
            lrelu_slope=c.lrelu_slope,
            use_pea=c.use_pea,
            fft_len=(c.n_bins - 1) * 2,
            **params,
        )
        est.model_ = model
        return est

    @classmethod
    def load(cls, path, **params):
        return cls.from_model(load_checkpoint(path), **params)
