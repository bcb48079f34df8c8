import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from phaserecon.corpus import synth_corpus
from phaserecon.estimators import GriffinLim, NeuralPhasePredictor, RAAR, ZeroPhase, check_amplitude, check_waveforms
from phaserecon.spectral import split, stft

TINY = dict(channels=4, kernel_sizes=(3,), dilations=((1,),), input_kernel=3, output_kernel=3)


@pytest.fixture(scope="module")
def waves():
    return synth_corpus(3, seed=4, duration=0.5)


def test_check_helpers():
    with pytest.raises(ValueError):
        check_amplitude(np.ones(5))
    with pytest.raises(ValueError):
        check_amplitude(-np.ones((2, 5)))
    with pytest.raises(ValueError):
        check_amplitude(np.ones((2, 5)), n_bins=6)
    with pytest.raises(ValueError):
        check_amplitude(np.full((2, 5), np.inf))
    assert len(check_waveforms(np.ones(10))) == 1
    with pytest.raises(ValueError):
        check_waveforms([])
    with pytest.raises(ValueError):
        check_waveforms([np.ones((2, 2))])


def test_params_and_clone():
    est = RAAR(n_iter=5, beta=0.8)
    assert est.get_params()["beta"] == 0.8
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est
    nn = NeuralPhasePredictor(**TINY)
    assert clone(nn).get_params()["channels"] == 4
    nn.set_params(channels=8)
    assert nn.channels == 8


def test_iterative_estimators(waves):
    amp = split(stft(waves[0]))[0]
    for est in (GriffinLim(n_iter=2), RAAR(n_iter=2), ZeroPhase()):
        phase = est.fit().predict(amp)
        assert phase.shape == amp.shape
        assert np.all(np.abs(phase) <= np.pi)
    assert ZeroPhase().score(waves) < 0
    with pytest.raises(ValueError):
        GriffinLim().predict(np.ones((3, 100)))


def test_neural_fit_predict_save_load(tmp_path, waves):
    est = NeuralPhasePredictor(**TINY, lr=1e-3, batch_size=2, segment_samples=2000, max_steps=2, seed=1)
    with pytest.raises(NotFittedError):
        est.predict(np.ones((3, 513)))
    est.fit(waves)
    assert len(est.history_) == 2
    amp = split(stft(waves[0]))[0]
    phase = est.predict(amp)
    assert phase.shape == amp.shape
    assert est.future_frames == 1 + 2 + 1
    assert est.latency_ms == 20.0
    est.save(tmp_path / "m.ckpt")
    back = NeuralPhasePredictor.load(tmp_path / "m.ckpt")
    np.testing.assert_array_equal(back.predict(amp), phase)
    assert isinstance(est.score(waves), float)


def test_neural_causal_student_and_stream(waves):
    teacher = NeuralPhasePredictor(**TINY, batch_size=2, segment_samples=2000, max_steps=1).fit(waves)
    student = NeuralPhasePredictor(
        **TINY, causal=True, teacher=teacher, warm_start=True, batch_size=2, segment_samples=2000, max_steps=1
    ).fit(waves)
    assert student.history_[0].kd >= 0
    assert student.latency_ms == 20.0
    amp = split(stft(waves[1]))[0]
    np.testing.assert_allclose(student.predict_stream(amp[:20]), student.predict(amp[:20]), atol=1e-5)
    with pytest.raises(ValueError):
        NeuralPhasePredictor(**TINY, teacher=teacher, max_steps=1, segment_samples=2000).fit(waves)
