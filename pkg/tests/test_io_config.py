import wave

import numpy as np
import pytest

from phaserecon import config
from phaserecon.corpus import mini_test_set, synth_corpus, synth_utterance
from phaserecon.manifest import Entry, read_manifest, write_manifest
from phaserecon.metrics import track_f0
from phaserecon.nnet import receptive_future
from phaserecon.wavio import read_wav, write_wav


def test_wav_roundtrip(tmp_path):
    x = np.linspace(-0.9, 0.9, 1001)
    write_wav(tmp_path / "a.wav", x)
    y, rate = read_wav(tmp_path / "a.wav")
    assert rate == 16000
    np.testing.assert_allclose(y, x, atol=1 / 32768)


def test_wav_clips_and_rejects(tmp_path):
    write_wav(tmp_path / "c.wav", np.array([2.0, -2.0]))
    y, _ = read_wav(tmp_path / "c.wav")
    assert y.tolist() == [32767 / 32768, -1.0]
    with pytest.raises(ValueError):
        write_wav(tmp_path / "n.wav", np.array([np.nan]))
    write_wav(tmp_path / "r.wav", np.zeros(10), rate=8000)
    with pytest.raises(ValueError, match="8000"):
        read_wav(tmp_path / "r.wav")
    assert read_wav(tmp_path / "r.wav", expected_rate=None)[1] == 8000
    with wave.open(str(tmp_path / "s.wav"), "wb") as fh:
        fh.setnchannels(2)
        fh.setsampwidth(2)
        fh.setframerate(16000)
        fh.writeframes(b"\0" * 8)
    with pytest.raises(ValueError, match="mono"):
        read_wav(tmp_path / "s.wav")


def test_manifest(tmp_path):
    for name in ("a.wav", "b.wav", "c.wav"):
        write_wav(tmp_path / name, np.zeros(10))
    m = tmp_path / "list.txt"
    m.write_text("# corpus\na.wav\ttrain\nb.wav\ttest\n\nc.wav\n", encoding="utf-8")
    entries = read_manifest(m)
    assert [e.split for e in entries] == ["train", "test", ""]
    assert entries[0].path == tmp_path / "a.wav"
    assert [e.path.name for e in read_manifest(m, "test")] == ["b.wav", "c.wav"]
    out = tmp_path / "copy.txt"
    write_manifest(out, entries)
    assert read_manifest(out) == entries


def test_manifest_errors(tmp_path):
    m = tmp_path / "list.txt"
    m.write_text("missing.wav\n")
    with pytest.raises(FileNotFoundError):
        read_manifest(m)
    write_wav(tmp_path / "a.wav", np.zeros(10))
    m.write_text("a.wav\tholdout\n")
    with pytest.raises(ValueError, match="split"):
        read_manifest(m)


def test_paper_preset():
    s = config.preset("paper")
    assert config.stft_config(s).n_bins == 513
    mc = config.model_config(s)
    assert (mc.channels, mc.kernel_sizes, mc.dilations) == (512, (3, 7, 11), ((1, 3, 5),) * 3)
    assert receptive_future(mc) == 66
    tc = config.train_config(s)
    assert (tc.lr, tc.beta1, tc.beta2, tc.lr_decay_per_epoch, tc.batch_size, tc.segment_samples) == (
        2e-4,
        0.8,
        0.99,
        0.999,
        16,
        8000,
    )
    assert config.model_config(config.preset("causal")).causal
    with pytest.raises(ValueError):
        config.preset("huge")


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# tiny run\nchannels = 16\nkernel-sizes = 3\ndilations = 1,2\ncausal = yes\nlr=1e-3  # faster\n")
    s = config.load(str(path))
    mc = config.model_config(s)
    assert (mc.channels, mc.kernel_sizes, mc.dilations, mc.causal) == (16, (3,), ((1, 2),), True)
    assert config.train_config(s).lr == 1e-3
    path.write_text("channels 16\n")
    with pytest.raises(ValueError):
        config.load(str(path))
    path.write_text("causal = maybe\n")
    with pytest.raises(ValueError):
        config.model_config(config.load(str(path)))


def test_synthetic_corpus_is_deterministic_and_voiced():
    a = synth_utterance(5, duration=1.0)
    assert np.array_equal(a, synth_utterance(5, duration=1.0))
    assert a.size == 16000 and np.max(np.abs(a)) == pytest.approx(0.5)
    assert not np.array_equal(a, synth_utterance(6, duration=1.0))
    f0 = track_f0(a)
    assert np.mean(f0 > 0) > 0.4
    voiced = f0[f0 > 0]
    assert 60 < np.median(voiced) < 400
    assert len(synth_corpus(3, seed=1, duration=0.5)) == 3


def test_mini_test_set():
    clips = mini_test_set()
    assert len(clips) == 10
    names = [n for n, _ in clips]
    assert names == sorted(names)
    for _, w in clips:
        assert w.size % 80 == 0 and w.size >= 16000
