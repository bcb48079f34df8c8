import math
import struct

import numpy as np
import pytest
import torch

from oracles import atan2_phase, gradcheck_model, naive_conv
from phaserecon.nnet import (
    CheckpointError,
    ModelConfig,
    NsppModel,
    StreamState,
    conv1d,
    latency_ms,
    load_checkpoint,
    paper_config,
    phase_formula,
    receptive_future,
    save_checkpoint,
    stream,
    stream_step,
    tiny_config,
    zeta,
)

SMALL = ModelConfig(n_bins=16, channels=6, input_kernel=3, kernel_sizes=(3, 5), dilations=((1, 2), (1, 3)), output_kernel=3)


def test_zeta_and_latency():
    assert zeta(7, 1) == 3 and zeta(11, 5) == 25 and zeta(3, 3) == 3
    cfg = paper_config()
    assert receptive_future(cfg) == 66
    assert latency_ms(cfg, 5.0, 20.0) == 330.0
    assert receptive_future(paper_config(causal=True)) == 0
    assert latency_ms(paper_config(causal=True), 5.0, 20.0) == 20.0


@pytest.mark.parametrize("causal", [False, True])
@pytest.mark.parametrize("dilation", [1, 3])
def test_conv_matches_loop_oracle(causal, dilation):
    rng = np.random.default_rng(dilation)
    x = rng.standard_normal((3, 11))
    w = rng.standard_normal((2, 3, 5))
    b = rng.standard_normal(2)
    got = conv1d(torch.from_numpy(x)[None], torch.from_numpy(w), torch.from_numpy(b), dilation, causal)[0]
    np.testing.assert_allclose(got.numpy(), naive_conv(x, w, b, dilation, causal), atol=1e-12)


def test_phase_formula_matches_atan2_and_range():
    rng = np.random.default_rng(0)
    r = rng.standard_normal(20000)
    i = rng.standard_normal(20000)
    r[:4] = [0.0, -1.0, 0.0, -2.0]
    i[:4] = [0.0, 0.0, -1.0, -1e-200]
    got = phase_formula(torch.from_numpy(r), torch.from_numpy(i)).numpy()
    np.testing.assert_allclose(got, atan2_phase(r, i), atol=1e-12)
    assert np.all((got > -math.pi) & (got <= math.pi))


def test_phase_formula_gradient():
    r = torch.tensor([1.0, -2.0, 0.5, 0.0], dtype=torch.float64, requires_grad=True)
    i = torch.tensor([1.0, 0.5, -3.0, 0.0], dtype=torch.float64, requires_grad=True)
    phase_formula(r, i).sum().backward()
    d = r.detach() ** 2 + i.detach() ** 2
    expect_r = torch.where(d > 0, -i.detach() / d, torch.zeros_like(d))
    expect_i = torch.where(d > 0, r.detach() / d, torch.zeros_like(d))
    torch.testing.assert_close(r.grad, expect_r)
    torch.testing.assert_close(i.grad, expect_i)


def test_forward_shapes_and_range():
    model = NsppModel(SMALL, seed=0)
    x = torch.randn(2, 9, 16)
    tr = model(x)
    assert tr.phase.shape == (2, 9, 16)
    assert len(tr.block_outs) == 2 and tr.block_outs[0].shape == (2, 9, 6)
    assert tr.input_conv_out.shape == (2, 9, 6)
    assert bool(((tr.phase > -math.pi) & (tr.phase <= math.pi)).all())
    single = model(x[0])
    torch.testing.assert_close(single.phase, tr.phase[0])
    with pytest.raises(ValueError):
        model(torch.randn(9, 15))


def test_initialisation_is_seeded():
    a = NsppModel(SMALL, seed=3)
    b = NsppModel(SMALL, seed=3)
    c = NsppModel(SMALL, seed=4)
    for (n, p), (_, q), (_, r) in zip(a.named_parameters(), b.named_parameters(), c.named_parameters()):
        assert torch.equal(p, q)
        if n.endswith("weight"):
            assert not torch.equal(p, r)
            assert abs(p.std().item() - 0.01) < 0.005
        else:
            assert torch.all(p == 0)


def test_parameter_count():
    cfg = tiny_config(n_bins=10, channels=4)
    model = NsppModel(cfg)
    # input conv + P*Q*(dilated + plain) + two output convs
    expect = 10 * 4 * 7 + 4
    for k, row in zip(cfg.kernel_sizes, cfg.dilations):
        expect += len(row) * 2 * (4 * 4 * k + 4)
    expect += 2 * (4 * 10 * 7 + 10)
    assert model.num_parameters() == expect


def test_without_parallel_head_outputs_are_unbounded():
    model = NsppModel(SMALL.replace(use_pea=False), seed=0)
    with torch.no_grad():
        model.out_phase.bias.fill_(5.0)
    assert model(torch.zeros(4, 16)).phase.max() > math.pi


def test_gradients_match_finite_differences():
    worst, count = gradcheck_model(seed=0)
    assert count == 412
    assert worst < 1e-4


def test_non_finite_forward_raises():
    model = NsppModel(SMALL)
    with pytest.raises(FloatingPointError):
        model(torch.full((4, 16), float("nan")))


def test_causal_model_ignores_future():
    model = NsppModel(SMALL.replace(causal=True), seed=1)
    x = torch.randn(30, 16)
    base = model(x).phase
    y = x.clone()
    y[20:] += torch.randn(10, 16) * 5
    pert = model(y).phase
    assert torch.equal(base[:20], pert[:20])
    assert not torch.equal(base[20:], pert[20:])


def test_noncausal_model_looks_ahead():
    model = NsppModel(SMALL, seed=1)
    x = torch.randn(30, 16)
    y = x.clone()
    y[20] += 3.0
    assert not torch.equal(model(x).phase[19], model(y).phase[19])


def test_streaming_matches_batch():
    # float64: the phase formula amplifies summation-order noise near the origin
    model = NsppModel(SMALL.replace(causal=True), seed=2).double()
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn_like(p) * 0.2)
    x = np.random.default_rng(0).standard_normal((40, 16))
    np.testing.assert_allclose(stream(model, x), model.predict_phase(x), atol=1e-10)


def test_stream_state_reset_and_checks():
    model = NsppModel(SMALL.replace(causal=True))
    state = StreamState(model)
    frame = np.ones(16)
    first = stream_step(model, state, frame)
    stream_step(model, state, frame * 2)
    state.reset()
    np.testing.assert_array_equal(stream_step(model, state, frame), first)
    assert state.frames_seen == 1
    with pytest.raises(ValueError):
        StreamState(NsppModel(SMALL))
    with pytest.raises(ValueError):
        stream_step(NsppModel(SMALL.replace(causal=True)), state, frame)
    with pytest.raises(ValueError):
        stream_step(model, state, np.ones(5))


def test_checkpoint_roundtrip(tmp_path):
    model = NsppModel(SMALL.replace(use_pea=False, causal=True), seed=5)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    back = load_checkpoint(path)
    assert back.config == model.config
    for (n, p), (m, q) in zip(model.state_dict().items(), back.state_dict().items()):
        assert n == m and torch.equal(p, q)
    data = path.read_bytes()
    assert data[:4] == b"NSPP"
    assert struct.unpack("<I", data[4:8])[0] == 1


def _corrupt(tmp_path, mutate):
    path = tmp_path / "m.ckpt"
    save_checkpoint(NsppModel(SMALL), path)
    data = bytearray(path.read_bytes())
    path.write_bytes(bytes(mutate(data)))
    return path


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: b"XXXX" + d[4:], "magic"),
        (lambda d: d[:4] + struct.pack(">I", 1) + d[8:], "big-endian"),
        (lambda d: d[:4] + struct.pack("<I", 7) + d[8:], "version"),
        (lambda d: d[:-10], "truncated"),
        (lambda d: d[:30], "truncated"),
        (lambda d: d.replace(b"channels=6", b"channels=7"), "shape"),
        (lambda d: d.replace(b"byte_order=little", b"byte_order=big   "), "big-endian"),
    ],
)
def test_checkpoint_corruption(tmp_path, mutate, message):
    with pytest.raises(CheckpointError, match=message):
        load_checkpoint(_corrupt(tmp_path, mutate))


def test_checkpoint_missing_tensor(tmp_path):
    model = NsppModel(SMALL)
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    data = path.read_bytes()
    # drop the final tensor record (out_imag.bias: 16 float32 values)
    name = b"out_imag.bias"
    cut = data.rfind(name) - 4
    path.write_bytes(data[:cut])
    with pytest.raises(CheckpointError, match="missing"):
        load_checkpoint(path)


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(kernel_sizes=(4,), dilations=((1,),))
    with pytest.raises(ValueError):
        ModelConfig(kernel_sizes=(3, 5), dilations=((1, 2),))
    with pytest.raises(ValueError):
        ModelConfig(kernel_sizes=(3, 5), dilations=((1, 2), (1,)))
    with pytest.raises(ValueError):
        ModelConfig(channels=0)
