import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from phaserecon.antiwrap import (
    AntiWrapKind,
    LossSwitches,
    antiwrap,
    gd_loss,
    iaf_loss,
    ip_loss,
    phase_losses,
    total_loss,
    wrap,
)

KINDS = list(AntiWrapKind)


@pytest.mark.parametrize("kind", KINDS)
def test_fixed_points(kind):
    assert antiwrap(kind, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert antiwrap(kind, math.pi) == pytest.approx(math.pi, abs=1e-15)
    assert antiwrap(kind, -math.pi) == pytest.approx(math.pi, abs=1e-15)


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=200, deadline=None)
@given(x=st.floats(-50, 50, allow_nan=False), m=st.integers(-3, 3))
def test_even_and_periodic(kind, x, m):
    f = antiwrap(kind, x)
    assert antiwrap(kind, -x) == pytest.approx(f, abs=1e-9)
    assert antiwrap(kind, x + 2 * math.pi * m) == pytest.approx(f, abs=1e-9)
    assert 0.0 - 1e-12 <= f <= math.pi + 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_monotone_on_half_period(kind):
    x = np.linspace(0, math.pi, 10001)
    assert np.all(np.diff(antiwrap(kind, x)) >= -1e-12)


def test_closed_forms():
    x = 1.0
    assert antiwrap("line", x) == pytest.approx(1.0)
    assert antiwrap("log", x) == pytest.approx(math.pi / math.log(math.pi + 1) * math.log(2.0))
    assert antiwrap("cub", x) == pytest.approx(4 / math.pi**2 * (1 - math.pi / 2) ** 3 + math.pi / 2)
    assert antiwrap("para", x) == pytest.approx(1 / math.pi)
    assert antiwrap("cos", x) == pytest.approx(-math.pi / 2 * math.cos(1.0) + math.pi / 2)
    # line is |x - 2*pi*round(x / 2*pi)|
    assert antiwrap("line", 5.0) == pytest.approx(2 * math.pi - 5.0)


def test_numpy_and_torch_agree():
    x = np.linspace(-10, 10, 101)
    for kind in KINDS:
        np.testing.assert_allclose(antiwrap(kind, torch.from_numpy(x)).numpy(), antiwrap(kind, x), atol=1e-12)


def test_wrap_range():
    x = np.linspace(-20, 20, 1001)
    w = wrap(x)
    assert np.all(np.abs(w) <= math.pi + 1e-12)
    np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-12)


def test_unknown_kind():
    with pytest.raises(ValueError):
        antiwrap("sawtooth", 1.0)


def test_losses_zero_for_identical_and_2pi_shift():
    rng = np.random.default_rng(0)
    p = rng.uniform(-math.pi, math.pi, (10, 12))
    for fn in (ip_loss, gd_loss, iaf_loss):
        assert fn(p, p) == 0
        assert fn(p + 2 * math.pi, p) == pytest.approx(0.0, abs=1e-12)


def test_loss_oracles():
    rng = np.random.default_rng(1)
    p = rng.uniform(-math.pi, math.pi, (7, 9))
    q = rng.uniform(-math.pi, math.pi, (7, 9))

    def aw(d):
        return np.abs(np.angle(np.exp(1j * d)))

    assert ip_loss(p, q) == pytest.approx(aw(p - q).mean())
    d = p - q
    assert gd_loss(p, q) == pytest.approx(aw(d[:, :-1] - d[:, 1:]).mean())
    assert iaf_loss(p, q) == pytest.approx(aw(d[:-1] - d[1:]).mean())


def test_random_baseline_is_half_pi():
    # uniform independent phases: the expected anti-wrapped error is pi/2
    rng = np.random.default_rng(2)
    p = rng.uniform(-math.pi, math.pi, (400, 400))
    q = rng.uniform(-math.pi, math.pi, (400, 400))
    rep = total_loss(p, q)
    for v in (rep.ip, rep.gd, rep.iaf):
        assert v == pytest.approx(math.pi / 2, abs=0.01)
    assert rep.total == pytest.approx(rep.ip + rep.gd + rep.iaf)


def test_switches():
    rng = np.random.default_rng(3)
    p, q = rng.uniform(-3, 3, (2, 5, 6))
    total, parts = phase_losses(p, q, switches=LossSwitches(use_ip=False))
    assert set(parts) == {"gd", "iaf"}
    assert total == pytest.approx(parts["gd"] + parts["iaf"])
    rep = total_loss(p, q, switches=LossSwitches(use_gd=False, use_iaf=False))
    assert rep.gd == 0 and rep.iaf == 0 and rep.total == rep.ip
    with pytest.raises(ValueError):
        phase_losses(p, q, switches=LossSwitches(False, False, False))


def test_shape_mismatch_and_degenerate():
    with pytest.raises(ValueError):
        ip_loss(np.zeros((3, 4)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        gd_loss(np.zeros((3, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        iaf_loss(np.zeros((1, 3)), np.zeros((1, 3)))


def test_batched_torch_losses_are_differentiable():
    p = torch.zeros(2, 4, 5, requires_grad=True)
    q = torch.ones(2, 4, 5)
    total, _ = phase_losses(p, q)
    total.backward()
    assert p.grad is not None and torch.isfinite(p.grad).all()
