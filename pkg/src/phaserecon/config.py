"""Named presets and ``key = value`` configuration files.

Settings are a flat mapping whose keys mirror the CLI flags with dashes
replaced by underscores.  Values may be strings (as read from a file) or
already-typed Python values.
"""
from .antiwrap import AntiWrapKind
from .nnet.model import ModelConfig
from .spectral import StftConfig
from .train import TrainConfig

PAPER = {
    "sample_rate": 16000,
    "window_len": 320,
    "hop_len": 80,
    "fft_len": 1024,
    "channels": 512,
    "input_kernel": 7,
    "kernel_sizes": "3,7,11",
    "dilations": "1,3,5;1,3,5;1,3,5",
    "output_kernel": 7,
    "causal": False,
    "lrelu_slope": 0.1,
    "use_pea": True,
    "lr": 2e-4,
    "beta1": 0.8,
    "beta2": 0.99,
    "weight_decay": 0.01,
    "lr_decay_per_epoch": 0.999,
    "batch_size": 16,
    "segment_samples": 8000,
    "alpha_kd": 1.0,
    "loss_kind": "line",
}

PRESETS = {
    "paper": PAPER,
    "causal": {**PAPER, "causal": True},
    "tiny": {**PAPER, "channels": 32, "kernel_sizes": "3,7", "dilations": "1,3;1,3", "lr": 2e-3},
    "tiny_causal": {
        **PAPER,
        "channels": 32,
        "kernel_sizes": "3,7",
        "dilations": "1,3;1,3",
        "lr": 2e-3,
        "causal": True,
    },
}


def preset(name):
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            settings[key.strip().replace("-", "_")] = value.strip()
    return settings


def load(spec):
    """A preset name or a config file path."""
    if spec in PRESETS:
        return preset(spec)
    return {**PAPER, **read_config_file(spec)}


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _ints(v):
    if isinstance(v, str):
        return tuple(int(x) for x in v.split(",") if x.strip())
    return tuple(int(x) for x in v)


def _rows(v):
    if isinstance(v, str):
        return tuple(_ints(row) for row in v.split(";"))
    return tuple(_ints(row) for row in v)


def stft_config(s):
    return StftConfig(
        window_len=int(s["window_len"]),
        hop_len=int(s["hop_len"]),
        fft_len=int(s["fft_len"]),
        sample_rate=int(s["sample_rate"]),
    )


def model_config(s):
    return ModelConfig(
        n_bins=int(s["fft_len"]) // 2 + 1,
        channels=int(s["channels"]),
        input_kernel=int(s["input_kernel"]),
        kernel_sizes=_ints(s["kernel_sizes"]),
        dilations=_rows(s["dilations"]),
        output_kernel=int(s["output_kernel"]),
        causal=_bool(s["causal"]),
        lrelu_slope=float(s["lrelu_slope"]),
        use_pea=_bool(s["use_pea"]),
    )


def train_config(s):
    return TrainConfig(
        lr=float(s["lr"]),
        beta1=float(s["beta1"]),
        beta2=float(s["beta2"]),
        weight_decay=float(s["weight_decay"]),
        lr_decay_per_epoch=float(s["lr_decay_per_epoch"]),
        batch_size=int(s["batch_size"]),
        segment_samples=int(s["segment_samples"]),
        epochs=int(s.get("epochs", 1)),
        max_steps=int(s.get("max_steps", 0)),
        alpha_kd=float(s["alpha_kd"]),
        loss_kind=AntiWrapKind(s["loss_kind"]),
        use_ip=_bool(s.get("use_ip", True)),
        use_gd=_bool(s.get("use_gd", True)),
        use_iaf=_bool(s.get("use_iaf", True)),
        seed=int(s.get("seed", 0)),
    )
