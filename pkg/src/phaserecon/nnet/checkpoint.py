"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"NSPP" | u32 version | u32 header_len | header (UTF-8 key=value lines)
    then per parameter:
    u32 name_len | name (UTF-8) | u8 rank | u64 dim * rank | float32 LE data
"""
import struct

import numpy as np
import torch

from .model import ModelConfig, NsppModel

MAGIC = b"NSPP"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _format_config(cfg):
    dil = ";".join(",".join(str(d) for d in row) for row in cfg.dilations)
    lines = [
        "byte_order=little",
        f"n_bins={cfg.n_bins}",
        f"channels={cfg.channels}",
        f"input_kernel={cfg.input_kernel}",
        f"kernel_sizes={','.join(str(k) for k in cfg.kernel_sizes)}",
        f"dilations={dil}",
        f"output_kernel={cfg.output_kernel}",
        f"causal={int(cfg.causal)}",
        f"lrelu_slope={cfg.lrelu_slope!r}",
        f"use_pea={int(cfg.use_pea)}",
    ]
    return "\n".join(lines) + "\n"


def _parse_config(text):
    kv = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if "=" not in line:
            raise CheckpointError(f"malformed header line {line!r}")
        key, value = line.split("=", 1)
        kv[key.strip()] = value.strip()
    if kv.pop("byte_order", "little") != "little":
        raise CheckpointError("big-endian checkpoints are not supported")
    try:
        return ModelConfig(
            n_bins=int(kv["n_bins"]),
            channels=int(kv["channels"]),
            input_kernel=int(kv["input_kernel"]),
            kernel_sizes=tuple(int(k) for k in kv["kernel_sizes"].split(",")),
            dilations=tuple(tuple(int(d) for d in row.split(",")) for row in kv["dilations"].split(";")),
            output_kernel=int(kv["output_kernel"]),
            causal=bool(int(kv["causal"])),
            lrelu_slope=float(kv["lrelu_slope"]),
            use_pea=bool(int(kv.get("use_pea", "1"))),
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"bad model header: {exc}") from exc


def save_checkpoint(model, path):
    header = _format_config(model.config).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for name, tensor in model.state_dict().items():
            arr = tensor.detach().cpu().numpy().astype("<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    """Load a model written by :func:`save_checkpoint`."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic: not an NSPP checkpoint")
    (version,) = r.unpack("<I")
    if version == VERSION << 24:
        raise CheckpointError("big-endian checkpoints are not supported")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (header_len,) = r.unpack("<I")
    try:
        header = r.take(header_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CheckpointError("header is not UTF-8") from exc
    cfg = _parse_config(header)
    model = NsppModel(cfg)
    expected = {k: tuple(v.shape) for k, v in model.state_dict().items()}

    state = {}
    while r.pos < len(r.data):
        (name_len,) = r.unpack("<I")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<B")
        dims = r.unpack(f"<{rank}Q")
        if name not in expected:
            raise CheckpointError(f"unexpected tensor {name!r} for this configuration")
        if tuple(dims) != expected[name]:
            raise CheckpointError(f"tensor {name!r} has shape {dims}, config implies {expected[name]}")
        count = int(np.prod(dims, dtype=np.int64))
        values = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims)
        state[name] = torch.from_numpy(values.astype(np.float32))
    missing = set(expected) - set(state)
    if missing:
        raise CheckpointError(f"truncated checkpoint: missing tensors {sorted(missing)}")
    model.load_state_dict(state)
    return model
