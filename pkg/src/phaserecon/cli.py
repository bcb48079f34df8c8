"""Command-line interface.

Exit codes: 0 success, 1 runtime or I/O error, 2 usage error.  Errors are
printed to stderr as a single ``error: <kind>: <message>`` line.
"""
import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as config_mod
from .antiwrap import AntiWrapKind
from .degrade import DegradeMode, degrade
from .estimators import GriffinLim, NeuralPhasePredictor, RAAR, ZeroPhase
from .manifest import read_manifest
from .metrics import evaluate, format_rtf, mean_report, spectral_convergence_db
from .nnet import (
    NsppModel,
    latency_ms,
    load_checkpoint,
    receptive_future,
    save_checkpoint,
    stream,
)
from .spectral import log_amplitude, reconstruct, split, stft
from .train import TrainConfig, features, fit, warm_start
from .wavio import read_wav, write_wav

TRAIN_FLAGS = {
    "lr": float,
    "beta1": float,
    "beta2": float,
    "weight_decay": float,
    "lr_decay_per_epoch": float,
    "batch_size": int,
    "segment_samples": int,
    "epochs": int,
    "max_steps": int,
    "alpha_kd": float,
    "loss_kind": str,
    "seed": int,
}
MODEL_FLAGS = {
    "channels": int,
    "input_kernel": int,
    "kernel_sizes": str,
    "dilations": str,
    "output_kernel": int,
    "lrelu_slope": float,
}


class CliError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _settings(args):
    s = config_mod.load(args.config)
    for key in list(TRAIN_FLAGS) + list(MODEL_FLAGS):
        value = getattr(args, key, None)
        if value is not None:
            s[key] = value
    for key in ("use_ip", "use_gd", "use_iaf", "use_pea", "causal"):
        value = getattr(args, key, None)
        if value is not None:
            s[key] = value
    return s


def _read_audio(path, args):
    wav, rate = read_wav(path, None if args.any_rate else 16000)
    return wav, rate


def _load_amplitude(path, args, cfg):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path), None
    if path.suffix == ".npz":
        with np.load(path) as data:
            return data["amplitude"], None
    wav, _ = _read_audio(path, args)
    return split(stft(wav, cfg))[0], wav.size


def _waveforms(args, split_name):
    if args.manifest:
        entries = read_manifest(args.manifest, split_name)
        if not entries:
            raise CliError("data", f"manifest has no {split_name} entries")
        return [(e.path.name, _read_audio(e.path, args)[0]) for e in entries]
    if getattr(args, "inputs", None):
        return [(Path(p).name, _read_audio(p, args)[0]) for p in args.inputs]
    if getattr(args, "synthetic", 0):
        from .corpus import synth_corpus

        return [(f"synth{i:03d}", w) for i, w in enumerate(synth_corpus(args.synthetic, seed=args.seed or 0, duration=3.0))]
    from .corpus import mini_test_set

    return mini_test_set()


def _set_threads(args):
    import torch

    torch.set_num_threads(max(1, args.jobs))


# commands ------------------------------------------------------------------


def cmd_stft(args):
    cfg = config_mod.stft_config(config_mod.load(args.config))
    wav, _ = _read_audio(args.input, args)
    amp, phase = split(stft(wav, cfg))
    np.savez(args.output, amplitude=amp, phase=phase, log_amplitude=log_amplitude(amp))
    print(f"frames={amp.shape[0]} bins={amp.shape[1]}")


def _iterative(args, estimator):
    cfg = config_mod.stft_config(config_mod.load(args.config))
    amp, length = _load_amplitude(args.input, args, cfg)
    phase = estimator.predict(amp)
    write_wav(args.output, reconstruct(amp, phase, cfg, length), cfg.sample_rate)


def cmd_gla(args):
    _iterative(args, GriffinLim(n_iter=args.iters))


def cmd_raar(args):
    _iterative(args, RAAR(n_iter=args.iters, beta=args.beta, literal=args.raar_literal))


def _loss_logger(path):
    fh = open(path, "w", encoding="utf-8") if path else None
    if fh:
        fh.write("# step ip gd iaf kd total\n")

    def log(step, r):
        if fh:
            fh.write(f"{step} {r.ip:.6f} {r.gd:.6f} {r.iaf:.6f} {r.kd:.6f} {r.total:.6f}\n")
            fh.flush()

    return fh, log


def _train_common(args, teacher=None):
    _set_threads(args)
    s = _settings(args)
    stft_cfg = config_mod.stft_config(s)
    model_cfg = config_mod.model_config(s)
    train_cfg = config_mod.train_config(s)
    if teacher is not None:
        model_cfg = model_cfg.replace(causal=True)
    data = [w for _, w in _waveforms(args, "train")]
    model = NsppModel(model_cfg, seed=train_cfg.seed)
    if teacher is not None and args.warm_start:
        warm_start(model, teacher)
    fh, log = _loss_logger(args.log)
    every = args.checkpoint_every

    def callback(step, report):
        log(step, report)
        if every and step % every == 0:
            save_checkpoint(model, args.output)
        if args.verbose and step % 50 == 0:
            print(f"step {step} total={report.total:.4f}", file=sys.stderr)

    try:
        history = fit(model, data, train_cfg, stft_cfg, teacher=teacher, callback=callback)
    finally:
        if fh:
            fh.close()
    save_checkpoint(model, args.output)
    last = history[-1]
    print(f"steps={len(history)} ip={last.ip:.4f} gd={last.gd:.4f} iaf={last.iaf:.4f} kd={last.kd:.4f} total={last.total:.4f}")


def cmd_train(args):
    _train_common(args)


def cmd_distill(args):
    teacher = load_checkpoint(args.teacher)
    if teacher.config.causal:
        raise CliError("config", "teacher must be a non-causal model")
    _train_common(args, teacher=teacher)


def cmd_infer(args):
    model = load_checkpoint(args.checkpoint)
    cfg = config_mod.stft_config(config_mod.load(args.config))
    amp, length = _load_amplitude(args.input, args, cfg)
    log_amp = log_amplitude(amp)
    if args.stream:
        phase = stream(model, log_amp)
    else:
        phase = model.predict_phase(log_amp)
    write_wav(args.output, reconstruct(amp, phase, cfg, length), cfg.sample_rate)


class _Oracle:
    latency_ms = 0.0

    def __init__(self, phase):
        self.phase = phase

    def predict(self, amplitude):
        return self.phase


def _make_estimator(name, args):
    if name == "zero":
        return ZeroPhase()
    if name.startswith("gla"):
        iters = int(name[3:] or args.iters)
        return GriffinLim(n_iter=iters)
    if name.startswith("raar"):
        iters = int(name[4:] or args.iters)
        return RAAR(n_iter=iters, beta=args.beta, literal=args.raar_literal)
    if name == "nspp":
        if not args.checkpoint:
            raise CliError("usage", "estimator nspp needs --checkpoint")
        return NeuralPhasePredictor.load(args.checkpoint)
    raise CliError("usage", f"unknown estimator {name!r}")


def _eval_one(item, name, args, cfg):
    clip, wav = item
    spec = stft(wav, cfg)
    amp, natural = split(spec)
    amp_in = degrade(amp, DegradeMode.parse(args.degrade), cfg.sample_rate)
    est = _Oracle(natural) if name == "oracle" else _make_estimator(name, args)
    rep = evaluate(wav, amp_in, est, cfg, natural_phase=natural)
    rep.extra["sc_db"] = spectral_convergence_db(amp_in, reconstruct(amp_in, est.predict(amp_in), cfg, wav.size), cfg)
    return clip, rep


HEADER = "utterance\testimator\tsnr_db\tf0_rmse_cent\tip\tgd\tiaf\trtf\tlatency_ms"


def _row(clip, name, r):
    return (
        f"{clip}\t{name}\t{r.snr_db:.3f}\t{r.f0_rmse_cent:.2f}\t{r.losses.ip:.4f}\t{r.losses.gd:.4f}"
        f"\t{r.losses.iaf:.4f}\t{r.rtf:.4f}\t{r.latency_ms:.1f}"
    )


def _run_eval(items, name, args, cfg):
    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            return list(pool.map(lambda it: _eval_one(it, name, args, cfg), items))
    return [_eval_one(it, name, args, cfg) for it in items]


def cmd_eval(args):
    cfg = config_mod.stft_config(config_mod.load(args.config))
    items = _waveforms(args, "test")
    results = _run_eval(items, args.estimator, args, cfg)
    lines = [HEADER] + [_row(c, args.estimator, r) for c, r in results]
    lines.append(_row("mean", args.estimator, mean_report([r for _, r in results])))
    _emit(lines, args.output)
    if args.loss_log and args.plot_data:
        _curve_file(args.loss_log, args.plot_data)


def _emit(lines, path):
    text = "\n".join(lines) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _curve_file(log_path, out_path):
    rows = [ln.split() for ln in Path(log_path).read_text().splitlines() if ln and not ln.startswith("#")]
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("# gnuplot: plot 'file' using 1:2 title 'ip', '' using 1:3 title 'gd', '' using 1:4 title 'iaf'\n")
        fh.write("# step ip gd iaf kd total\n")
        for r in rows:
            fh.write(" ".join(r) + "\n")


def cmd_bench(args):
    cfg = config_mod.stft_config(config_mod.load(args.config))
    items = _waveforms(args, "test")
    names = args.estimators.split(",")
    if args.checkpoint and "nspp" not in names:
        names.append("nspp")
    lines = ["estimator\tsnr_db\tf0_rmse_cent\tip\tgd\tiaf\tsc_db\trtf\tlatency_ms"]
    means = {}
    for name in names:
        start = time.perf_counter()
        results = _run_eval(items, name, args, cfg)
        m = mean_report([r for _, r in results])
        sc = float(np.mean([r.extra["sc_db"] for _, r in results]))
        means[name] = m
        lines.append(
            f"{name}\t{m.snr_db:.3f}\t{m.f0_rmse_cent:.2f}\t{m.losses.ip:.4f}\t{m.losses.gd:.4f}"
            f"\t{m.losses.iaf:.4f}\t{sc:.2f}\t{format_rtf(m.rtf)}\t{m.latency_ms:.1f}"
        )
        if args.verbose:
            print(f"{name}: {time.perf_counter() - start:.1f}s", file=sys.stderr)
    _emit(lines, args.output)


def cmd_latency(args):
    s = config_mod.load(args.config)
    if args.causal is not None:
        s["causal"] = args.causal
    model_cfg = config_mod.model_config(s)
    stft_cfg = config_mod.stft_config(s)
    frames = receptive_future(model_cfg)
    ms = latency_ms(model_cfg, stft_cfg.hop_ms, stft_cfg.window_ms)
    n_params = NsppModel(model_cfg).num_parameters() if args.params else None
    line = f"future_frames={frames} latency_ms={ms:g}"
    if n_params is not None:
        line += f" parameters={n_params}"
    print(line)


# parser ---------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", default="paper", help="preset name (paper, causal, tiny, tiny_causal) or key=value file")
    p.add_argument("--any-rate", action="store_true", help="accept WAV files at any sample rate")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (1 = serial, deterministic order)")
    p.add_argument("-v", "--verbose", action="store_true")


def _data_flags(p):
    p.add_argument("--manifest", help="manifest of WAV paths with optional split tags")
    p.add_argument("--synthetic", type=int, default=0, help="use N generated utterances instead of files")


def _switch(p, name, help_text):
    p.add_argument(f"--{name.replace('_', '-')}", dest=name, action="store_true", default=None, help=help_text)
    p.add_argument(f"--no-{name.replace('_', '-').removeprefix('use-')}", dest=name, action="store_false")


def _train_flags(p):
    _data_flags(p)
    for key, typ in {**TRAIN_FLAGS, **MODEL_FLAGS}.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ)
    _switch(p, "use_ip", "enable the IP loss")
    _switch(p, "use_gd", "enable the GD loss")
    _switch(p, "use_iaf", "enable the IAF loss")
    _switch(p, "use_pea", "parallel real/imaginary output head")
    p.add_argument("--causal", dest="causal", action="store_true", default=None)
    p.add_argument("--log", help="plain-text loss log (step ip gd iaf kd total)")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="checkpoint path")


def build_parser():
    parser = argparse.ArgumentParser(prog="phaserecon", description="Speech phase reconstruction toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stft", help="write amplitude/phase spectrograms of a WAV to .npz")
    _common(p)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_stft)

    for name, func in (("gla", cmd_gla), ("raar", cmd_raar)):
        p = sub.add_parser(name, help=f"reconstruct a WAV with {name.upper()}")
        _common(p)
        p.add_argument("--iters", type=int, default=100)
        p.add_argument("--beta", type=float, default=0.9)
        p.add_argument("--raar-literal", action="store_true", help="run the update without the beta/2 factor on the reflection term")
        p.add_argument("input", help="WAV, .npy amplitude matrix or .npz from 'stft'")
        p.add_argument("output", help="output WAV")
        p.set_defaults(func=func)

    p = sub.add_parser("train", help="train a phase predictor")
    _common(p)
    _train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("distill", help="train a causal student from a frozen teacher")
    _common(p)
    _train_flags(p)
    p.add_argument("--teacher", required=True)
    p.add_argument("--warm-start", action="store_true", help="initialise the student from teacher weights where shapes match")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("infer", help="predict phase with a checkpoint and write a WAV")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--stream", action="store_true", help="frame-by-frame inference (causal models)")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_infer)

    for name, func in (("eval", cmd_eval), ("bench", cmd_bench)):
        p = sub.add_parser(name, help="score estimators" if name == "eval" else "compare estimators")
        _common(p)
        _data_flags(p)
        p.add_argument("inputs", nargs="*", help="WAV files (default: bundled mini test set)")
        if name == "eval":
            p.add_argument("--estimator", default="gla", help="oracle, zero, gla[N], raar[N] or nspp")
            p.add_argument("--loss-log", help="training loss log to convert")
            p.add_argument("--plot-data", help="write a gnuplot data file from --loss-log")
        else:
            p.add_argument("--estimators", default="zero,gla22,gla100,raar13,raar100")
        p.add_argument("--iters", type=int, default=100)
        p.add_argument("--beta", type=float, default=0.9)
        p.add_argument("--raar-literal", action="store_true")
        p.add_argument("--checkpoint")
        p.add_argument("--degrade", default="none", help="none, lowpass_extend:BIN or mel_roundtrip:N")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-o", "--output", help="TSV output path (default stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("latency", help="print look-ahead frames and algorithmic latency")
    _common(p)
    p.add_argument("--causal", action="store_true", default=None)
    p.add_argument("--params", action="store_true", help="also print the parameter count")
    p.set_defaults(func=cmd_latency)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return 2 if exc.kind == "usage" else 1
    except (OSError, EOFError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
