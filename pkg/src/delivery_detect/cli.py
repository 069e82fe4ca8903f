"""Command-line entry point.

Exit codes:
  0  success
  2  usage error (bad flags, missing or invalid config file)
  3  video could not be decoded
  4  missing checkpoint or dataset artifact
  5  evaluation set contains a single class
"""
import functools
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import click

from . import config as cfgmod
from .video import VideoDecodeError

EXIT_DECODE = 3
EXIT_MISSING = 4
EXIT_SINGLE_CLASS = 5
OUTPUT_ROOT_ENV = "DELIVERY_DETECT_OUTPUT_ROOT"

log = logging.getLogger("delivery_detect")


def code_version():
    try:
        return version("delivery-detect")
    except PackageNotFoundError:
        return "unknown"


def _timestamp(deterministic):
    if deterministic:
        t = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    else:
        t = time.time()
    return datetime.fromtimestamp(t, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class Run:
    """Shared command state: merged config, seed, output root and the run manifest."""

    def __init__(self, config_path, seed, deterministic):
        self.config_path = config_path
        try:
            self.config = cfgmod.load_config(config_path)
        except (KeyError, TypeError, ValueError) as exc:
            raise click.UsageError(f"invalid config {config_path}: {exc}")
        self.seed = seed
        self.deterministic = deterministic
        self.root = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
        self.started = _timestamp(deterministic)

    def out_path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.root / p

    def write_manifest(self, out_dir, command, inputs, outputs, extra=None):
        doc = {
            "command": command,
            "config_hash": cfgmod.config_hash(self.config),
            "config_path": str(self.config_path) if self.config_path else None,
            "seed": self.seed,
            "deterministic": self.deterministic,
            "code_version": code_version(),
            "inputs": {k: str(v) for k, v in inputs.items()},
            "outputs": {k: str(v) for k, v in outputs.items()},
            "started_at": self.started,
            "finished_at": _timestamp(self.deterministic),
        }
        doc.update(extra or {})
        path = Path(out_dir) / "manifests" / f"{command}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return path


def _fail(code, msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def command(fn):
    """Map domain failures onto the documented exit codes."""
    from .evaluation import SingleClassError

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VideoDecodeError as exc:
            _fail(EXIT_DECODE, str(exc))
        except FileNotFoundError as exc:
            _fail(EXIT_MISSING, str(exc))
        except SingleClassError as exc:
            _fail(EXIT_SINGLE_CLASS, str(exc))
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="TOML or JSON file overriding the reference configuration.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--deterministic/--no-deterministic", default=False, show_default=True,
              help="Seeded, ordered, reproducible execution with fixed manifest timestamps.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, config_path, seed, deterministic, verbose):
    """Detect package deliveries in doorbell footage."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = Run(config_path, seed, deterministic)


@main.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--format", "video_format", default="mkv", show_default=True,
              help="Container suffix, or 'png' for frame directories.")
@click.pass_obj
@command
def synth(run, out, video_format):
    """Render a synthetic corpus."""
    from .synth import SynthConfig, build_corpus
    out = run.out_path(out)
    manifest = build_corpus(SynthConfig.from_dict(run.config["synth"]), run.seed, out,
                            "" if video_format == "png" else video_format)
    run.write_manifest(out, "synth", {}, {"corpus": out},
                       {"manifest_hash": manifest["manifest_hash"]})
    click.echo(f"{len(manifest['videos'])} videos, manifest hash {manifest['manifest_hash']}")


def _draw_preview(frames_dir, src_path, events):
    import cv2

    from .video import VideoSource
    frames_dir.mkdir(parents=True, exist_ok=True)
    mids = {(e.start_frame + e.end_frame) // 2: e for e in events}
    got = VideoSource(src_path).read(sorted(mids))
    for f, e in sorted(mids.items()):
        img = cv2.cvtColor(got[f], cv2.COLOR_RGB2BGR)
        cv2.rectangle(img, e.roi[:2], (e.roi[2] - 1, e.roi[3] - 1), (0, 0, 255), 1)
        t = e.thumbnail_bbox
        cv2.rectangle(img, t[:2], (t[2] - 1, t[3] - 1), (0, 255, 0), 1)
        cv2.imwrite(str(frames_dir / f"event_{e.start_frame:06d}_{e.end_frame:06d}.png"), img)


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), help="events.json path (single video only).")
@click.option("--preview", type=click.Path(file_okay=False),
              help="Directory for annotated mid-event frames.")
@click.pass_obj
@command
def propose(run, source, out, preview):
    """Run the motion engine on a video, or on every video of a dataset directory."""
    from .motion import MotionConfig, propose_video
    mcfg = MotionConfig.from_dict(run.config["motion"])
    src = Path(source)
    if (src / "corpus.json").exists():
        from .dataset.corpus import Corpus
        from .pipeline import propose_corpus
        corpus = Corpus(src)
        results = propose_corpus(corpus, mcfg)
        n = sum(len(ef.events) for ef in results.values())
        run.write_manifest(src, "propose", {"corpus": src}, {"events": corpus.events_dir})
        click.echo(f"{n} events from {len(results)} videos")
        return
    ef = propose_video(src, mcfg)
    out = run.out_path(out or f"{ef.video_id}.events.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    ef.save(out)
    if preview:
        _draw_preview(run.out_path(preview), src, ef.events)
    run.write_manifest(out.parent, "propose", {"video": src}, {"events": out})
    click.echo(f"{len(ef.events)} events -> {out}")


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.pass_obj
@command
def label(run, corpus_dir):
    """Label proposed events against annotated person tracks."""
    from .dataset.corpus import Corpus
    from .pipeline import label_corpus
    corpus = Corpus(corpus_dir)
    lc = run.config["label"]
    labeled = label_corpus(corpus, lc["t_min"], lc["s_min"])
    run.write_manifest(corpus_dir, "label", {"corpus": corpus_dir}, {"labels": corpus.labels_path})
    n_pos = sum(le.label == "delivery" for le in labeled)
    click.echo(f"{len(labeled)} events labeled ({n_pos} delivery)")


PLAIN = {"excitation": False, "focal_gamma": 0.0, "use_kl": False, "use_calibration": False}


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--variant", type=click.Choice(["full", "plain"]), default="full", show_default=True,
              help="plain: no excitation, no focal term, no regularizers.")
@click.option("--epochs", type=int, help="Override the configured epoch count.")
@click.option("--resume", is_flag=True, help="Continue from the run directory's saved state.")
@click.pass_obj
@command
def train(run, corpus_dir, out, variant, epochs, resume):
    """Train the event classifier."""
    from .dataset.corpus import Corpus
    from .training import TrainConfig, fit
    overrides = dict(PLAIN) if variant == "plain" else {}
    if epochs is not None:
        overrides["epochs"] = epochs
    try:
        tcfg = TrainConfig.from_dict(run.config["train"], seed=run.seed,
                                     deterministic=run.deterministic, **overrides)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    out = run.out_path(out)
    result = fit(tcfg, Corpus(corpus_dir), out, resume=resume,
                 config_hash=cfgmod.config_hash(run.config))
    run.write_manifest(out, "train", {"corpus": corpus_dir},
                       {"best": result["best"], "last": result["last"]},
                       {"variant": variant, "train_config": tcfg.to_json()})
    click.echo(f"best epoch {result['best_epoch']} (val F1 {result['best_val_f1']:.3f})")


def _parse_filter(value):
    if value in ("off", "auto"):
        return value
    try:
        u = float(value)
    except ValueError:
        raise click.BadParameter("expected off, auto or a number in (0, 1]")
    if not 0.0 < u <= 1.0:
        raise click.BadParameter("threshold must lie in (0, 1]")
    return u


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--split", default="test", show_default=True, type=click.Choice(["val", "test"]))
@click.option("--baseline-maxpool", is_flag=True,
              help="Also score videos with the per-frame max-pool baseline.")
@click.option("--uncertainty-filter", "ufilter", default="off", show_default=True,
              help="off, auto (mean uncertainty of validation mistakes) or a fixed threshold.")
@click.option("--name", help="Run name shown in plots.")
@click.pass_obj
@command
def evaluate(run, corpus_dir, checkpoint, out, split, baseline_maxpool, ufilter, name):
    """Score a split and write metrics.json and pr_curve.csv."""
    from .dataset.corpus import Corpus
    from .evaluation import SingleClassError
    from .inference import evaluate_checkpoint
    ufilter = _parse_filter(ufilter)
    out = run.out_path(out)
    out.mkdir(parents=True, exist_ok=True)
    ecfg = run.config["evaluate"]
    try:
        doc = evaluate_checkpoint(Corpus(corpus_dir), checkpoint, out, split, ecfg, ufilter,
                                  baseline_maxpool, name or Path(checkpoint).parent.name)
    except ValueError as exc:
        if isinstance(exc, SingleClassError):
            raise
        raise click.UsageError(str(exc))
    run.write_manifest(out, "evaluate", {"corpus": corpus_dir, "checkpoint": checkpoint},
                       {"metrics": out / "metrics.json", "pr_curve": out / "pr_curve.csv"})
    v = doc["video"]
    click.echo(f"video F1 {v['f1']:.4f}  mAP {v['mAP']:.4f}  FPR {v['fpr']:.4f}  "
               f"accuracy {v['accuracy']:.2f}%")


@main.command()
@click.option("--width", type=float, help="Width multiplier (default: configured).")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
@command
def flops(run, width, as_json):
    """Print FLOPs, parameters and size of the configured backbone."""
    from .backbone import count_flops, mobilenetv2_3d
    w = width if width is not None else run.config["train"]["width_mult"]
    stats = count_flops(mobilenetv2_3d(w))
    stats["width_mult"] = w
    if as_json:
        click.echo(json.dumps(stats, sort_keys=True))
    else:
        click.echo(f"width {w}: {stats['gflops']:.3f} GFLOPs at {stats['input_dims']}, "
                   f"{stats['params']:,} params, {stats['size_mb_fp32']:.2f} MB fp32, "
                   f"{stats['size_mb_int8']:.2f} MB int8")


@main.command("plot-pr")
@click.argument("metrics", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="pr_curve.png", show_default=True, type=click.Path())
@click.option("--label", "labels", multiple=True, help="Curve names, in argument order.")
@click.pass_obj
@command
def plot_pr(run, metrics, out, labels):
    """Overlay PR curves from metrics.json files."""
    from .evaluation import plot_pr as plot
    if labels and len(labels) != len(metrics):
        raise click.UsageError("give one --label per metrics file")
    docs = [json.loads(Path(p).read_text()) for p in metrics]
    out = run.out_path(out)
    plot(docs, out, list(labels) or None)
    run.write_manifest(out.parent, "plot-pr", {f"metrics_{i}": p for i, p in enumerate(metrics)},
                       {"plot": out})
    click.echo(str(out))


if __name__ == "__main__":
    main()
