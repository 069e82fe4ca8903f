"""Scoring with a trained classifier: motion events, the per-frame max-pool
baseline, and full evaluation of a checkpoint."""
from pathlib import Path

import numpy as np
import torch

from . import evaluation as ev
from .backbone import load_checkpoint
from .dataset.corpus import EventClipSet
from .dataset.clips import CLIP_LEN, CLIP_SIZE, letterbox
from .evaluation import EventScore, baseline_maxpool
from .evidential import avu, dirichlet_stats, evidence
from .motion.events import DEFAULT_LADDER, thumbnail_bbox
from .video import VideoSource


def load_model(path):
    """Inference model (no excitation support) and its sidecar."""
    return load_checkpoint(path, supports_excitation=False)


def _outputs(model, x, objective, evidence_kind):
    """(p_delivery, u or None) per row of ``x``."""
    h = model(x).double()
    if objective == "cross_entropy":
        return torch.softmax(h, dim=-1)[:, 1].tolist(), [None] * len(h)
    d = dirichlet_stats(evidence(h, evidence_kind))
    return d.prob[:, 1].tolist(), d.uncertainty.tolist()


@torch.no_grad()
def predict(model, data, objective="evidential", evidence_kind="softplus", batch_size=16):
    """Event scores for every item of an ``EventClipSet`` (inference path)."""
    model.eval()
    out = []
    for start in range(0, len(data), batch_size):
        ids = range(start, min(len(data), start + batch_size))
        items = [data.get(i) for i in ids]
        x = torch.from_numpy(np.stack([s.tensor for s in items]))
        p, u = _outputs(model, x, objective, evidence_kind)
        for j, i in enumerate(ids):
            le = data.items[i]
            out.append(EventScore(items[j].event_id, le.video_id, p[j], u[j], items[j].label))
    return out


def frozen_clip(frame, box, ladder=DEFAULT_LADDER, clip_len=CLIP_LEN, size=CLIP_SIZE):
    """A still clip of the thumbnail around ``box``: (3, T, size, size) float32."""
    h, w = frame.shape[:2]
    x0, y0, x1, y1 = thumbnail_bbox(box, (w, h), ladder)
    img = letterbox(frame[y0:y1, x0:x1], size).astype(np.float32) / 255.0
    return np.repeat(img.transpose(2, 0, 1)[:, None], clip_len, axis=1)


@torch.no_grad()
def baseline_video_score(model, video_path, tracks, objective="evidential", evidence_kind="softplus",
                         sample_fps=1.0, chunk_seconds=15.0):
    """Max-pool baseline: person crops sampled at ``sample_fps`` within chunks of
    ``chunk_seconds``, each scored as a frozen clip; the video score is the
    highest chunk score."""
    model.eval()
    src = VideoSource(video_path)
    step = max(1, int(round(src.fps / sample_fps)))
    chunk = max(1, int(round(src.fps * chunk_seconds)))
    wanted = sorted({f for t in tracks for f in t.boxes if f % step == 0})
    if not wanted:
        return 0.0
    frames = src.read(wanted)
    chunk_scores = {}
    for f in wanted:
        boxes = [t.boxes[f] for t in tracks if f in t.boxes]
        x = torch.from_numpy(np.stack([frozen_clip(frames[f], b) for b in boxes]))
        p, _ = _outputs(model, x, objective, evidence_kind)
        chunk_scores.setdefault(f // chunk, []).append(max(p))
    return max(baseline_maxpool(s) for s in chunk_scores.values())


def _video_truth(corpus, split):
    return {v: int(corpus.annotation(v).tag == "delivery") for v in corpus.video_ids(split)}


def _event_block(scores, threshold, avu_threshold):
    block = {"n": len(scores), "accuracy": ev.event_accuracy(scores, threshold) if scores else None}
    if scores:
        m = ev.classification_metrics([s.predicted(threshold) for s in scores],
                                      [s.label for s in scores], threshold)
        block.update(tp=m.tp, fp=m.fp, tn=m.tn, fn=m.fn, f1=m.f1, fpr=m.fpr)
        if scores[0].u is not None:
            block["avu"] = avu([s.u for s in scores], [s.predicted(threshold) for s in scores],
                               [s.label for s in scores], avu_threshold)
    return block


def evaluate_checkpoint(corpus, checkpoint, out_dir, split="test", ecfg=None, ufilter="off",
                        baseline=False, name=""):
    """Score ``split`` with a checkpoint; writes metrics.json, pr_curve.csv and event_scores.json."""
    ecfg = {"threshold": 0.5, "u_fallback": 1.0, "avu_threshold": 0.5, "baseline_fps": 1.0,
            "baseline_chunk_seconds": 15.0, **(ecfg or {})}
    thr = ecfg["threshold"]
    out = Path(out_dir)
    model, sidecar = load_model(checkpoint)
    out.mkdir(parents=True, exist_ok=True)
    objective = sidecar.get("objective", "evidential")
    kind = sidecar.get("evidence", "softplus")
    truth = _video_truth(corpus, split)
    if len(set(truth.values())) < 2:
        raise ev.SingleClassError(f"split {split!r} has a single video class")
    if ufilter != "off" and objective != "evidential":
        raise ValueError("uncertainty filtering needs an evidential checkpoint")

    data = EventClipSet(corpus, corpus.labeled_events(split))
    scores = predict(model, data, objective, kind)
    verdicts = ev.video_verdicts(scores, truth, thr)
    video = ev.report(verdicts, thr)
    doc = {
        "name": name,
        "checkpoint": str(checkpoint),
        "split": split,
        "objective": objective,
        "threshold": thr,
        "n_videos": len(verdicts),
        "video": video.to_json(),
        "event": _event_block(scores, thr, ecfg["avu_threshold"]),
    }

    if ufilter != "off":
        if ufilter == "auto":
            val = predict(model, EventClipSet(corpus, corpus.labeled_events("val")), objective, kind)
            u_star = ev.uncertainty_threshold_from_validation(
                [s.u for s in val], [s.predicted(thr) for s in val], [s.label for s in val],
                ecfg["u_fallback"])
        else:
            u_star = float(ufilter)
        retained, abstained = ev.filter_by_uncertainty(scores, u_star)
        fverdicts = ev.video_verdicts(scores, truth, thr, [s.event_id for s in abstained])
        doc["uncertainty"] = {
            "mode": ufilter if ufilter == "auto" else "fixed",
            "u_star": u_star,
            "n_abstained_events": len(abstained),
            "abstained_event_ids": sorted(s.event_id for s in abstained),
            "event_all": doc["event"],
            "event_retained": _event_block(retained, thr, ecfg["avu_threshold"]),
            "video": ev.report(fverdicts, thr, single_class_ok=True).to_json(),
        }

    if baseline:
        bverdicts = []
        for vid in sorted(truth):
            s = baseline_video_score(model, corpus.video_path(vid), corpus.annotation(vid).tracks,
                                     objective, kind, ecfg["baseline_fps"],
                                     ecfg["baseline_chunk_seconds"])
            bverdicts.append(ev.VideoVerdict(vid, s, int(s >= thr), truth[vid]))
        doc["baseline_maxpool"] = ev.report(bverdicts, thr).to_json()

    ev.write_metrics(out / "metrics.json", doc)
    ev.write_pr_csv(out / "pr_curve.csv", video.pr_curve)
    ev.write_metrics(out / "event_scores.json",
                     [{"event_id": s.event_id, "video_id": s.video_id, "p_delivery": s.p_delivery,
                       "u": s.u, "label": s.label} for s in scores])
    return doc
