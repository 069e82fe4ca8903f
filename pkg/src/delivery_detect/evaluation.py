"""Event and video scoring, metrics, and uncertainty-based abstention.

A video is called delivery when at least one of its (non-abstained) events
scores at or above the threshold; a video without motion events is a
non-delivery verdict and never abstains.
"""
import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np


class SingleClassError(ValueError):
    pass


@dataclass(frozen=True)
class EventScore:
    event_id: str
    video_id: str
    p_delivery: float
    u: float = None  # None for models without an uncertainty output
    label: int = None  # ground truth, when known

    def __post_init__(self):
        if not 0.0 <= self.p_delivery <= 1.0:
            raise ValueError(f"p_delivery {self.p_delivery} outside [0, 1]")
        if self.u is not None and not 0.0 < self.u <= 1.0:
            raise ValueError(f"uncertainty {self.u} outside (0, 1]")

    def predicted(self, threshold=0.5):
        return int(self.p_delivery >= threshold)


@dataclass(frozen=True)
class VideoVerdict:
    video_id: str
    score: float
    predicted: int
    truth: int
    abstained: bool = False
    n_events: int = 0


@dataclass
class MetricsReport:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    fpr: float
    accuracy: float  # percent
    mAP: float = None
    best_f1: float = None
    best_f1_threshold: float = None
    avu: float = None
    n_abstained: int = 0
    pr_curve: list = field(default_factory=list)  # (threshold, precision, recall)
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["pr_curve"] = [list(p) for p in self.pr_curve]
        return d


def aggregate_video(scores, threshold=0.5, video_id="", truth=0):
    """Video verdict from its event scores (max rule, ``>=`` threshold)."""
    vals = [s.p_delivery if isinstance(s, EventScore) else float(s) for s in scores]
    best = max(vals, default=0.0)
    return VideoVerdict(video_id, best, int(bool(vals) and best >= threshold), int(truth),
                        n_events=len(vals))


def baseline_maxpool(frame_scores):
    """Chunk score of a per-frame scorer: the max, or 0 without any scored frame."""
    return max((float(s) for s in frame_scores), default=0.0)


def _check_binary(labels):
    labels = np.asarray(labels).astype(int)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise SingleClassError(
            f"precision-recall needs both classes; got {n_pos} positives of {labels.size}")
    return labels


def pr_curve_and_map(scores, labels):
    """PR points at each distinct score (descending) and the area under the
    interpolated curve (precision envelope, all recall steps)."""
    labels = _check_binary(labels)
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    # last index of each group of tied scores
    ends = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / labels.sum()
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.r_[0.0, recall[:-1]]
    ap = float(np.sum((recall - prev_recall) * envelope))
    points = [(float(t), float(p), float(r)) for t, p, r in zip(s[ends], precision, recall)]
    return points, ap


def classification_metrics(predicted, truth, threshold=0.5):
    """Confusion counts and derived rates for binary predictions (1 = delivery)."""
    pred = np.asarray(predicted).astype(int)
    true = np.asarray(truth).astype(int)
    if pred.size == 0:
        raise ValueError("no predictions to score")
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    fpr = fp / (fp + tn) if fp + tn else 0.0
    accuracy = 100.0 * (tp + tn) / pred.size
    return MetricsReport(threshold, tp, fp, tn, fn, precision, recall, f1, fpr, accuracy)


def best_f1(scores, labels):
    """(F1, threshold) maximizing F1 over the distinct scores; lowest threshold wins ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    best = (0.0, None)
    for t in np.unique(scores):
        f1 = classification_metrics(scores >= t, labels, t).f1
        if f1 > best[0] or best[1] is None:
            best = (f1, float(t))
    return best


def uncertainty_threshold_from_validation(u, predicted, truth, fallback=1.0):
    """Mean uncertainty over misclassified validation samples (``fallback`` when none)."""
    u = np.asarray(u, dtype=float)
    wrong = np.asarray(predicted).astype(int) != np.asarray(truth).astype(int)
    if not wrong.any():
        return float(fallback)
    return float(u[wrong].mean())


def filter_by_uncertainty(scores, u_star):
    """Split event scores into (retained, abstained): abstain iff u > u_star."""
    if not 0.0 < u_star <= 1.0:
        raise ValueError("u* must lie in (0, 1]")
    retained, abstained = [], []
    for s in scores:
        if s.u is None:
            raise ValueError("uncertainty filtering needs an evidential model")
        (abstained if s.u > u_star else retained).append(s)
    return retained, abstained


def video_verdicts(event_scores, video_truth, threshold=0.5, abstained_ids=()):
    """One verdict per video in ``video_truth`` (id -> 0/1).

    Abstained events are ignored; a video whose events all abstained is
    itself abstained.
    """
    skip = set(abstained_ids)
    per_video = {}
    for s in event_scores:
        per_video.setdefault(s.video_id, []).append(s)
    out = []
    for vid in sorted(video_truth):
        evs = per_video.get(vid, [])
        kept = [s for s in evs if s.event_id not in skip]
        v = aggregate_video(kept, threshold, vid, video_truth[vid])
        if evs and not kept:
            v = VideoVerdict(vid, 0.0, 0, int(video_truth[vid]), abstained=True, n_events=len(evs))
        out.append(v)
    return out


def report(verdicts, threshold=0.5, single_class_ok=False):
    """Video-level report: fixed-threshold metrics, PR curve, mAP and best F1.

    With ``single_class_ok`` a one-class set (e.g. after abstention) gets the
    fixed-threshold metrics only, with mAP left as None.
    """
    kept = [v for v in verdicts if not v.abstained]
    if not kept:
        raise ValueError("every video abstained")
    scores = [v.score for v in kept]
    truth = [v.truth for v in kept]
    rep = classification_metrics([v.predicted for v in kept], truth, threshold)
    rep.n_abstained = len(verdicts) - len(kept)
    if single_class_ok and len(set(truth)) < 2:
        return rep
    rep.pr_curve, rep.mAP = pr_curve_and_map(scores, truth)
    rep.best_f1, rep.best_f1_threshold = best_f1(scores, truth)
    return rep


def event_accuracy(scores, threshold=0.5):
    if not scores:
        raise ValueError("no event scores")
    return 100.0 * float(np.mean([s.predicted(threshold) == s.label for s in scores]))


def write_metrics(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_pr_csv(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "precision", "recall"])
        for t, p, r in points:
            w.writerow([repr(t), repr(p), repr(r)])


def plot_pr(reports, out_path, labels=None):
    """Overlay the PR curves of several ``metrics.json`` documents."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for i, doc in enumerate(reports):
        video = doc["video"]
        pts = video["pr_curve"]
        r = [0.0] + [p[2] for p in pts]
        p = [pts[0][1] if pts else 1.0] + [p[1] for p in pts]
        name = labels[i] if labels else doc.get("name", f"run {i}")
        ax.step(r, p, where="post", label=f"{name} (mAP {video['mAP']:.3f})")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
