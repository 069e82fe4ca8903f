import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delivery_detect.evaluation import (EventScore, SingleClassError, aggregate_video,
                                        baseline_maxpool, best_f1, classification_metrics,
                                        filter_by_uncertainty, pr_curve_and_map, report,
                                        uncertainty_threshold_from_validation, video_verdicts)


def brute_force_ap(scores, labels):
    """Interpolated PR area by exhaustive thresholds, O(n^2)."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels, int)
    pts = []
    for t in sorted(set(scores.tolist()), reverse=True):
        pred = scores >= t
        tp = int(np.sum(pred & (labels == 1)))
        pts.append((tp / labels.sum(), tp / pred.sum()))
    area, prev_r = 0.0, 0.0
    for r, _ in pts:
        if r > prev_r:
            area += (r - prev_r) * max(p for rr, p in pts if rr >= r)
            prev_r = r
    return area


def random_instance(rng, n):
    labels = rng.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    scores = np.round(rng.random(n), int(rng.integers(1, 4)))  # coarse rounding makes ties
    return scores, labels


def test_map_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(100):
        s, y = random_instance(rng, int(rng.integers(2, 51)))
        assert pr_curve_and_map(s, y)[1] == pytest.approx(brute_force_ap(s, y), abs=1e-9)


def test_map_extremes():
    assert pr_curve_and_map([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])[1] == 1.0
    y = [1, 1, 0, 0, 0]
    s = [0.0, 0.0, 1.0, 1.0, 1.0]
    assert pr_curve_and_map(s, y)[1] == pytest.approx(0.4)


def test_pr_points_descending_thresholds():
    pts, _ = pr_curve_and_map([0.3, 0.9, 0.3, 0.5], [1, 1, 0, 0])
    assert [p[0] for p in pts] == [0.9, 0.5, 0.3]
    assert pts[-1][2] == 1.0


def test_single_class_rejected():
    with pytest.raises(SingleClassError):
        pr_curve_and_map([0.1, 0.2], [1, 1])


def test_confusion_formulas():
    m = classification_metrics([1] * 13 + [0] * 87, [0] * 100)
    assert m.fp == 13 and m.tn == 87 and m.fpr == pytest.approx(0.13)
    m = classification_metrics([1, 0, 1, 0], [1, 0, 1, 0])
    assert m.accuracy == 100.0 and m.fpr == 0.0 and m.f1 == 1.0
    # TP 164, FP 41, FN 36: P = 0.8, R = 0.82
    m = classification_metrics([1] * 164 + [1] * 41 + [0] * 36, [1] * 164 + [0] * 41 + [1] * 36)
    assert m.precision == pytest.approx(0.8) and m.recall == pytest.approx(0.82)
    assert m.f1 == pytest.approx(0.8099, abs=1e-4)
    m = classification_metrics([0, 0], [1, 0])
    assert m.precision == 0.0 and m.f1 == 0.0


def test_aggregate_video():
    v = aggregate_video([0.1, 0.8, 0.3])
    assert v.predicted == 1 and v.score == 0.8
    assert aggregate_video([0.1, 0.2]).predicted == 0
    assert aggregate_video([0.5]).predicted == 1
    assert aggregate_video([]).predicted == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.data())
def test_aggregate_order_invariant_and_monotone(scores, data):
    perm = data.draw(st.permutations(scores))
    assert aggregate_video(scores) == aggregate_video(perm)
    i = data.draw(st.integers(0, len(scores) - 1))
    raised = list(scores)
    raised[i] = data.draw(st.floats(scores[i], 1))
    assert aggregate_video(raised).predicted >= aggregate_video(scores).predicted


def test_baseline_maxpool():
    assert baseline_maxpool([0.1] * 14 + [0.9]) == 0.9
    assert baseline_maxpool([]) == 0.0
    assert baseline_maxpool([0.4] * 15) == 0.4


def test_uncertainty_threshold():
    assert uncertainty_threshold_from_validation([0.12, 0.5, 0.20], [1, 1, 0], [0, 1, 1]) == pytest.approx(0.16)
    assert uncertainty_threshold_from_validation([0.3, 0.1], [1, 0], [0, 0]) == pytest.approx(0.3)
    assert uncertainty_threshold_from_validation([0.3], [1], [1]) == 1.0


def _s(i, u, p=0.6, vid="v"):
    return EventScore(f"e{i}", vid, p, u, 1)


def test_filter_by_uncertainty():
    scores = [_s(0, 0.1), _s(1, 0.2), _s(2, 0.16)]
    kept, gone = filter_by_uncertainty(scores, 0.16)
    assert [s.event_id for s in kept] == ["e0", "e2"] and [s.event_id for s in gone] == ["e1"]
    assert filter_by_uncertainty(scores, 1.0)[1] == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-3, 1), max_size=20), st.floats(1e-3, 1))
def test_filter_partition(us, u_star):
    scores = [_s(i, u) for i, u in enumerate(us)]
    kept, gone = filter_by_uncertainty(scores, u_star)
    assert len(kept) + len(gone) == len(scores)
    assert not {s.event_id for s in kept} & {s.event_id for s in gone}
    assert all(s.u <= u_star for s in kept)


def test_video_verdicts_with_abstention():
    scores = [_s(0, 0.1, 0.9, "a"), _s(1, 0.9, 0.8, "b"), _s(2, 0.1, 0.2, "b")]
    truth = {"a": 1, "b": 0, "c": 0}
    vs = {v.video_id: v for v in video_verdicts(scores, truth)}
    assert vs["a"].predicted == 1 and vs["b"].predicted == 1 and vs["c"].predicted == 0
    vs = {v.video_id: v for v in video_verdicts(scores, truth, abstained_ids=["e1"])}
    assert vs["b"].predicted == 0 and not vs["b"].abstained
    vs = {v.video_id: v for v in video_verdicts(scores, truth, abstained_ids=["e0"])}
    assert vs["a"].abstained
    # videos without events never abstain
    assert not vs["c"].abstained


def test_report_and_best_f1():
    vs = video_verdicts([_s(0, 0.1, 0.9, "a"), _s(1, 0.1, 0.4, "b")], {"a": 1, "b": 1, "c": 0})
    r = report(vs)
    assert r.tp == 1 and r.fn == 1 and r.tn == 1
    assert r.mAP == 1.0
    f1, thr = best_f1([0.9, 0.4, 0.0], [1, 1, 0])
    assert f1 == 1.0 and thr == 0.4


def test_report_after_abstention_may_be_single_class():
    vs = video_verdicts([_s(0, 0.9, 0.9, "a"), _s(1, 0.1, 0.8, "b")], {"a": 1, "b": 0}, 0.5, ["e0"])
    with pytest.raises(SingleClassError):
        report(vs)
    r = report(vs, single_class_ok=True)
    assert r.mAP is None and r.n_abstained == 1 and r.fp == 1
