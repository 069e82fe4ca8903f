def _check_interval(a):
    if a[0] > a[1]:
        raise ValueError(f"invalid interval {a}")


def temporal_iou(a, b):
    """IoU of inclusive frame intervals, counting frames."""
    _check_interval(a)
    _check_interval(b)
    inter = min(a[1], b[1]) - max(a[0], b[0]) + 1
    if inter <= 0:
        return 0.0
    union = (a[1] - a[0] + 1) + (b[1] - b[0] + 1) - inter
    return inter / union


def box_area(b):
    return max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])


def spatial_iou(a, b):
    """Area IoU of (x0, y0, x1, y1) boxes; 0 when either box is degenerate."""
    if box_area(a) <= 0 or box_area(b) <= 0:
        return 0.0
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (box_area(a) + box_area(b) - inter)


def event_track_iou(event, track):
    """(temporal, spatial) IoU between a motion event and a person track.

    The spatial operand for the track is the union of its boxes over the
    frames it shares with the event.
    """
    t = temporal_iou((event.start_frame, event.end_frame), (track.start_frame, track.end_frame))
    if t == 0.0:
        return 0.0, 0.0
    box = track.union_box(event.start_frame, event.end_frame)
    if box is None:
        return t, 0.0
    return t, spatial_iou(event.roi, box)
