import numpy as np


def rasterize_boxes(boxes, height, width, scale_x=1.0, scale_y=1.0):
    """Binary (height, width) mask: a cell is 1 iff its centre lies inside a scaled box.

    Boxes are half-open (x0, y0, x1, y1) in the source resolution; they are
    multiplied by (scale_x, scale_y) before testing cell centres.
    """
    mask = np.zeros((height, width), dtype=np.uint8)
    if not boxes:
        return mask
    cx = np.arange(width) + 0.5
    cy = np.arange(height) + 0.5
    for x0, y0, x1, y1 in boxes:
        cols = (cx >= x0 * scale_x) & (cx < x1 * scale_x)
        rows = (cy >= y0 * scale_y) & (cy < y1 * scale_y)
        mask[np.ix_(rows, cols)] = 1
    return mask


def intersect(a, b):
    x0, y0 = max(a[0], b[0]), max(a[1], b[1])
    x1, y1 = min(a[2], b[2]), min(a[3], b[3])
    if x1 <= x0 or y1 <= y0:
        return None
    return (x0, y0, x1, y1)
