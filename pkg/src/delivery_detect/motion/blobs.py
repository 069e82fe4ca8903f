from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import kernels


@dataclass(frozen=True)
class Blob:
    """Connected foreground region. ``bbox`` is half-open: (x0, y0, x1, y1)."""

    id: int
    bbox: tuple
    centroid: tuple
    area: int

    def scaled(self, sx, sy):
        x0, y0, x1, y1 = self.bbox
        cx, cy = self.centroid
        return Blob(
            self.id,
            (x0 * sx, y0 * sy, x1 * sx, y1 * sy),
            (cx * sx, cy * sy),
            self.area,
        )


def extract_blobs(mask, min_area=50, backend=None):
    """8-connected components of ``mask`` with at least ``min_area`` pixels.

    Blobs come out in raster order of their first pixel and are numbered
    from 0 in that order.
    """
    m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    if m.ndim != 2:
        raise ValueError("mask must be 2-D")
    labels, n = kernels.label8(m, backend=backend)
    if n == 0:
        return []
    idx = np.arange(1, n + 1)
    areas = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    ys, xs = np.indices(labels.shape)
    sum_x = ndimage.sum_labels(xs, labels, idx)
    sum_y = ndimage.sum_labels(ys, labels, idx)
    slices = ndimage.find_objects(labels)
    blobs = []
    for i in range(n):
        if areas[i] < min_area:
            continue
        sy, sx = slices[i]
        blobs.append(Blob(
            id=len(blobs),
            bbox=(sx.start, sy.start, sx.stop, sy.stop),
            centroid=(sum_x[i] / areas[i], sum_y[i] / areas[i]),
            area=int(areas[i]),
        ))
    return blobs
