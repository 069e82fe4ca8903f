"""Video input/output: container files via OpenCV or directories of numbered frames.

Frames are exchanged as RGB uint8 arrays of shape (H, W, 3).
"""
import json
import os
import re
from pathlib import Path

import cv2
import numpy as np

IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
DEFAULT_DIR_FPS = 10.0


class VideoDecodeError(RuntimeError):
    pass


def _numbered_images(path):
    files = [p for p in Path(path).iterdir() if p.suffix.lower() in IMAGE_EXTS]

    def key(p):
        m = re.findall(r"\d+", p.stem)
        return (int(m[-1]) if m else -1, p.name)

    return sorted(files, key=key)


class VideoSource:
    """Sequential frame reader with basic metadata."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise VideoDecodeError(f"no such video: {path}")
        if self.path.is_dir():
            self._files = _numbered_images(self.path)
            if not self._files:
                raise VideoDecodeError(f"no image frames in {path}")
            first = self._read_image(self._files[0])
            self.height, self.width = first.shape[:2]
            self.n_frames = len(self._files)
            meta = self.path / "meta.json"
            self.fps = DEFAULT_DIR_FPS
            if meta.exists():
                self.fps = float(json.loads(meta.read_text()).get("fps", DEFAULT_DIR_FPS))
        else:
            self._files = None
            cap = cv2.VideoCapture(str(self.path))
            if not cap.isOpened():
                raise VideoDecodeError(f"cannot decode {path}")
            ok, frame = cap.read()
            if not ok:
                cap.release()
                raise VideoDecodeError(f"cannot decode {path}")
            self.height, self.width = frame.shape[:2]
            self.fps = cap.get(cv2.CAP_PROP_FPS) or DEFAULT_DIR_FPS
            cap.release()
            self.n_frames = None

    @staticmethod
    def _read_image(p):
        img = cv2.imread(str(p), cv2.IMREAD_COLOR)
        if img is None:
            raise VideoDecodeError(f"cannot decode frame {p}")
        return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)

    def __iter__(self):
        if self._files is not None:
            for p in self._files:
                yield self._read_image(p)
            return
        cap = cv2.VideoCapture(str(self.path))
        try:
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                yield cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
        finally:
            cap.release()

    def read(self, indices=None):
        """Return frames at sorted ``indices`` (all frames when None) as a dict index->frame."""
        if self._files is not None:
            idx = range(self.n_frames) if indices is None else sorted(set(indices))
            return {i: self._read_image(self._files[i]) for i in idx}
        wanted = None if indices is None else set(indices)
        last = None if wanted is None else max(wanted)
        out = {}
        for i, frame in enumerate(self):
            if wanted is None or i in wanted:
                out[i] = frame
            if last is not None and i >= last:
                break
        if wanted is not None and len(out) != len(wanted):
            raise VideoDecodeError(f"{self.path}: requested frames beyond end of video")
        return out


def read_all(path):
    src = VideoSource(path)
    frames = list(src)
    if not frames:
        raise VideoDecodeError(f"no frames decoded from {path}")
    return np.stack(frames), src.fps


def write_video(path, frames, fps):
    """Write RGB frames losslessly (FFV1/Matroska) or, for a path without suffix, as PNGs."""
    path = Path(path)
    frames = list(frames)
    h, w = frames[0].shape[:2]
    if path.suffix == "":
        path.mkdir(parents=True, exist_ok=True)
        for i, f in enumerate(frames):
            cv2.imwrite(str(path / f"{i:06d}.png"), cv2.cvtColor(f, cv2.COLOR_RGB2BGR))
        (path / "meta.json").write_text(json.dumps({"fps": fps}))
        return path
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"FFV1"), float(fps), (w, h))
    if not writer.isOpened():
        raise VideoDecodeError(f"cannot open FFV1 writer for {path}")
    try:
        for f in frames:
            writer.write(cv2.cvtColor(np.ascontiguousarray(f), cv2.COLOR_RGB2BGR))
    finally:
        writer.release()
    return path


def video_id_for(path):
    name = os.path.basename(os.path.normpath(str(path)))
    return os.path.splitext(name)[0]
