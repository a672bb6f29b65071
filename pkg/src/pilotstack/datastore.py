"""On-disk drive-log sessions: PPM frames plus JSONL labels.

A session directory holds
    manifest.json    written once on close, carries the record count
    records.jsonl    one {"i", "image", "steering", "throttle", "ts_ms"} per line
    img_000000.ppm   binary P6 frames, one per record

Appends go to disk immediately, so a crash loses at most the manifest and
load_session refuses the directory instead of returning a short dataset.
Shuffling is pinned to SplitMix64-driven Fisher-Yates everywhere so splits
and batch orders are pure functions of (data, seed).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, asdict

import numpy as np

from .prng import derive_seed, permutation

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.jsonl"


class SessionFormatError(ValueError):
    """A session directory failed an integrity check."""


def image_filename(index: int) -> str:
    return f"img_{index:06d}.ppm"


# -- PPM codec --------------------------------------------------------------

def encode_ppm(image: np.ndarray) -> bytes:
    """Binary P6 with maxval 255. Expects (h, w, 3) uint8."""
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("image must be (h, w, 3) uint8")
    h, w = image.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + image.tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    """Strict parser for the P6 files this package writes (comments allowed)."""
    if not data.startswith(b"P6"):
        raise SessionFormatError("not a P6 ppm (bad magic)")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment runs to end of line
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise SessionFormatError("truncated ppm header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise SessionFormatError("malformed ppm header") from None
    if maxval != 255:
        raise SessionFormatError(f"unsupported ppm maxval {maxval}")
    if w <= 0 or h <= 0:
        raise SessionFormatError("non-positive ppm dimensions")
    raw = data[pos:pos + w * h * 3]
    if len(raw) != w * h * 3:
        raise SessionFormatError("ppm pixel data truncated")
    return np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(image))


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_ppm(fh.read())


# -- session types ----------------------------------------------------------

@dataclass(frozen=True)
class SessionManifest:
    format_version: int
    image_width: int
    image_height: int
    record_rate_hz: float
    track_id: str
    created_utc: str
    record_count: int


class Dataset:
    """Decoded session records held in memory.

    Images stay uint8 (h, w, 3); iterate_batches converts to float on the
    fly. Labels are float64 exactly as stored.
    """

    def __init__(self, images: np.ndarray, labels: np.ndarray,
                 manifest: SessionManifest | None = None):
        if images.ndim != 4 or images.shape[3] != 3:
            raise ValueError("images must be (n, h, w, 3)")
        if labels.shape != (len(images), 2):
            raise ValueError("labels must be (n, 2)")
        self.images = images
        self.labels = labels
        self.manifest = manifest

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[idx], self.labels[idx], self.manifest)

    @staticmethod
    def concatenate(parts: list["Dataset"]) -> "Dataset":
        if not parts:
            raise ValueError("nothing to concatenate")
        shapes = {p.images.shape[1:] for p in parts}
        if len(shapes) != 1:
            raise ValueError(f"image shapes differ across datasets: {shapes}")
        return Dataset(np.concatenate([p.images for p in parts]),
                       np.concatenate([p.labels for p in parts]),
                       parts[0].manifest)


class SessionWriter:
    """Append-only session recorder. Use as a context manager."""

    def __init__(self, directory, image_width: int, image_height: int,
                 record_rate_hz: float, track_id: str, created_utc: str):
        self.directory = os.fspath(directory)
        os.makedirs(self.directory, exist_ok=True)
        if os.path.exists(os.path.join(self.directory, MANIFEST_NAME)):
            raise SessionFormatError(f"{self.directory} already holds a session")
        self._w = int(image_width)
        self._h = int(image_height)
        self._rate = float(record_rate_hz)
        self._track_id = str(track_id)
        self._created = created_utc
        self._count = 0
        self._last_ts = -1
        self._records = open(os.path.join(self.directory, RECORDS_NAME),
                             "w", encoding="utf-8")

    @property
    def record_count(self) -> int:
        return self._count

    def append(self, image: np.ndarray, steering: float, throttle: float,
               ts_ms: int) -> int:
        """Write one record; returns its index."""
        if image.shape != (self._h, self._w, 3):
            raise ValueError(
                f"frame shape {image.shape} does not match session "
                f"({self._h}, {self._w}, 3)")
        if not (-1.0 <= steering <= 1.0 and -1.0 <= throttle <= 1.0):
            raise ValueError("labels must lie in [-1, 1]")
        ts = int(ts_ms)
        if ts < self._last_ts:
            raise ValueError(f"ts_ms must be non-decreasing ({ts} < {self._last_ts})")
        i = self._count
        name = image_filename(i)
        write_ppm(os.path.join(self.directory, name), image)
        self._records.write(json.dumps({
            "i": i, "image": name,
            "steering": float(steering), "throttle": float(throttle),
            "ts_ms": ts}) + "\n")
        self._count += 1
        self._last_ts = ts
        return i

    def close(self) -> SessionManifest:
        self._records.close()
        manifest = SessionManifest(
            format_version=FORMAT_VERSION, image_width=self._w,
            image_height=self._h, record_rate_hz=self._rate,
            track_id=self._track_id, created_utc=self._created,
            record_count=self._count)
        with open(os.path.join(self.directory, MANIFEST_NAME), "w",
                  encoding="utf-8") as fh:
            json.dump(asdict(manifest), fh, indent=2)
            fh.write("\n")
        return manifest

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._records.close()
        return False


def load_session(directory) -> Dataset:
    """Load and fully validate one session directory."""
    directory = os.fspath(directory)
    mpath = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(mpath):
        raise SessionFormatError(f"{directory}: missing {MANIFEST_NAME} "
                                 "(session incomplete or not a session)")
    with open(mpath, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SessionFormatError(f"{directory}: manifest not valid JSON: {e}")
    try:
        manifest = SessionManifest(**doc)
    except TypeError as e:
        raise SessionFormatError(f"{directory}: bad manifest fields: {e}")
    if manifest.format_version != FORMAT_VERSION:
        raise SessionFormatError(
            f"{directory}: unsupported format_version {manifest.format_version}")

    rpath = os.path.join(directory, RECORDS_NAME)
    if not os.path.exists(rpath):
        raise SessionFormatError(f"{directory}: missing {RECORDS_NAME}")
    with open(rpath, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) != manifest.record_count:
        raise SessionFormatError(
            f"{directory}: manifest says {manifest.record_count} records, "
            f"found {len(lines)} lines")

    n = manifest.record_count
    images = np.empty((n, manifest.image_height, manifest.image_width, 3),
                      dtype=np.uint8)
    labels = np.empty((n, 2), dtype=np.float64)
    last_ts = -1
    for lineno, line in enumerate(lines):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise SessionFormatError(f"{directory}: record {lineno} not JSON: {e}")
        if set(rec) != {"i", "image", "steering", "throttle", "ts_ms"}:
            raise SessionFormatError(f"{directory}: record {lineno} has wrong keys")
        if rec["i"] != lineno:
            raise SessionFormatError(
                f"{directory}: record index {rec['i']} at line {lineno}")
        s, t = float(rec["steering"]), float(rec["throttle"])
        if not (-1.0 <= s <= 1.0 and -1.0 <= t <= 1.0):
            raise SessionFormatError(
                f"{directory}: record {lineno} label out of [-1, 1]")
        if rec["ts_ms"] < last_ts:
            raise SessionFormatError(
                f"{directory}: ts_ms decreases at record {lineno}")
        last_ts = rec["ts_ms"]
        img = read_ppm(os.path.join(directory, rec["image"]))
        if img.shape != (manifest.image_height, manifest.image_width, 3):
            raise SessionFormatError(
                f"{directory}: {rec['image']} is {img.shape[1]}x{img.shape[0]}, "
                f"manifest says {manifest.image_width}x{manifest.image_height}")
        images[lineno] = img
        labels[lineno, 0] = s
        labels[lineno, 1] = t
    return Dataset(images, labels, manifest)


# -- splits and batches -----------------------------------------------------

def split_train_val(dataset: Dataset, val_fraction: float,
                    seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffle-split; the first ceil(n * frac) indices of the
    shuffled order become the validation set."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    order = permutation(len(dataset), seed)
    n_val = math.ceil(len(dataset) * val_fraction)
    return dataset.subset(order[n_val:]), dataset.subset(order[:n_val])


def iterate_batches(dataset: Dataset, batch_size: int, seed: int, epoch: int):
    """Yield (images, labels) minibatches in a per-epoch shuffled order.

    Images come out float32 in 0..255 (no normalization here); labels are
    float32 columns (steering, throttle). The last batch may be short.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = permutation(len(dataset), derive_seed(seed, epoch))
    for start in range(0, len(dataset), batch_size):
        idx = order[start:start + batch_size]
        yield (dataset.images[idx].astype(np.float32),
               dataset.labels[idx].astype(np.float32))
