"""Synthetic rectangle scenes labelled with their symmetry axes.

Each scene draws its rectangle from a Philox generator keyed by
``(seed, id)``, so any subset of ids can be generated in any order, or in
parallel, and still be bit-identical.

Geometry is continuous: pixel ``(row, col)`` covers ``[col, col+1) x
[row, row+1)``.  A rectangle ``(x, y, w, h)`` covers columns ``x..x+w-1`` and
its vertical axis is the line ``X = x + w/2``; the label is rasterized at
column ``x + w // 2``.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .formats import read_binary_pgm, write_binary_pgm

AXIS_MODES = ("vertical", "horizontal", "both")
DEFAULT_CANVAS = (256, 256)
DEFAULT_COUNT = 10000
DEFAULT_TRAIN = 8500

_SCENE_STREAM = 0
_SPLIT_STREAM = 1


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


@dataclass
class RectScene:
    id: int
    image: np.ndarray
    label: np.ndarray
    rect: tuple[int, int, int, int]
    axes: list[tuple[float, float, float, float]]
    label_width: int = 1

    def record(self) -> dict:
        return {"id": self.id, "rect": list(self.rect), "axes": [list(a) for a in self.axes]}


def _band(center: int, width: int, lo: int, hi: int) -> slice:
    start = center - width // 2
    return slice(max(start, lo), min(start + width, hi))


def rasterize(canvas, rect, label_width=1, axis_mode="vertical", outline_only=False):
    """Image, label and axis segments for an axis-aligned rectangle."""
    H, W = canvas
    x, y, w, h = rect
    image = np.zeros((H, W), dtype=np.uint8)
    image[y : y + h, x : x + w] = 1
    if outline_only:
        image[y + 1 : y + h - 1, x + 1 : x + w - 1] = 0
    label = np.zeros((H, W), dtype=np.uint8)
    axes = []
    if axis_mode in ("vertical", "both"):
        label[y : y + h, _band(x + w // 2, label_width, x, x + w)] = 1
        axes.append((x + w / 2, float(y), x + w / 2, float(y + h)))
    if axis_mode in ("horizontal", "both"):
        label[_band(y + h // 2, label_width, y, y + h), x : x + w] = 1
        axes.append((float(x), y + h / 2, float(x + w), y + h / 2))
    return image, label, axes


def _size_range(extent: int, label_width: int) -> tuple[int, int]:
    return max(math.ceil(extent / 8), label_width + 1), extent // 2


def gen_scene(
    seed: int,
    id: int,
    canvas=DEFAULT_CANVAS,
    label_width: int = 1,
    axis_mode: str = "vertical",
    outline_only: bool = False,
    width_choices=None,
) -> RectScene:
    """Draw one scene.

    Width and height are uniform integers in ``[extent/8, extent/2]``, raised
    to ``label_width + 1`` if needed; the position keeps a 1 px margin.
    ``width_choices`` replaces the width draw with a uniform pick from the
    given values.
    """
    H, W = (int(c) for c in canvas)
    if H < 16 or W < 16:
        raise InvalidArgumentError(f"canvas must be at least 16x16, got {H}x{W}")
    if label_width < 1:
        raise InvalidArgumentError(f"label_width must be >= 1, got {label_width}")
    if axis_mode not in AXIS_MODES:
        raise InvalidArgumentError(f"axis_mode must be one of {AXIS_MODES}, got {axis_mode!r}")
    wlo, whi = _size_range(W, label_width)
    hlo, hhi = _size_range(H, label_width)
    if wlo > whi or hlo > hhi:
        raise InvalidArgumentError(f"label_width {label_width} too wide for a {H}x{W} canvas")
    rng = keyed_rng(seed, _SCENE_STREAM, id)
    if width_choices is not None:
        choices = sorted({int(c) for c in width_choices if label_width < int(c) <= W - 2})
        if not choices:
            raise InvalidArgumentError(f"no width choice fits a {W}-wide canvas")
        w = choices[int(rng.integers(len(choices)))]
    else:
        w = int(rng.integers(wlo, whi + 1))
    h = int(rng.integers(hlo, hhi + 1))
    x = int(rng.integers(1, W - w))
    y = int(rng.integers(1, H - h))
    rect = (x, y, w, h)
    image, label, axes = rasterize((H, W), rect, label_width, axis_mode, outline_only)
    return RectScene(int(id), image, label, rect, axes, int(label_width))


@dataclass
class DatasetManifest:
    seed: int
    canvas: tuple[int, int]
    count: int
    split: tuple[int, int]
    records: list[dict] = field(default_factory=list)
    root: Path | None = None
    label_width: int = 1
    axis_mode: str = "vertical"
    width_choices: tuple[int, ...] | None = None

    def ids(self, split: str | None = None) -> list[int]:
        return [r["id"] for r in self.records if split is None or r["split"] == split]

    def record(self, id: int) -> dict:
        for r in self.records:
            if r["id"] == id:
                return r
        raise KeyError(id)

    def path(self, rel) -> Path:
        return (self.root or Path(".")) / rel

    def load_image(self, id: int) -> np.ndarray:
        return read_binary_pgm(self.path(self.record(id)["image"])).astype(float)

    def load_label(self, id: int) -> np.ndarray:
        return read_binary_pgm(self.path(self.record(id)["label"]))


def split_ids(seed: int, count: int, train_count: int) -> set[int]:
    perm = keyed_rng(seed, _SPLIT_STREAM, count).permutation(count)
    return set(int(i) for i in perm[:train_count])


def scene_name(id: int) -> str:
    return f"{id:05d}.pgm"


def gen_dataset(
    seed: int = 0,
    count: int = DEFAULT_COUNT,
    train_count: int = DEFAULT_TRAIN,
    canvas=DEFAULT_CANVAS,
    label_width: int = 1,
    axis_mode: str = "vertical",
    out_dir="data",
    outline_only: bool = False,
    width_choices=None,
    workers: int | None = None,
) -> DatasetManifest:
    """Write ``count`` scene/label PGM pairs plus ``manifest.jsonl`` and ``dataset.json``."""
    if count < 2 or not 0 < train_count < count:
        raise InvalidArgumentError(f"need 0 < train_count < count, got train={train_count}, count={count}")
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    train = split_ids(seed, count, train_count)

    def work(i):
        s = gen_scene(seed, i, canvas, label_width, axis_mode, outline_only, width_choices)
        write_binary_pgm(out / "images" / scene_name(i), s.image)
        write_binary_pgm(out / "labels" / scene_name(i), s.label)
        rec = {
            "id": i,
            "image": f"images/{scene_name(i)}",
            "label": f"labels/{scene_name(i)}",
            "rect": list(s.rect),
            "axes": [list(a) for a in s.axes],
            "split": "train" if i in train else "test",
        }
        return rec

    workers = workers or min(8, os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(work, range(count)))
    else:
        records = [work(i) for i in range(count)]

    with open(out / "manifest.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    H, W = (int(c) for c in canvas)
    meta = {
        "seed": int(seed),
        "canvas": [H, W],
        "count": int(count),
        "split": [int(train_count), int(count - train_count)],
        "label_width": int(label_width),
        "axis_mode": axis_mode,
        "outline_only": bool(outline_only),
        "width_choices": sorted({int(c) for c in width_choices}) if width_choices is not None else None,
    }
    (out / "dataset.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return DatasetManifest(int(seed), (H, W), int(count), (int(train_count), int(count - train_count)),
                           records, out, int(label_width), axis_mode, _choices(meta["width_choices"]))


def load_manifest(path) -> DatasetManifest:
    """Read ``manifest.jsonl`` (or the directory holding it) and its ``dataset.json``."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.jsonl"
    records = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    meta_path = path.parent / "dataset.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    n_train = sum(r["split"] == "train" for r in records)
    canvas = tuple(meta.get("canvas", (0, 0)))
    return DatasetManifest(
        meta.get("seed", 0), canvas, len(records), (n_train, len(records) - n_train), records, path.parent,
        meta.get("label_width", 1), meta.get("axis_mode", "vertical"), _choices(meta.get("width_choices")),
    )


def _choices(v):
    return None if v is None else tuple(int(c) for c in v)
