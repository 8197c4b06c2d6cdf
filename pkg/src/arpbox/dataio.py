"""Annotation and detection file handling.

Two formats are spoken here:

* DOTA-style annotation text: optional ``imagesource:...`` / ``gsd:...``
  header lines, then one object per line as eight vertex coordinates, a
  category token and a 0/1 difficult flag, single-space separated, LF endings.
* A detection stream of JSON lines, one object per line:
  ``{"image": ..., "class": ..., "score": ..., "box": {"kind": "quad"|"arp"|"doc",
  "values": [...]}}`` with an optional ``obliquity_p``.

Plus tile splitting of annotation sets for large images: a grid with fixed
overlap, each annotation assigned to the tiles it sufficiently overlaps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .arp import arp_from_vector, encode_arp_lenient, quad_to_rect
from .geometry import GeometryError, OrientedRect, QuadBox, clip_convex
from .postprocess import Detection

__all__ = [
    "ParseError",
    "AnnotationRecord",
    "TileSpec",
    "parse_dota",
    "write_dota",
    "parse_detections",
    "write_detections",
    "tile_annotations",
]


class ParseError(ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated object: a convex quad, its category, and a difficult flag."""

    quad: QuadBox
    category: str
    difficult: int = 0

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("category must be non-empty")
        if self.difficult not in (0, 1):
            raise ValueError(f"difficult flag must be 0 or 1, got {self.difficult}")


@dataclass(frozen=True)
class TileSpec:
    """Square tile size and overlap between neighboring tiles, in pixels."""

    tile_size: int
    overlap: int

    def __post_init__(self) -> None:
        if self.tile_size <= 0:
            raise ValueError(f"tile_size must be positive, got {self.tile_size}")
        if not 0 <= self.overlap < self.tile_size:
            raise ValueError(
                f"overlap must satisfy 0 <= overlap < tile_size, got {self.overlap}"
            )


_HEADER_PREFIXES = ("imagesource", "gsd")


def parse_dota(text: str) -> list[AnnotationRecord]:
    """Parse DOTA-format annotation text.

    Header lines are skipped; every other non-blank line must carry exactly
    ten whitespace-separated tokens. Raises ParseError with the offending line
    number otherwise.
    """
    records: list[AnnotationRecord] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(_HEADER_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) != 10:
            raise ParseError(line_no, f"expected 10 tokens, got {len(tokens)}")
        try:
            coords = [float(t) for t in tokens[:8]]
        except ValueError as exc:
            raise ParseError(line_no, f"bad coordinate: {exc}") from None
        if not all(math.isfinite(c) for c in coords):
            raise ParseError(line_no, "non-finite coordinate")
        category = tokens[8]
        if tokens[9] not in ("0", "1"):
            raise ParseError(line_no, f"difficult flag must be 0 or 1, got {tokens[9]!r}")
        try:
            quad = QuadBox.from_points(np.asarray(coords).reshape(4, 2))
        except GeometryError as exc:
            raise ParseError(line_no, f"bad quad: {exc}") from None
        records.append(
            AnnotationRecord(quad=quad, category=category, difficult=int(tokens[9]))
        )
    return records


def _fmt(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot format non-finite coordinate {v}")
    out = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if out in ("-0", "") else out


def write_dota(records: Iterable[AnnotationRecord]) -> str:
    """Serialize annotation records in canonical DOTA formatting.

    Canonical form: coordinates rounded to six decimals with trailing zeros
    stripped, single-space separators, LF endings. ``parse_dota`` of the output
    reproduces the records; re-serializing is byte-stable.
    """
    lines = []
    for rec in records:
        coords = " ".join(_fmt(c) for p in rec.quad.vertices for c in p)
        lines.append(f"{coords} {rec.category} {rec.difficult}\n")
    return "".join(lines)


_BOX_KINDS = ("quad", "arp", "doc")
_BOX_LENGTHS = {"quad": 8, "arp": 7, "doc": 5}


def _detection_from_obj(obj: dict, line_no: int) -> tuple[str, Detection]:
    if not isinstance(obj, dict):
        raise ParseError(line_no, "expected a JSON object")
    for key in ("image", "class", "score", "box"):
        if key not in obj:
            raise ParseError(line_no, f"missing key {key!r}")
    image = obj["image"]
    if not isinstance(image, str) or not image:
        raise ParseError(line_no, "image must be a non-empty string")
    class_id = obj["class"]
    if not isinstance(class_id, int) or isinstance(class_id, bool) or class_id < 0:
        raise ParseError(line_no, "class must be a non-negative integer")
    score = obj["score"]
    if not isinstance(score, (int, float)) or not 0 <= float(score) <= 1:
        raise ParseError(line_no, "score must lie in [0, 1]")
    box = obj["box"]
    if not isinstance(box, dict) or "kind" not in box or "values" not in box:
        raise ParseError(line_no, "box must be {kind, values}")
    kind = box["kind"]
    if kind not in _BOX_KINDS:
        raise ParseError(line_no, f"unknown box kind {kind!r}")
    values = box["values"]
    if (
        not isinstance(values, list)
        or len(values) != _BOX_LENGTHS[kind]
        or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)
    ):
        raise ParseError(
            line_no, f"box kind {kind!r} needs {_BOX_LENGTHS[kind]} finite numbers"
        )
    obliquity_p = obj.get("obliquity_p", 0.5)
    if not isinstance(obliquity_p, (int, float)) or not 0 <= float(obliquity_p) <= 1:
        raise ParseError(line_no, "obliquity_p must lie in [0, 1]")
    try:
        if kind == "arp":
            arp = arp_from_vector(values)
        elif kind == "doc":
            arp = encode_arp_lenient(OrientedRect(*(float(v) for v in values)))
        else:
            quad = QuadBox.from_points(np.asarray(values, dtype=float).reshape(4, 2))
            arp = encode_arp_lenient(quad_to_rect(quad))
    except GeometryError as exc:
        raise ParseError(line_no, f"bad box: {exc}") from None
    det = Detection(
        box=arp, score=float(score), class_id=class_id, obliquity_p=float(obliquity_p)
    )
    return image, det


def parse_detections(text: str) -> list[tuple[str, Detection]]:
    """Parse a JSON-lines detection stream into (image_id, Detection) pairs.

    quad/doc boxes are converted into the area-ratio form on ingestion (nearly
    horizontal ones through the horizontal-box convention). Schema violations
    raise ParseError with the line number.
    """
    out: list[tuple[str, Detection]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc}") from None
        out.append(_detection_from_obj(obj, line_no))
    return out


def write_detections(records: Iterable[tuple[str, Detection]]) -> str:
    """Serialize (image_id, Detection) pairs as JSON lines, boxes in arp form."""
    lines = []
    for image, det in records:
        obj = {
            "image": image,
            "class": det.class_id,
            "score": det.score,
            "obliquity_p": det.obliquity_p,
            "box": {
                "kind": "arp",
                "values": [
                    det.box.x,
                    det.box.y,
                    det.box.w,
                    det.box.h,
                    det.box.lam1,
                    det.box.lam2,
                    det.box.lam3,
                ],
            },
        }
        lines.append(json.dumps(obj, sort_keys=True) + "\n")
    return "".join(lines)


def _tile_origins(image_size: int, tile: int, stride: int) -> list[int]:
    if image_size <= tile:
        return [0]
    origins = [0]
    while origins[-1] + tile < image_size:
        origins.append(min(origins[-1] + stride, image_size - tile))
    return origins


def tile_annotations(
    records: Sequence[AnnotationRecord],
    image_w: int,
    image_h: int,
    spec: TileSpec,
    retention: float = 0.5,
) -> Mapping[str, list[AnnotationRecord]]:
    """Split an image's annotations onto an overlapping tile grid.

    Tiles are laid out with stride ``tile_size - overlap``; the last tile per
    axis is pulled back so it stays inside the image while every pixel belongs
    to at least one tile (images smaller than a tile get a single tile). A
    record lands on every tile it overlaps, translated into the tile frame;
    records straddling a tile edge are kept (with coordinates clamped to the
    tile) only when the retained intersection area is at least ``retention``
    of the quad's area.

    Returns a mapping "{x0}_{y0}" -> records for that tile.
    """
    if not 0 < retention <= 1:
        raise ValueError(f"retention must lie in (0, 1], got {retention}")
    stride = spec.tile_size - spec.overlap
    xs = _tile_origins(image_w, spec.tile_size, stride)
    ys = _tile_origins(image_h, spec.tile_size, stride)
    out: dict[str, list[AnnotationRecord]] = {}
    for y0 in ys:
        for x0 in xs:
            x1, y1 = x0 + spec.tile_size, y0 + spec.tile_size
            tile_poly = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
            kept: list[AnnotationRecord] = []
            for rec in records:
                inter = clip_convex(rec.quad.as_array(), tile_poly)
                if inter.shape[0] < 3:
                    continue
                inter_area = _polygon_area_abs(inter)
                if inter_area < retention * rec.quad.area:
                    continue
                arr = rec.quad.as_array()
                arr[:, 0] = np.clip(arr[:, 0], x0, x1) - x0
                arr[:, 1] = np.clip(arr[:, 1], y0, y1) - y0
                try:
                    clamped = QuadBox.from_points(arr)
                except GeometryError:
                    continue  # clamping collapsed the quad
                kept.append(
                    AnnotationRecord(
                        quad=clamped, category=rec.category, difficult=rec.difficult
                    )
                )
            out[f"{x0}_{y0}"] = kept
    return out


def _polygon_area_abs(arr: np.ndarray) -> float:
    x, y = arr[:, 0], arr[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2
