"""Bit-exact dataset interchange.

Label maps travel as binary PGM (P5) with maxval 255 or 65535.  Everything
else is JSON with a top-level ``format_version`` of 1, written canonically
(sorted keys, two-space indent, trailing newline) so identical data always
produces identical bytes.  Scores are serialized with Python's shortest
round-tripping float representation, so write/read is exact.  Readers reject
malformed input outright instead of repairing it; errors carry the path to the
offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mask import Mask, MaskError
from .metrics import REPORT_FIELDS, GroundTruthSequence, MetricReport
from .tracker import Detection, Track

FORMAT_VERSION = 1

_WHITESPACE = (0x20, 0x09, 0x0A, 0x0D, 0x0B, 0x0C)


class SchemaError(ValueError):
    """A file violates its documented format."""


@dataclass(frozen=True)
class Manifest:
    sequence: str
    width: int
    height: int
    ignore_value: int | None
    frames: tuple[tuple[int, str], ...]   # (frame index, labelmap path relative to manifest)


# ---------------------------------------------------------------- PGM label maps

def read_labelmap(path) -> np.ndarray:
    """Parse a binary PGM (P5) file into an int32 label map."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    i, n = 0, len(data)
    while len(tokens) < 4 and i < n:
        c = data[i]
        if c in _WHITESPACE:
            i += 1
            continue
        if c == 0x23:  # '#' comment runs to end of line
            while i < n and data[i] not in (0x0A, 0x0D):
                i += 1
            continue
        j = i
        while j < n and data[j] not in _WHITESPACE and data[j] != 0x23:
            j += 1
        tokens.append(data[i:j])
        i = j
    if len(tokens) < 4:
        raise SchemaError(f"{path}: truncated PGM header")
    if tokens[0] != b"P5":
        raise SchemaError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise SchemaError(f"{path}: non-numeric PGM header field") from None
    if width <= 0 or height <= 0:
        raise SchemaError(f"{path}: non-positive PGM dimensions {width}x{height}")
    if maxval not in (255, 65535):
        raise SchemaError(f"{path}: unsupported maxval {maxval} (need 255 or 65535)")
    if i >= n or data[i] not in _WHITESPACE:
        raise SchemaError(f"{path}: missing whitespace after maxval")
    payload = data[i + 1:]
    expected = width * height * (1 if maxval == 255 else 2)
    if len(payload) != expected:
        raise SchemaError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    dtype = ">u1" if maxval == 255 else ">u2"
    return np.frombuffer(payload, dtype=dtype).reshape(height, width).astype(np.int32)


def write_labelmap(arr: np.ndarray, path) -> None:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError("label map must be 2-D")
    if arr.size and (arr.min() < 0 or arr.max() > 65535):
        raise ValueError("label values must lie in [0, 65535]")
    maxval = 255 if (arr.size == 0 or arr.max() <= 255) else 65535
    dtype = ">u1" if maxval == 255 else ">u2"
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + arr.astype(dtype).tobytes())


# ---------------------------------------------------------------- JSON plumbing

def _dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def _get(obj, key, kinds, where, allow_none=False):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in obj:
        raise SchemaError(f"{where}.{key}: missing")
    v = obj[key]
    if v is None and allow_none:
        return None
    if isinstance(v, bool) and bool not in (kinds if isinstance(kinds, tuple) else (kinds,)):
        raise SchemaError(f"{where}.{key}: expected {kinds}, got bool")
    if not isinstance(v, kinds):
        raise SchemaError(f"{where}.{key}: expected {kinds}, got {type(v).__name__}")
    return v


def _check_version(doc, path) -> None:
    version = _get(doc, "format_version", int, str(path))
    if version != FORMAT_VERSION:
        raise SchemaError(f"{path}.format_version: unsupported version {version}")


def _mask_from_field(rle, width, height, where) -> Mask:
    if not isinstance(rle, list) or not all(
        isinstance(r, int) and not isinstance(r, bool) and r >= 0 for r in rle
    ):
        raise SchemaError(f"{where}: rle must be a list of non-negative integers")
    try:
        return Mask(width, height, tuple(rle))
    except MaskError as e:
        raise SchemaError(f"{where}: {e}") from None


def _score_from_field(raw, where) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SchemaError(f"{where}: score must be a number")
    score = float(raw)
    if not math.isfinite(score) or not 0.0 <= score <= 1.0:
        raise SchemaError(f"{where}: score {raw} outside [0, 1]")
    return score


# ---------------------------------------------------------------- manifests

def read_manifest(path) -> Manifest:
    doc = _load_json(path)
    _check_version(doc, path)
    name = _get(doc, "sequence", str, str(path))
    width = _get(doc, "width", int, str(path))
    height = _get(doc, "height", int, str(path))
    ignore = _get(doc, "ignore_value", int, str(path), allow_none=True)
    raw_frames = _get(doc, "frames", list, str(path))
    frames = []
    last = None
    for k, item in enumerate(raw_frames):
        where = f"{path}.frames[{k}]"
        idx = _get(item, "index", int, where)
        rel = _get(item, "labelmap", str, where)
        if last is not None and idx <= last:
            raise SchemaError(f"{where}.index: frame indices must be strictly increasing")
        last = idx
        frames.append((idx, rel))
    return Manifest(name, width, height, ignore, tuple(frames))


def write_manifest(manifest: Manifest, path) -> None:
    _dump_json(
        {
            "format_version": FORMAT_VERSION,
            "sequence": manifest.sequence,
            "width": manifest.width,
            "height": manifest.height,
            "ignore_value": manifest.ignore_value,
            "frames": [
                {"index": idx, "labelmap": rel} for idx, rel in manifest.frames
            ],
        },
        path,
    )


def load_sequence(manifest_path) -> tuple[str, GroundTruthSequence]:
    """Read a manifest and its label maps into a GroundTruthSequence."""
    manifest = read_manifest(manifest_path)
    base = Path(manifest_path).parent
    frames = {}
    for idx, rel in manifest.frames:
        file = base / rel
        if not file.is_file():
            raise SchemaError(f"{manifest_path}: labelmap {rel} does not exist")
        arr = read_labelmap(file)
        if arr.shape != (manifest.height, manifest.width):
            raise SchemaError(
                f"{file}: label map is {arr.shape[1]}x{arr.shape[0]}, manifest says "
                f"{manifest.width}x{manifest.height}"
            )
        frames[idx] = arr
    return manifest.sequence, GroundTruthSequence(
        manifest.width, manifest.height, frames, manifest.ignore_value
    )


def write_sequence(name: str, gt: GroundTruthSequence, out_dir,
                   labelmap_dir: str = "labelmaps") -> Path:
    """Write label maps plus manifest under out_dir; returns the manifest path."""
    out = Path(out_dir)
    (out / labelmap_dir).mkdir(parents=True, exist_ok=True)
    frames = []
    for idx in gt.eval_frames():
        rel = f"{labelmap_dir}/{idx:06d}.pgm"
        write_labelmap(gt.labeled_frames[idx], out / rel)
        frames.append((idx, rel))
    manifest = Manifest(name, gt.width, gt.height, gt.ignore_value, tuple(frames))
    manifest_path = out / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


# ---------------------------------------------------------------- detections

def read_detections(path) -> tuple[int, int, dict[int, list[Detection]]]:
    doc = _load_json(path)
    _check_version(doc, path)
    width = _get(doc, "width", int, str(path))
    height = _get(doc, "height", int, str(path))
    raw_frames = _get(doc, "frames", list, str(path))
    out: dict[int, list[Detection]] = {}
    last = None
    for k, item in enumerate(raw_frames):
        where = f"{path}.frames[{k}]"
        idx = _get(item, "index", int, where)
        if last is not None and idx <= last:
            raise SchemaError(f"{where}.index: frame indices must be strictly increasing")
        last = idx
        dets = []
        for m, dd in enumerate(_get(item, "detections", list, where)):
            dwhere = f"{where}.detections[{m}]"
            score = _score_from_field(_get(dd, "score", (int, float), dwhere), dwhere)
            kind = _get(dd, "kind", str, dwhere)
            if kind not in ("moving", "static"):
                raise SchemaError(f"{dwhere}.kind: expected 'moving' or 'static'")
            mask = _mask_from_field(_get(dd, "rle", list, dwhere), width, height,
                                    f"{dwhere}.rle")
            try:
                dets.append(Detection(idx, score, mask, kind))
            except ValueError as e:
                raise SchemaError(f"{dwhere}: {e}") from None
        out[idx] = dets
    return width, height, out


def write_detections(path, width: int, height: int, dets_by_frame) -> None:
    frames = []
    for idx in sorted(dets_by_frame):
        frames.append(
            {
                "index": idx,
                "detections": [
                    {"score": d.score, "kind": d.kind, "rle": list(d.mask.runs)}
                    for d in dets_by_frame[idx]
                ],
            }
        )
    _dump_json(
        {"format_version": FORMAT_VERSION, "width": width, "height": height,
         "frames": frames},
        path,
    )


# ---------------------------------------------------------------- tracks

def read_tracks(path) -> tuple[int, int, list[Track]]:
    doc = _load_json(path)
    _check_version(doc, path)
    width = _get(doc, "width", int, str(path))
    height = _get(doc, "height", int, str(path))
    tracks = []
    seen_ids = set()
    for k, item in enumerate(_get(doc, "tracks", list, str(path))):
        where = f"{path}.tracks[{k}]"
        tid = _get(item, "id", int, where)
        if tid in seen_ids:
            raise SchemaError(f"{where}.id: duplicate track id {tid}")
        seen_ids.add(tid)
        entries = []
        last = None
        for m, ff in enumerate(_get(item, "frames", list, where)):
            fwhere = f"{where}.frames[{m}]"
            idx = _get(ff, "index", int, fwhere)
            if last is not None and idx <= last:
                raise SchemaError(f"{fwhere}.index: track frames must be strictly increasing")
            last = idx
            score = _score_from_field(_get(ff, "score", (int, float), fwhere), fwhere)
            mask = _mask_from_field(_get(ff, "rle", list, fwhere), width, height,
                                    f"{fwhere}.rle")
            try:
                entries.append(Detection(idx, score, mask))
            except ValueError as e:
                raise SchemaError(f"{fwhere}: {e}") from None
        if not entries:
            raise SchemaError(f"{where}: track has no frames")
        tracks.append(Track(tid, tuple(entries)))
    return width, height, tracks


def write_tracks(path, width: int, height: int, tracks) -> None:
    ids = [t.id for t in tracks]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate track ids")
    _dump_json(
        {
            "format_version": FORMAT_VERSION,
            "width": width,
            "height": height,
            "tracks": [
                {
                    "id": t.id,
                    "frames": [
                        {"index": d.frame, "score": d.score, "rle": list(d.mask.runs)}
                        for d in t.entries
                    ],
                }
                for t in tracks
            ],
        },
        path,
    )


# ---------------------------------------------------------------- reports

def write_report(report: MetricReport, path) -> None:
    body = report.to_dict()
    per_seq = body.pop("per_sequence", {})
    _dump_json(
        {"format_version": FORMAT_VERSION, "aggregate": body,
         "per_sequence": per_seq},
        path,
    )


def write_report_csv(report: MetricReport, path) -> None:
    import csv

    def cell(v):
        return "" if v is None else repr(v) if isinstance(v, float) else str(v)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("sequence",) + REPORT_FIELDS)
        for name in sorted(report.per_sequence):
            rep = report.per_sequence[name]
            writer.writerow([name] + [cell(rep.values()[f]) for f in REPORT_FIELDS])
        writer.writerow(["aggregate"] + [cell(report.values()[f]) for f in REPORT_FIELDS])
