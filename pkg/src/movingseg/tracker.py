"""Overlap-based multi-object tracker.

Detections are gated by score, then associated frame by frame: the benefit of
linking a track to a detection is the mask IoU between the track's most recent
segmentation and the detection, and the per-frame association is a maximum
Hungarian matching.  Unmatched high-scoring moving detections open new tracks;
tracks idle longer than the inactivity budget are retired.  An optional
backward pass extends each track before its first frame, which lets static
detections of an object be attached before it starts moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .assign import solve_max_assignment
from .mask import Mask, area, iou


@dataclass(frozen=True)
class TrackerConfig:
    alpha_high: float = 0.9
    alpha_low: float = 0.7
    t_inactive: int = 10
    min_match_iou: float = 1e-9
    static_overlap_iou: float = 0.5
    bidirectional: bool = False

    def __post_init__(self) -> None:
        if not (self.alpha_low <= self.alpha_high):
            raise ValueError(
                f"alpha_low ({self.alpha_low}) must not exceed alpha_high ({self.alpha_high})"
            )
        if self.t_inactive < 0:
            raise ValueError("t_inactive must be >= 0")
        if self.min_match_iou < 0:
            raise ValueError("min_match_iou must be >= 0")


@dataclass(frozen=True)
class Detection:
    frame: int
    score: float
    mask: Mask
    kind: str = "moving"

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError("detection score must be finite")
        if self.kind not in ("moving", "static"):
            raise ValueError(f"unknown detection kind {self.kind!r}")
        if area(self.mask) == 0:
            raise ValueError("detection mask must be non-empty")


@dataclass(frozen=True)
class Track:
    """A sequence of linked detections under one identity."""

    id: int
    entries: tuple[Detection, ...]
    state: str = "active"

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("track must contain at least one detection")
        frames = [d.frame for d in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("track frames must be strictly increasing")

    @property
    def last_active_frame(self) -> int:
        return self.entries[-1].frame

    @property
    def first_frame(self) -> int:
        return self.entries[0].frame

    @property
    def last_mask(self) -> Mask:
        return self.entries[-1].mask


def gate(dets: Sequence[Detection], cfg: TrackerConfig) -> list[Detection]:
    """Drop detections scoring below alpha_low (boundary scores survive)."""
    return [d for d in dets if d.score >= cfg.alpha_low]


def _eligible(track: Track, frame: int, cfg: TrackerConfig) -> bool:
    # idle frames are the fully missed ones between the last entry and `frame`
    return track.state == "active" and (frame - track.last_active_frame - 1) <= cfg.t_inactive


def step(tracks: Sequence[Track], frame_dets: Sequence[Detection],
         cfg: TrackerConfig, frame: int | None = None) -> list[Track]:
    """Advance one frame: associate, extend, retire, and open tracks.

    All detections must come from a single frame strictly after every track's
    last entry.  New ids continue from the largest existing id.
    """
    frames = {d.frame for d in frame_dets}
    if len(frames) > 1:
        raise ValueError(f"detections span several frames: {sorted(frames)}")
    if frame is None:
        if not frames:
            raise ValueError("cannot infer frame from an empty detection list")
        frame = frames.pop()
    elif frames and frames != {frame}:
        raise ValueError(f"detections are for frame {frames.pop()}, expected {frame}")
    for t in tracks:
        if t.last_active_frame >= frame:
            raise ValueError(
                f"frame {frame} is not after track {t.id} (last entry {t.last_active_frame})"
            )

    updated: dict[int, Track] = {}
    candidates: list[Track] = []
    for t in tracks:
        if _eligible(t, frame, cfg):
            candidates.append(t)
            updated[t.id] = t
        else:
            updated[t.id] = t if t.state == "inactive" else replace(t, state="inactive")

    benefit = np.zeros((len(candidates), len(frame_dets)))
    for i, t in enumerate(candidates):
        for j, d in enumerate(frame_dets):
            benefit[i, j] = iou(t.last_mask, d.mask)
    matched_dets: set[int] = set()
    for i, j in solve_max_assignment(benefit).pairs:
        if benefit[i, j] > cfg.min_match_iou:
            t = candidates[i]
            updated[t.id] = replace(t, entries=(*t.entries, frame_dets[j]))
            matched_dets.add(j)

    result = [updated[t.id] for t in tracks]
    next_id = max((t.id for t in tracks), default=0) + 1
    for j, d in enumerate(frame_dets):
        if j in matched_dets:
            continue
        if d.kind == "moving" and d.score >= cfg.alpha_high:
            result.append(Track(next_id, (d,)))
            next_id += 1
    return result


def track_sequence(dets_by_frame: Mapping[int, Sequence[Detection]],
                   cfg: TrackerConfig | None = None) -> list[Track]:
    """Gate, then fold the per-frame association over the whole sequence."""
    cfg = cfg or TrackerConfig()
    tracks: list[Track] = []
    for frame in sorted(dets_by_frame):
        kept = gate(dets_by_frame[frame], cfg)
        if kept:
            tracks = step(tracks, kept, cfg, frame=frame)
    return tracks


def merge_moving_static(moving: Mapping[int, Sequence[Detection]],
                        static: Mapping[int, Sequence[Detection]],
                        cfg: TrackerConfig | None = None) -> dict[int, list[Detection]]:
    """Drop static detections overlapping a moving one; keep the rest as static.

    Downstream, surviving static detections may extend tracks but never open
    them.
    """
    cfg = cfg or TrackerConfig()
    merged: dict[int, list[Detection]] = {}
    for frame in sorted(set(moving) | set(static)):
        movers = list(moving.get(frame, ()))
        keep = [
            s for s in static.get(frame, ())
            if all(iou(s.mask, m.mask) <= cfg.static_overlap_iou for m in movers)
        ]
        merged[frame] = movers + keep
    return merged


def bidirectional_track(moving: Mapping[int, Sequence[Detection]],
                        static: Mapping[int, Sequence[Detection]],
                        cfg: TrackerConfig) -> list[Track]:
    """Forward tracking, then a backward pass that only extends existing tracks.

    The backward pass walks frames in reverse; each forward track becomes
    matchable below its first frame, seeded with its earliest mask, and
    accretes leftover (typically static) detections.  Forward ids are kept and
    no new identities appear.
    """
    if not cfg.bidirectional:
        raise ValueError("bidirectional_track requires cfg.bidirectional")
    gated_moving = {f: gate(ds, cfg) for f, ds in moving.items()}
    gated_static = {f: gate(ds, cfg) for f, ds in static.items()}
    merged = merge_moving_static(gated_moving, gated_static, cfg)
    forward = track_sequence(merged, cfg)
    if not forward:
        return forward

    used = {id(d) for t in forward for d in t.entries}
    anchors: dict[int, list[int]] = {}
    for t in forward:
        anchors.setdefault(t.first_frame, []).append(t.id)
    by_id = {t.id: t for t in forward}

    live: dict[int, tuple[int, Mask]] = {}   # id -> (earliest frame so far, earliest mask)
    additions: dict[int, list[Detection]] = {t.id: [] for t in forward}
    for frame in sorted(merged, reverse=True):
        cands = [d for d in merged[frame] if id(d) not in used]
        eligible = sorted(
            tid for tid, (earliest, _) in live.items()
            if earliest - frame - 1 <= cfg.t_inactive
        )
        if cands and eligible:
            benefit = np.zeros((len(eligible), len(cands)))
            for i, tid in enumerate(eligible):
                for j, d in enumerate(cands):
                    benefit[i, j] = iou(live[tid][1], d.mask)
            for i, j in solve_max_assignment(benefit).pairs:
                if benefit[i, j] > cfg.min_match_iou:
                    tid, det = eligible[i], cands[j]
                    additions[tid].append(det)
                    live[tid] = (frame, det.mask)
                    used.add(id(det))
        for tid in anchors.get(frame, ()):
            live[tid] = (frame, by_id[tid].entries[0].mask)

    out = []
    for t in forward:
        extra = sorted(additions[t.id], key=lambda d: d.frame)
        out.append(replace(t, entries=(*extra, *t.entries)) if extra else t)
    return out
