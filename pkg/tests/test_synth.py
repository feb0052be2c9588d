import numpy as np
import pytest

from movingseg.mask import area, rle_decode
from movingseg.metrics import Region, proposed_measure
from movingseg.synth import (NoiseConfig, OcclusionEvent, PlacementError,
                             SynthConfig, corrupt, generate)
from movingseg.tracker import TrackerConfig, track_sequence


def base_cfg(**kw):
    defaults = dict(seed=1, frames=5, width=64, height=48, objects=1)
    defaults.update(kw)
    return SynthConfig(**defaults)


class TestGenerate:
    def test_single_object_bookkeeping(self):
        gt, tracks = generate(base_cfg())
        assert len(tracks) == 1
        assert len(tracks[0].entries) == 5
        for f in range(5):
            assert set(np.unique(gt.labeled_frames[f]).tolist()) == {0, 1}

    def test_determinism(self):
        a_gt, a_tracks = generate(base_cfg(seed=42, objects=3, frames=10))
        b_gt, b_tracks = generate(base_cfg(seed=42, objects=3, frames=10))
        assert a_tracks == b_tracks
        for f in a_gt.labeled_frames:
            assert (a_gt.labeled_frames[f] == b_gt.labeled_frames[f]).all()

    def test_different_seeds_differ(self):
        a_gt, _ = generate(base_cfg(seed=1))
        b_gt, _ = generate(base_cfg(seed=2))
        assert any((a_gt.labeled_frames[f] != b_gt.labeled_frames[f]).any()
                   for f in a_gt.labeled_frames)

    def test_occlusion_event_blanks_frames(self):
        cfg = base_cfg(frames=6, occlusions=(OcclusionEvent(0, 2, 3),))
        gt, tracks = generate(cfg)
        for f in (2, 3, 4):
            assert 1 not in np.unique(gt.labeled_frames[f])
        for f in (0, 1, 5):
            assert 1 in np.unique(gt.labeled_frames[f])
        assert [d.frame for d in tracks[0].entries] == [0, 1, 5]

    def test_later_objects_occlude_earlier(self):
        cfg = base_cfg(objects=4, frames=12, seed=11)
        gt, tracks = generate(cfg)
        by_id = {t.id: t for t in tracks}
        for f, label in gt.labeled_frames.items():
            for tid, t in by_id.items():
                entry = next((d for d in t.entries if d.frame == f), None)
                expected = (label == tid)
                if entry is None:
                    assert not expected.any()
                else:
                    assert (rle_decode(entry.mask).astype(bool) == expected).all()

    def test_placement_error(self):
        with pytest.raises(PlacementError):
            generate(SynthConfig(seed=0, frames=1, width=2, height=2))
        with pytest.raises(PlacementError):
            generate(base_cfg(object_size=(50, 100)))

    def test_object_size_respected(self):
        cfg = base_cfg(object_size=(10, 10))
        _, tracks = generate(cfg)
        assert area(tracks[0].entries[0].mask) == 100

    def test_ellipse_shape(self):
        cfg = base_cfg(shape="ellipse", object_size=(12, 12))
        gt, tracks = generate(cfg)
        a = area(tracks[0].entries[0].mask)
        assert 0 < a < 144          # strictly inside its bounding square

    def test_reflection_keeps_objects_inside(self):
        cfg = base_cfg(frames=200, velocity=(5.0, 9.0), seed=3)
        gt, tracks = generate(cfg)
        assert len(tracks[0].entries) == 200
        for f, label in gt.labeled_frames.items():
            assert (label >= 0).all()

    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            SynthConfig(seed=0, frames=0, width=8, height=8)
        with pytest.raises(ValueError):
            SynthConfig(seed=0, frames=1, width=8, height=8, shape="triangle")
        with pytest.raises(ValueError):
            SynthConfig(seed=0, frames=1, width=8, height=8, velocity=(3.0, 1.0))
        with pytest.raises(ValueError):
            NoiseConfig(fp_rate=1.5)


class TestCorrupt:
    def test_zero_noise_identity(self):
        gt, tracks = generate(base_cfg(objects=2, frames=8, seed=5))
        dets = corrupt(gt, NoiseConfig(), seed=5)
        for t in tracks:
            for d in t.entries:
                assert any(x.mask == d.mask and x.score == 1.0 for x in dets[d.frame])

    def test_fn_rate_one_drops_everything(self):
        gt, _ = generate(base_cfg(objects=2, frames=8, seed=5))
        dets = corrupt(gt, NoiseConfig(fn_rate=1.0), seed=5)
        assert all(len(v) == 0 for v in dets.values())

    def test_fp_rate_one_adds_one_per_frame(self):
        gt, _ = generate(base_cfg(objects=2, frames=10, seed=5))
        clean = corrupt(gt, NoiseConfig(), seed=5)
        noisy = corrupt(gt, NoiseConfig(fp_rate=1.0), seed=5)
        added = sum(len(noisy[f]) - len(clean[f]) for f in clean)
        assert added == 10

    def test_spurious_disjoint_from_objects(self):
        gt, _ = generate(base_cfg(objects=2, frames=10, seed=5))
        noisy = corrupt(gt, NoiseConfig(fp_rate=1.0), seed=5)
        for f, dets in noisy.items():
            occupied = gt.labeled_frames[f] > 0
            spurious = dets[-1]
            assert not (rle_decode(spurious.mask).astype(bool) & occupied).any()

    def test_determinism(self):
        gt, _ = generate(base_cfg(objects=2, frames=8, seed=5))
        noise = NoiseConfig(jitter_px=2, score_mean=0.9, score_spread=0.1,
                            fp_rate=0.5, fn_rate=0.2)
        a = corrupt(gt, noise, seed=9)
        b = corrupt(gt, noise, seed=9)
        assert a == b

    def test_scores_clamped(self):
        gt, _ = generate(base_cfg(frames=10))
        dets = corrupt(gt, NoiseConfig(score_mean=0.95, score_spread=0.3), seed=1)
        for v in dets.values():
            for d in v:
                assert 0.0 <= d.score <= 1.0


class TestPipelineProperties:
    def test_zero_noise_pipeline_perfect_f(self):
        cfg = base_cfg(seed=13, frames=20, width=96, height=64, objects=2)
        gt, _ = generate(cfg)
        dets = corrupt(gt, NoiseConfig(), seed=13)
        tracks = track_sequence(dets, TrackerConfig())
        preds = [Region(t.id, {d.frame: d.mask for d in t.entries}) for t in tracks]
        rep = proposed_measure(gt, preds)
        assert rep.f_measure == 1.0

    def test_fp_rate_never_raises_precision(self):
        gt, _ = generate(base_cfg(seed=8, frames=12, objects=2))

        def raw_precision(rate):
            dets = corrupt(gt, NoiseConfig(fp_rate=rate), seed=8)
            regions, k = [], 0
            for f in sorted(dets):
                for d in dets[f]:
                    regions.append(Region(k, {f: d.mask}))
                    k += 1
            return proposed_measure(gt, regions).precision

        values = [raw_precision(r) for r in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(a >= b for a, b in zip(values, values[1:]))
