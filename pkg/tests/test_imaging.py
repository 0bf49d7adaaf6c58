import io
import math

import numpy as np
import pytest

from oecsim.imaging import (CorpusSpec, FilterPolicy, GroundTruthObject,
                            ImageFrame, Tile, dota_v1_like, dota_v2_like,
                            filter_redundant, generate_corpus, load_corpus,
                            save_corpus, split_frame)


def _frame(width=1000, height=1000, objects=(), cloud=None, cell=512, bpp=3):
    rows = math.ceil(height / cell)
    cols = math.ceil(width / cell)
    tile_cloud = np.zeros((rows, cols)) if cloud is None else np.asarray(cloud, float)
    return ImageFrame(id="f0", width_px=width, height_px=height, bytes_per_px=bpp,
                      capture_s=0.0, cloud_fraction=float(tile_cloud.mean()),
                      objects=tuple(objects), tile_cloud=tile_cloud,
                      cloud_cell_px=cell)


def test_split_regular_grid():
    tiles = split_frame(_frame(4096, 4096, cell=1024), 1024)
    assert len(tiles) == 16
    assert all(t.width_px == 1024 and t.height_px == 1024 for t in tiles)
    assert all(t.payload_bytes == 1024 * 1024 * 3 for t in tiles)


def test_split_identity():
    frame = _frame(512, 512, cell=512)
    tiles = split_frame(frame, 512)
    assert len(tiles) == 1
    assert tiles[0].rect == (0, 0, 512, 512)
    assert tiles[0].payload_bytes == 512 * 512 * 3


def test_split_truncated_edges_and_clipping():
    box = (500.0, 500.0, 530.0, 530.0)
    frame = _frame(1000, 1000, objects=[GroundTruthObject(box, 0)], cell=512)
    tiles = split_frame(frame, 512)
    assert len(tiles) == 4
    sizes = {(t.width_px, t.height_px) for t in tiles}
    assert sizes == {(512, 512), (488, 512), (512, 488), (488, 488)}
    # The box straddles the corner, so a clipped fragment lands in every tile;
    # each fragment must equal the direct rectangle intersection, translated.
    for t in tiles:
        x0, y0, x1, y1 = t.rect
        ix0, iy0 = max(box[0], x0), max(box[1], y0)
        ix1, iy1 = min(box[2], x1), min(box[3], y1)
        expected = (ix0 - x0, iy0 - y0, ix1 - x0, iy1 - y0)
        assert len(t.objects) == 1
        assert t.objects[0].box == pytest.approx(expected)


def test_split_partition_random_sizes():
    rng = np.random.default_rng(2)
    for _ in range(25):
        w = int(rng.integers(50, 900))
        h = int(rng.integers(50, 900))
        tile = int(rng.integers(16, 400))
        frame = _frame(w, h, cell=tile)
        tiles = split_frame(frame, tile)
        assert sum(t.width_px * t.height_px for t in tiles) == w * h
        covered = set()
        for t in tiles:
            x0, y0, x1, y1 = t.rect
            cells = {(x, y) for x in range(x0, x1) for y in range(y0, y1)}
            assert not (covered & cells)
            covered |= cells
        assert len(covered) == w * h


def test_split_clipping_matches_intersection_oracle():
    rng = np.random.default_rng(9)
    for _ in range(20):
        boxes = []
        for _ in range(int(rng.integers(1, 8))):
            x0, y0 = rng.uniform(0, 700, 2)
            bw, bh = rng.uniform(2, 200, 2)
            boxes.append(GroundTruthObject(
                (float(x0), float(y0), float(min(x0 + bw, 800)), float(min(y0 + bh, 800))),
                int(rng.integers(3))))
        frame = _frame(800, 800, objects=boxes, cell=256)
        tiles = split_frame(frame, 256)
        for t in tiles:
            x0, y0, x1, y1 = t.rect
            expected = []
            for obj in boxes:
                bx0, by0, bx1, by1 = obj.box
                ix0, iy0 = max(bx0, x0), max(by0, y0)
                ix1, iy1 = min(bx1, x1), min(by1, y1)
                if ix1 > ix0 and iy1 > iy0 and (ix1 - ix0) * (iy1 - iy0) >= 1.0:
                    expected.append(((ix0 - x0, iy0 - y0, ix1 - x0, iy1 - y0),
                                     obj.class_id))
            got = [(o.box, o.class_id) for o in t.objects]
            assert got == pytest.approx(expected) if expected else got == []


def test_split_drops_subpixel_fragments():
    # The right tile sees a 0.5 x 1.9 px corner (area 0.95 < 1): dropped.
    box = (100.0, 100.0, 512.5, 101.9)
    frame = _frame(1024, 512, objects=[GroundTruthObject(box, 0)], cell=512)
    left, right = split_frame(frame, 512)
    assert len(left.objects) == 1
    assert len(right.objects) == 0


def test_filter_vacuous_policy_keeps_all():
    tiles = split_frame(_frame(1024, 1024, cell=512), 512)
    result = filter_redundant(tiles, FilterPolicy(cloud_threshold=1.0, drop_empty=False))
    assert result.discarded == ()
    assert result.filter_rate == 0.0


def test_filter_saturated_policy_discards_all():
    frame = _frame(1024, 1024, cloud=np.ones((2, 2)), cell=512)
    tiles = split_frame(frame, 512)
    result = filter_redundant(tiles, FilterPolicy(cloud_threshold=0.5))
    assert result.kept == ()
    assert result.filter_rate == 1.0


def test_filter_empty_input_rate_zero():
    assert filter_redundant([], FilterPolicy()).filter_rate == 0.0


def test_filter_drop_empty_and_min_area():
    big = GroundTruthObject((10.0, 10.0, 40.0, 40.0), 0)     # area 900
    small = GroundTruthObject((60.0, 60.0, 63.0, 63.0), 0)   # area 9
    frame = _frame(512, 512, objects=[big, small], cell=512)
    tiles = split_frame(frame, 512)
    kept = filter_redundant(tiles, FilterPolicy(min_object_area_px=100.0)).kept
    assert len(kept) == 1
    discarded = filter_redundant(tiles, FilterPolicy(min_object_area_px=1000.0)).discarded
    assert len(discarded) == 1


def test_filter_monotone_in_cloud_threshold():
    frames = generate_corpus(dota_v2_like(num_frames=6, frame_px=512, tile_px=128), 3)
    tiles = [t for f in frames for t in split_frame(f, 128)]
    rates = [filter_redundant(tiles, FilterPolicy(cloud_threshold=c)).filter_rate
             for c in (0.9, 0.7, 0.5, 0.3, 0.1)]
    assert all(a <= b for a, b in zip(rates, rates[1:]))


def test_filter_partitions_input_exactly():
    frames = generate_corpus(dota_v1_like(num_frames=4, frame_px=512, tile_px=128), 5)
    tiles = [t for f in frames for t in split_frame(f, 128)]
    result = filter_redundant(tiles, FilterPolicy())
    assert len(result.kept) + len(result.discarded) == len(tiles)
    total = sum(t.payload_bytes for t in tiles)
    split_total = (sum(t.payload_bytes for t in result.kept)
                   + sum(t.payload_bytes for t in result.discarded))
    assert split_total == total
    assert set(id(t) for t in result.kept).isdisjoint(id(t) for t in result.discarded)


def test_corpus_deterministic_byte_for_byte(tmp_path):
    spec = dota_v1_like(num_frames=5, frame_px=512, tile_px=128)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(generate_corpus(spec, 77), a)
    save_corpus(generate_corpus(spec, 77), b)
    assert a.read_bytes() == b.read_bytes()
    save_corpus(generate_corpus(spec, 78), b)
    assert a.read_bytes() != b.read_bytes()


def test_corpus_roundtrip_exact(tmp_path):
    spec = dota_v2_like(num_frames=4, frame_px=512, tile_px=128)
    frames = generate_corpus(spec, 13)
    path = tmp_path / "corpus.jsonl"
    save_corpus(frames, path)
    reloaded = load_corpus(path)
    path2 = tmp_path / "corpus2.jsonl"
    save_corpus(reloaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_corpus_zero_redundancy_every_tile_interesting():
    spec = CorpusSpec(num_frames=3, frame_px=512, tile_px=128,
                      redundant_fraction=0.0)
    frames = generate_corpus(spec, 1)
    tiles = [t for f in frames for t in split_frame(f, 128)]
    result = filter_redundant(tiles, FilterPolicy())
    assert result.filter_rate == 0.0
    assert all(t.objects for t in tiles)


def test_corpus_redundant_fraction_concentration():
    # 10,000 tiles at 0.4: binomial concentration puts the realized
    # fraction within 0.02 (counting oracle).
    spec = CorpusSpec(num_frames=625, frame_px=512, tile_px=128,
                      redundant_fraction=0.4)
    frames = generate_corpus(spec, 21)
    tiles = [t for f in frames for t in split_frame(f, 128)]
    assert len(tiles) == 10_000
    rate = filter_redundant(tiles, FilterPolicy()).filter_rate
    assert abs(rate - 0.4) <= 0.02


def test_corpus_boxes_inside_frame_and_cell():
    spec = dota_v2_like(num_frames=5, frame_px=700, tile_px=256)
    for frame in generate_corpus(spec, 4):
        for obj in frame.objects:
            x0, y0, x1, y1 = obj.box
            assert 0 <= x0 < x1 <= frame.width_px
            assert 0 <= y0 < y1 <= frame.height_px
            # Never straddles a generation cell boundary.
            assert int(x0 // 256) == int((x1 - 1e-9) // 256)
            assert int(y0 // 256) == int((y1 - 1e-9) // 256)


def test_preset_fractions():
    assert dota_v1_like(10).redundant_fraction == 0.9
    assert dota_v2_like(10).redundant_fraction == 0.4


def test_corpus_spec_validation():
    with pytest.raises(ValueError):
        CorpusSpec(num_frames=0, redundant_fraction=0.5)
    with pytest.raises(ValueError):
        CorpusSpec(num_frames=1, redundant_fraction=1.5)
    with pytest.raises(ValueError):
        CorpusSpec(num_frames=1, frame_px=100, tile_px=200, redundant_fraction=0.5)


def test_tile_uid_and_validation():
    t = Tile("f7", (2, 3), (0, 0, 10, 10), 300, 0.0, ())
    assert t.uid == "f7:r2c3"
    with pytest.raises(ValueError):
        Tile("f7", (0, 0), (0, 0, 10, 10), 0, 0.0, ())
    with pytest.raises(ValueError):
        Tile("f7", (0, 0), (0, 0, 10, 10), 300, 0.0,
             (GroundTruthObject((5.0, 5.0, 15.0, 8.0), 0),))
