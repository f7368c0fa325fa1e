import json

import numpy as np
import pytest

from specmosaic import (
    AlignmentError,
    BoundsError,
    FormatError,
    SelectionParams,
    SfaPattern,
    ShapeError,
    SpectralCube,
    remosaic,
    transform_d4,
)
from specmosaic.dataset import (
    AUGMENT_OPS,
    AUGMENT_OPS_NONSQUARE,
    PairRecord,
    augment_cube,
    filter_hard,
    make_pseudo_pairs,
    patchify,
    read_manifest,
    write_manifest,
)
from specmosaic.fileio import read_cube, read_mosaic, read_sidecar, write_cube


def _rand_cube(rng, bands, h, w):
    return SpectralCube(rng.uniform(0, 1, (bands, h, w)).astype(np.float32))


# -------------------------------------------------------------- patchify


def test_patchify_counts_and_origins():
    rng = np.random.default_rng(70)
    cube = _rand_cube(rng, 2, 32, 32)
    pieces = patchify(cube, 16, 16, 8, period=4)
    origins = [(o.row, o.col) for o, _ in pieces]
    want = [(r, c) for r in range(0, 17, 8) for c in range(0, 17, 8)]
    assert origins == want  # row-major, 3x3


def test_patchify_content_matches_direct_slice():
    rng = np.random.default_rng(71)
    cube = _rand_cube(rng, 3, 24, 20)
    for origin, patch in patchify(cube, 8, 12, 4, period=2):
        window = cube.data[:, origin.row : origin.row + 8, origin.col : origin.col + 12]
        assert patch.data.tobytes() == window.tobytes()


def test_patchify_count_formula_random_configs():
    rng = np.random.default_rng(72)
    for _ in range(25):
        period = int(rng.integers(2, 5))
        h = period * int(rng.integers(4, 12))
        w = period * int(rng.integers(4, 12))
        ph = period * int(rng.integers(1, h // period + 1))
        pw = period * int(rng.integers(1, w // period + 1))
        stride = period * int(rng.integers(1, 4))
        cube = SpectralCube(np.zeros((1, h, w), dtype=np.float32))
        got = len(patchify(cube, ph, pw, stride, period))
        rows = len(range(0, h - ph + 1, stride))
        cols = len(range(0, w - pw + 1, stride))
        assert got == rows * cols


def test_patchify_rejects_misaligned_and_oversized():
    cube = SpectralCube(np.zeros((1, 16, 16), dtype=np.float32))
    with pytest.raises(AlignmentError):
        patchify(cube, 130, 130, 130, period=4)  # 130 % 4 != 0
    with pytest.raises(AlignmentError):
        patchify(cube, 8, 8, 3, period=2)
    with pytest.raises(BoundsError):
        patchify(cube, 32, 8, 8, period=2)
    with pytest.raises(BoundsError):
        patchify(cube, 0, 8, 8, period=2)


def test_patchify_single_full_patch():
    rng = np.random.default_rng(73)
    cube = _rand_cube(rng, 2, 12, 12)
    pieces = patchify(cube, 12, 12, 12, period=4)
    assert len(pieces) == 1
    assert pieces[0][1].data.tobytes() == cube.data.tobytes()


# ---------------------------------------------------------- augment_cube


def test_augment_square_all_eight():
    rng = np.random.default_rng(74)
    cube = _rand_cube(rng, 2, 8, 8)
    variants = augment_cube(cube)
    assert [name for name, _ in variants] == list(AUGMENT_OPS)
    assert variants[0][1].data.tobytes() == cube.data.tobytes()
    for name, var in variants:
        assert var.data.shape == cube.data.shape
        assert np.array_equal(np.sort(var.data.ravel()), np.sort(cube.data.ravel()))
        assert var.data.tobytes() == transform_d4(cube, name).data.tobytes()


def test_augment_nonsquare_warns_and_halves():
    rng = np.random.default_rng(75)
    cube = _rand_cube(rng, 1, 4, 6)
    with pytest.warns(RuntimeWarning):
        variants = augment_cube(cube)
    assert [name for name, _ in variants] == list(AUGMENT_OPS_NONSQUARE)
    for _, var in variants:
        assert (var.height, var.width) == (4, 6)


# ------------------------------------------------------------- manifests


def test_manifest_round_trip(tmp_path):
    records = [
        PairRecord("a_mosaic.bsq", "a_cube.bsq", "a", (0, 0), "identity"),
        PairRecord("b_mosaic.bsq", "b_cube.bsq", "b", (8, 16), "rot180", True, 12),
    ]
    path = tmp_path / "m.jsonl"
    write_manifest(records, path)
    assert read_manifest(path) == records
    # null round-trips to None, keys in fixed order
    first = json.loads(path.read_text().splitlines()[0])
    assert first["hard"] is None and first["count"] is None
    assert list(first) == ["mosaic", "cube", "source", "origin", "aug", "hard", "count"]


def test_manifest_blank_lines_skipped(tmp_path):
    path = tmp_path / "m.jsonl"
    line = PairRecord("m.bsq", "c.bsq", "s", (0, 0), "identity").to_json_line()
    path.write_text("\n" + line + "\n\n" + line + "\n")
    assert len(read_manifest(path)) == 2


def test_manifest_bad_line_reports_number(tmp_path):
    path = tmp_path / "m.jsonl"
    good = PairRecord("m.bsq", "c.bsq", "s", (0, 0), "identity").to_json_line()
    path.write_text(good + "\n{not json\n")
    with pytest.raises(FormatError, match="line 2"):
        read_manifest(path)


def test_manifest_missing_file():
    with pytest.raises(FormatError):
        read_manifest("no/such/manifest.jsonl")


def test_record_parse_requires_fields():
    with pytest.raises(FormatError):
        PairRecord.from_json_line('{"mosaic": "m.bsq"}')


# ------------------------------------------------------ make_pseudo_pairs


def test_pairs_whole_cubes(tmp_path):
    rng = np.random.default_rng(76)
    pattern = SfaPattern.row_major(2)
    paths = []
    for name in ("alpha", "beta", "gamma"):
        cube = _rand_cube(rng, 4, 12, 12)
        paths.append(write_cube(cube, tmp_path / "in" / name))
    out = tmp_path / "ds"
    records = make_pseudo_pairs(paths, pattern, out)
    assert len(records) == 3
    assert [r.source for r in records] == ["alpha", "beta", "gamma"]
    assert all(r.aug == "identity" and r.origin == (0, 0) for r in records)
    assert (out / "manifest.jsonl").exists()
    assert read_manifest(out / "manifest.jsonl") == records


def test_pairs_are_remosaic_consistent(tmp_path):
    rng = np.random.default_rng(77)
    pattern = SfaPattern.row_major(3)
    src = write_cube(_rand_cube(rng, 9, 18, 18), tmp_path / "in" / "cube")
    out = tmp_path / "ds"
    records = make_pseudo_pairs([src], pattern, out, patch=(9, 9))
    assert len(records) == 4
    for rec in records:
        cube = read_cube(out / rec.cube)
        mosaic_img = read_mosaic(out / rec.mosaic)
        side = read_sidecar(out / rec.cube)
        assert side.pattern is not None
        again = remosaic(cube, side.pattern)
        assert again.data.tobytes() == mosaic_img.data.tobytes()


def test_pairs_augment_and_patch_counts(tmp_path):
    rng = np.random.default_rng(78)
    pattern = SfaPattern.row_major(2)
    src = write_cube(_rand_cube(rng, 4, 32, 32), tmp_path / "in" / "img")
    records = make_pseudo_pairs(
        [src], pattern, tmp_path / "ds", patch=(16, 16), augment=True
    )
    # 8 variants x (2x2 non-overlapping tiles)
    assert len(records) == 32
    assert [r.aug for r in records[:4]] == ["identity"] * 4
    assert records[4].aug == "rot90cw"
    assert records[0].cube == "img_identity_r00000_c00000_cube.bsq"
    augs = [r.aug for r in records]
    assert augs == [op for op in AUGMENT_OPS for _ in range(4)]


def test_pairs_nonsquare_patch_needs_stride(tmp_path):
    rng = np.random.default_rng(79)
    pattern = SfaPattern.row_major(2)
    src = write_cube(_rand_cube(rng, 4, 32, 32), tmp_path / "in" / "img")
    with pytest.raises(AlignmentError):
        make_pseudo_pairs([src], pattern, tmp_path / "ds", patch=(16, 32))
    records = make_pseudo_pairs(
        [src], pattern, tmp_path / "ds2", patch=(16, 32), stride=16
    )
    assert len(records) == 2


def test_pairs_stride_without_patch_rejected(tmp_path):
    pattern = SfaPattern.row_major(2)
    with pytest.raises(AlignmentError):
        make_pseudo_pairs([], pattern, tmp_path / "ds", stride=8)


def test_pairs_duplicate_sources_rejected(tmp_path):
    rng = np.random.default_rng(80)
    pattern = SfaPattern.row_major(2)
    a = write_cube(_rand_cube(rng, 4, 8, 8), tmp_path / "a" / "same")
    b = write_cube(_rand_cube(rng, 4, 8, 8), tmp_path / "b" / "same")
    with pytest.raises(FormatError, match="duplicate"):
        make_pseudo_pairs([a, b], pattern, tmp_path / "ds")


def test_pairs_band_mismatch_names_source(tmp_path):
    rng = np.random.default_rng(81)
    pattern = SfaPattern.row_major(3)  # wants 9 bands
    src = write_cube(_rand_cube(rng, 4, 9, 9), tmp_path / "in" / "short")
    with pytest.raises(ShapeError, match="short"):
        make_pseudo_pairs([src], pattern, tmp_path / "ds")


# ------------------------------------------------------------ filter_hard


def _constant_sources(tmp_path, rng, n, bands=4, h=128, w=128, sine_at=None):
    """Write n constant cubes; one may carry a mid-frequency sinusoid in
    band 1 (whose sampling lattice misses it, so its reconstruction stays
    exactly constant)."""
    paths = []
    for i in range(n):
        consts = rng.uniform(0.2, 0.8, size=bands).astype(np.float32)
        data = np.broadcast_to(consts[:, None, None], (bands, h, w)).astype(np.float64)
        data = data.copy()
        if sine_at is not None and i == sine_at:
            u = np.arange(h, dtype=np.float64)
            data[1] += (0.2 * np.sin(2 * np.pi * 0.25 * u))[:, None]
        cube = SpectralCube(data.astype(np.float32))
        paths.append(write_cube(cube, tmp_path / "in" / f"c{i:02d}"))
    return paths


def test_filter_hard_constant_manifest_selects_nothing(tmp_path):
    rng = np.random.default_rng(82)
    paths = _constant_sources(tmp_path, rng, 3, h=32, w=32)
    out = tmp_path / "ds"
    make_pseudo_pairs(paths, SfaPattern.row_major(2), out)
    kept = filter_hard(out / "manifest.jsonl", out_path=tmp_path / "hard.jsonl")
    assert kept == []
    assert read_manifest(tmp_path / "hard.jsonl") == []
    verdicts = json.loads((tmp_path / "hard.jsonl.verdicts.json").read_text())
    assert [v["count"] for v in verdicts["verdicts"]] == [0, 0, 0]
    assert verdicts["params"]["t_cnt"] == SelectionParams().t_cnt


def test_filter_hard_selects_only_contaminated_record(tmp_path):
    rng = np.random.default_rng(83)
    paths = _constant_sources(tmp_path, rng, 6, sine_at=4)
    out = tmp_path / "ds"
    records = make_pseudo_pairs(paths, SfaPattern.row_major(2), out)
    kept = filter_hard(out / "manifest.jsonl", out_path=tmp_path / "sub" / "hard.jsonl")
    assert len(kept) == 1
    assert kept[0].source == records[4].source == "c04"
    assert kept[0].hard is True and kept[0].count > SelectionParams().t_cnt
    # paths are rebased onto the filtered manifest's directory and resolve
    assert kept[0].cube.startswith("..")
    resolved = read_cube(tmp_path / "sub" / kept[0].cube)
    assert resolved.bands == 4
    verdicts = json.loads((tmp_path / "sub" / "hard.jsonl.verdicts.json").read_text())
    hard_flags = [v["hard"] for v in verdicts["verdicts"]]
    assert hard_flags == [False, False, False, False, True, False]


def test_filter_hard_output_is_subsequence(tmp_path):
    rng = np.random.default_rng(84)
    paths = _constant_sources(tmp_path, rng, 4, sine_at=1)
    out = tmp_path / "ds"
    records = make_pseudo_pairs(paths, SfaPattern.row_major(2), out)
    kept = filter_hard(
        out / "manifest.jsonl",
        sparams=SelectionParams(t_var=0.0, t_cnt=0),
        out_path=out / "hard.jsonl",
    )
    # permissive thresholds keep everything that differs at all; survivors
    # must appear in input order with identical provenance fields
    kept_keys = [(r.source, r.origin, r.aug) for r in kept]
    all_keys = [(r.source, r.origin, r.aug) for r in records]
    it = iter(all_keys)
    assert all(k in it for k in kept_keys)


def test_filter_hard_missing_file_names_record(tmp_path):
    out = tmp_path / "ds"
    out.mkdir()
    rec = PairRecord("missing_mosaic.bsq", "missing_cube.bsq", "x", (0, 0), "identity")
    write_manifest([rec], out / "manifest.jsonl")
    with pytest.raises(FormatError, match="record 0"):
        filter_hard(out / "manifest.jsonl", out_path=out / "hard.jsonl")
