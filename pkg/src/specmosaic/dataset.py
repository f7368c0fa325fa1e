"""Pseudo-paired dataset construction and hard-subset filtering.

The training-data workflow: take generated (or reconstructed) label cubes,
optionally augment them with the square symmetries, cut pattern-aligned
patches, and pair every label patch with the mosaic obtained by re-sampling
it through the filter array — so each pair is pixel-aligned by construction.
The pair list is written as a JSON-lines manifest whose file paths are
relative to the manifest's own directory, one record per line:

    {"mosaic": str, "cube": str, "source": str, "origin": [row, col],
     "aug": str, "hard": bool|null, "count": int|null}

``filter_hard`` then scores each record's (label, comparison reconstruction)
pair with the frequency-domain detector and keeps only the hard ones,
yielding a subsequence of the input manifest.

Augmentation happens on label cubes *before* re-sampling: rotating a mosaic
directly would permute the filter pattern under the data, whereas
augment-then-remosaic keeps every emitted pair on the canonical pattern.

Record processing parallelizes under the ``SPECMOSAIC_THREADS`` cap; files
are written atomically and manifests in input order, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ._threads import parallel_map
from ._version import TOOL_VERSION
from .core import (
    AlignmentError,
    BoundsError,
    FormatError,
    MosaicImage,
    PatchOrigin,
    SfaPattern,
    ShapeError,
    SpecmosaicError,
    SpectralCube,
    crop_aligned,
    transform_d4,
)
from .demosaic import wb_bilinear
from .fileio import (
    cube_stem,
    read_cube,
    read_mosaic,
    read_sidecar,
    write_cube,
    write_mosaic,
    _atomic_write_bytes,
)
from .freqsel import (
    FreqParams,
    PatchVerdict,
    SelectionParams,
    classify_patch,
    frequency_variation_map,
)
from .sfa import remosaic

__all__ = [
    "PairRecord",
    "patchify",
    "augment_cube",
    "make_pseudo_pairs",
    "filter_hard",
    "read_manifest",
    "write_manifest",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.jsonl"

#: Square-symmetry variants emitted by augment_cube, in emission order.
AUGMENT_OPS = (
    "identity",
    "rot90cw",
    "rot180",
    "rot270cw",
    "flip_h",
    "flip_v",
    "transpose",
    "anti_transpose",
)
#: The shape-preserving subset used for non-square inputs.
AUGMENT_OPS_NONSQUARE = ("identity", "rot180", "flip_h", "flip_v")


@dataclass(frozen=True)
class PairRecord:
    """One manifest line: a mosaic/cube file pair plus its provenance."""

    mosaic: str
    cube: str
    source: str
    origin: tuple[int, int]
    aug: str
    hard: bool | None = None
    count: int | None = None

    def to_json_line(self) -> str:
        doc = {
            "mosaic": self.mosaic,
            "cube": self.cube,
            "source": self.source,
            "origin": [self.origin[0], self.origin[1]],
            "aug": self.aug,
            "hard": self.hard,
            "count": self.count,
        }
        return json.dumps(doc)

    @classmethod
    def from_json_line(cls, line: str) -> "PairRecord":
        try:
            doc = json.loads(line)
            origin = doc["origin"]
            return cls(
                mosaic=str(doc["mosaic"]),
                cube=str(doc["cube"]),
                source=str(doc["source"]),
                origin=(int(origin[0]), int(origin[1])),
                aug=str(doc["aug"]),
                hard=None if doc.get("hard") is None else bool(doc["hard"]),
                count=None if doc.get("count") is None else int(doc["count"]),
            )
        except (json.JSONDecodeError, KeyError, IndexError, TypeError, ValueError) as e:
            raise FormatError(f"ill-formed manifest record: {e}") from e


def write_manifest(records: Iterable[PairRecord], path: str | Path) -> None:
    text = "".join(r.to_json_line() + "\n" for r in records)
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def read_manifest(path: str | Path) -> list[PairRecord]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(f"missing manifest {path}") from None
    records: list[PairRecord] = []
    for n, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(PairRecord.from_json_line(line))
        except FormatError as e:
            raise FormatError(f"{path} line {n + 1}: {e}") from e
    return records


def patchify(
    cube: SpectralCube, patch_h: int, patch_w: int, stride: int, period: int
) -> list[tuple[PatchOrigin, SpectralCube]]:
    """Cut all fully-inside windows at stride offsets, row-major order.

    Patch dims and the stride must be multiples of the pattern period so
    every patch keeps the parent's mosaic phase.
    """
    if patch_h < 1 or patch_w < 1 or stride < 1:
        raise BoundsError(
            f"patch {patch_h}x{patch_w} and stride {stride} must be positive"
        )
    for name, value in (("patch height", patch_h), ("patch width", patch_w), ("stride", stride)):
        if value % period != 0:
            raise AlignmentError(
                f"{name} {value} is not a multiple of the pattern period {period}"
            )
    if patch_h > cube.height or patch_w > cube.width:
        raise BoundsError(
            f"patch {patch_h}x{patch_w} exceeds cube extent {cube.height}x{cube.width}"
        )
    out: list[tuple[PatchOrigin, SpectralCube]] = []
    for row in range(0, cube.height - patch_h + 1, stride):
        for col in range(0, cube.width - patch_w + 1, stride):
            origin = PatchOrigin(row, col, patch_h, patch_w)
            out.append((origin, crop_aligned(cube, origin, period)))
    return out


def augment_cube(cube: SpectralCube) -> list[tuple[str, SpectralCube]]:
    """All square-symmetry variants of a cube as (op name, cube) pairs.

    Square inputs yield the 8 variants of AUGMENT_OPS in that fixed order,
    the first being the input itself. Non-square inputs can only keep their
    shape under 4 of the 8 ops, so only those are emitted, with a warning.
    """
    if cube.height == cube.width:
        ops: Sequence[str] = AUGMENT_OPS
    else:
        ops = AUGMENT_OPS_NONSQUARE
        warnings.warn(
            f"non-square cube {cube.height}x{cube.width}: emitting only the "
            f"{len(ops)} shape-preserving variants",
            RuntimeWarning,
            stacklevel=2,
        )
    return [(op, transform_d4(cube, op)) for op in ops]


def _record_stems(source: str, aug: str, origin: PatchOrigin) -> tuple[str, str]:
    base = f"{source}_{aug}_r{origin.row:05d}_c{origin.col:05d}"
    return base + "_cube", base + "_mosaic"


def make_pseudo_pairs(
    cube_paths: Sequence[str | Path],
    pattern: SfaPattern,
    out_dir: str | Path,
    *,
    patch: tuple[int, int] | None = None,
    stride: int | None = None,
    augment: bool = False,
    manifest_name: str = MANIFEST_NAME,
) -> list[PairRecord]:
    """Build the pseudo-paired dataset from label cube files.

    For every input cube: (optionally) augment, (optionally) patchify, and
    for each resulting label patch write the patch cube plus the mosaic
    re-sampled from it, both carrying the pattern in their sidecars. Paths in
    the returned records (and the manifest written to
    ``out_dir/manifest_name``) are relative to ``out_dir``. Re-reading any
    record and re-sampling its cube reproduces its mosaic bit-exactly.

    ``stride`` defaults to the patch height/width when omitted
    (non-overlapping tiling); a non-square patch requires an explicit stride.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if patch is not None:
        patch_h, patch_w = int(patch[0]), int(patch[1])
        if stride is None:
            if patch_h != patch_w:
                raise AlignmentError(
                    f"non-square patch {patch_h}x{patch_w} needs an explicit stride"
                )
            stride = patch_h
    elif stride is not None:
        raise AlignmentError("a stride without a patch size is meaningless")

    sources = [cube_stem(p) for p in cube_paths]
    ids = [s.name for s in sources]
    if len(set(ids)) != len(ids):
        raise FormatError(f"duplicate source cube names in {sorted(ids)}")

    def job(item: tuple[str, Path]) -> list[PairRecord]:
        source_id, path = item
        cube = read_cube(path)
        if cube.bands != pattern.bands:
            raise ShapeError(
                f"source {source_id}: cube has {cube.bands} bands but pattern "
                f"period {pattern.period} requires {pattern.bands}"
            )
        variants = augment_cube(cube) if augment else [("identity", cube)]
        records: list[PairRecord] = []
        for aug, var in variants:
            if patch is not None:
                pieces = patchify(var, patch_h, patch_w, stride, pattern.period)
            else:
                pieces = [(PatchOrigin(0, 0, var.height, var.width), var)]
            for origin, label in pieces:
                cube_name, mosaic_name = _record_stems(source_id, aug, origin)
                write_cube(label, out / cube_name, pattern=pattern)
                write_mosaic(remosaic(label, pattern), out / mosaic_name, pattern=pattern)
                records.append(
                    PairRecord(
                        mosaic=mosaic_name + ".bsq",
                        cube=cube_name + ".bsq",
                        source=source_id,
                        origin=(origin.row, origin.col),
                        aug=aug,
                    )
                )
        return records

    per_source = parallel_map(job, list(zip(ids, sources)))
    records = [r for chunk in per_source for r in chunk]
    write_manifest(records, out / manifest_name)
    return records


ComparisonPolicy = Callable[
    [SpectralCube, MosaicImage, SfaPattern], tuple[SpectralCube, SpectralCube]
]


def _wb_policy(
    cube: SpectralCube, mosaic_img: MosaicImage, pattern: SfaPattern
) -> tuple[SpectralCube, SpectralCube]:
    """Default comparison: the label cube against the bilinear reconstruction
    of its own mosaic — disparities localize exactly where interpolation
    struggles."""
    return cube, wb_bilinear(mosaic_img, pattern)


def filter_hard(
    manifest_path: str | Path,
    fparams: FreqParams | None = None,
    sparams: SelectionParams | None = None,
    *,
    out_path: str | Path,
    policy: ComparisonPolicy | None = None,
) -> list[PairRecord]:
    """Keep only the hard records of a manifest.

    Every record is scored with the frequency-variation detector on the pair
    produced by ``policy`` (default: label cube vs. the bilinear
    reconstruction of its mosaic; the pattern comes from the cube's sidecar).
    The filtered manifest — a subsequence of the input, with ``hard`` and
    ``count`` filled in and paths rebased onto its own directory — is written
    to ``out_path``, and a full per-record verdict sidecar to
    ``out_path + ".verdicts.json"``. Returns the surviving records.
    """
    fparams = fparams or FreqParams()
    sparams = sparams or SelectionParams()
    policy = policy or _wb_policy
    manifest_path = Path(manifest_path)
    records = read_manifest(manifest_path)
    base = manifest_path.parent
    out_path = Path(out_path)
    out_dir = out_path.parent

    def job(item: tuple[int, PairRecord]) -> PatchVerdict:
        i, rec = item
        try:
            cube = read_cube(base / rec.cube)
            side = read_sidecar(base / rec.cube)
            if side.pattern is None:
                raise FormatError(f"cube sidecar for {rec.cube} carries no pattern")
            mosaic_img = read_mosaic(base / rec.mosaic)
            ref, cmp = policy(cube, mosaic_img, side.pattern)
            return classify_patch(frequency_variation_map(ref, cmp, fparams), sparams)
        except SpecmosaicError as e:
            raise type(e)(f"record {i}: {e}") from e
        except OSError as e:
            raise FormatError(f"record {i}: {e}") from e

    verdicts = parallel_map(job, list(enumerate(records)))

    def rebase(rel: str) -> str:
        return os.path.relpath(base / rel, out_dir)

    kept = [
        replace(rec, mosaic=rebase(rec.mosaic), cube=rebase(rec.cube),
                hard=v.is_hard, count=v.count)
        for rec, v in zip(records, verdicts)
        if v.is_hard
    ]
    write_manifest(kept, out_path)
    sidecar = {
        "params": {
            "epsilon": fparams.epsilon,
            "blur_sigma": fparams.blur_sigma,
            "blur_radius": fparams.blur_radius,
            "r_low": fparams.r_low,
            "r_high": fparams.r_high,
            "t_var": sparams.t_var,
            "t_cnt": sparams.t_cnt,
        },
        "verdicts": [
            {"index": i, "count": v.count, "hard": v.is_hard}
            for i, v in enumerate(verdicts)
        ],
        "tool_version": TOOL_VERSION,
    }
    doc = json.dumps(sidecar, indent=2) + "\n"
    _atomic_write_bytes(Path(str(out_path) + ".verdicts.json"), doc.encode("utf-8"))
    return kept
