"""Bit-exact on-disk formats.

Cubes travel as a pair of files sharing a stem: ``<stem>.bsq`` holds raw
little-endian IEEE-754 float32 samples, band-sequential and row-major within
each band, and ``<stem>.json`` is a sidecar describing the geometry plus
optional filter-pattern and wavelength metadata. The pair is trivial to parse
from any language and round-trips bit-identically.

Mosaics reuse the same container with ``bands = 1``. Real 16-bit camera
frames come in through binary PGM (``P5`` / maxval 65535, most significant
byte first), normalized to [0, 1] by dividing by 65535. Frequency-variation
maps can additionally be exported as 8-bit PGM previews normalized by the map
maximum.

All writes go through a temp-file-then-rename so readers never observe a
partially written artifact.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    FormatError,
    MosaicImage,
    SfaPattern,
    SpectralCube,
    ValidationError,
    validate_cube,
)
from .freqsel import FrequencyVariationMap

__all__ = [
    "CubeSidecar",
    "write_cube",
    "read_cube",
    "read_sidecar",
    "write_mosaic",
    "read_mosaic",
    "read_pgm16",
    "write_pgm8",
    "write_fvmap",
    "load_pattern_spec",
    "write_pattern_json",
    "cube_stem",
]

PAYLOAD_SUFFIX = ".bsq"
SIDECAR_SUFFIX = ".json"


def cube_stem(path: str | Path) -> Path:
    """Normalize a cube reference to its stem: ``x``, ``x.bsq`` and
    ``x.json`` all name the same pair of files."""
    p = Path(path)
    if p.suffix in (PAYLOAD_SUFFIX, SIDECAR_SUFFIX):
        return p.with_suffix("")
    return p


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


@dataclass(frozen=True)
class CubeSidecar:
    """Geometry and metadata accompanying a ``.bsq`` payload."""

    height: int
    width: int
    bands: int
    dtype: str = "f32le"
    interleave: str = "bsq"
    pattern: SfaPattern | None = None
    wavelengths_nm: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise FormatError(
                f"sidecar dims must be positive, got "
                f"{self.height}x{self.width}x{self.bands}"
            )
        if self.dtype != "f32le":
            raise FormatError(f"unsupported dtype {self.dtype!r} (only f32le)")
        if self.interleave != "bsq":
            raise FormatError(f"unsupported interleave {self.interleave!r} (only bsq)")
        if self.wavelengths_nm is not None and len(self.wavelengths_nm) != self.bands:
            raise FormatError(
                f"wavelengths_nm has {len(self.wavelengths_nm)} entries "
                f"for {self.bands} bands"
            )

    def to_dict(self) -> dict:
        d: dict = {
            "height": self.height,
            "width": self.width,
            "bands": self.bands,
            "dtype": self.dtype,
            "interleave": self.interleave,
        }
        if self.pattern is not None:
            d["pattern"] = self.pattern.to_dict()
        if self.wavelengths_nm is not None:
            d["wavelengths_nm"] = list(self.wavelengths_nm)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CubeSidecar":
        if not isinstance(d, dict):
            raise FormatError(f"sidecar must be a JSON object, got {type(d).__name__}")
        try:
            height = int(d["height"])
            width = int(d["width"])
            bands = int(d["bands"])
            dtype = str(d.get("dtype", "f32le"))
            interleave = str(d.get("interleave", "bsq"))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"ill-formed sidecar: {e}") from e
        pattern = None
        if "pattern" in d and d["pattern"] is not None:
            try:
                pattern = SfaPattern.from_dict(d["pattern"])
            except ValueError as e:
                raise FormatError(f"ill-formed sidecar pattern: {e}") from e
        wl = None
        if "wavelengths_nm" in d and d["wavelengths_nm"] is not None:
            try:
                wl = tuple(float(x) for x in d["wavelengths_nm"])
            except (TypeError, ValueError) as e:
                raise FormatError(f"ill-formed wavelengths_nm: {e}") from e
        return cls(height, width, bands, dtype, interleave, pattern, wl)


def write_cube(
    cube: SpectralCube,
    path: str | Path,
    *,
    pattern: SfaPattern | None = None,
    wavelengths_nm: tuple[float, ...] | None = None,
) -> Path:
    """Write ``<stem>.bsq`` + ``<stem>.json``; returns the stem path."""
    stem = cube_stem(path)
    sidecar = CubeSidecar(
        height=cube.height,
        width=cube.width,
        bands=cube.bands,
        pattern=pattern,
        wavelengths_nm=wavelengths_nm,
    )
    payload = np.ascontiguousarray(cube.data, dtype="<f4").tobytes()
    _atomic_write_bytes(stem.with_suffix(PAYLOAD_SUFFIX), payload)
    doc = json.dumps(sidecar.to_dict(), indent=2) + "\n"
    _atomic_write_bytes(stem.with_suffix(SIDECAR_SUFFIX), doc.encode("utf-8"))
    return stem


def read_sidecar(path: str | Path) -> CubeSidecar:
    side_path = cube_stem(path).with_suffix(SIDECAR_SUFFIX)
    try:
        text = side_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(f"missing sidecar {side_path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"ill-formed sidecar {side_path}: {e}") from e
    return CubeSidecar.from_dict(doc)


def read_cube(path: str | Path) -> SpectralCube:
    """Read a cube pair; bit-identical inverse of :func:`write_cube`.

    Non-finite samples in the payload are rejected — files are the trust
    boundary, and every downstream kernel assumes finite data.
    """
    stem = cube_stem(path)
    side = read_sidecar(stem)
    payload_path = stem.with_suffix(PAYLOAD_SUFFIX)
    try:
        raw = payload_path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"missing payload {payload_path}") from None
    expected = side.height * side.width * side.bands * 4
    if len(raw) != expected:
        raise FormatError(
            f"payload {payload_path} holds {len(raw)} bytes, "
            f"expected {expected} for {side.bands}x{side.height}x{side.width}"
        )
    arr = np.frombuffer(raw, dtype="<f4").reshape(side.bands, side.height, side.width)
    cube = SpectralCube(np.ascontiguousarray(arr, dtype=np.float32))
    fatal = [v for v in validate_cube(cube) if v.fatal]
    if fatal:
        raise ValidationError(f"{payload_path}: {fatal[0]}")
    return cube


def write_mosaic(
    mosaic_img: MosaicImage, path: str | Path, *, pattern: SfaPattern | None = None
) -> Path:
    """Store a mosaic as a 1-band cube pair."""
    return write_cube(SpectralCube(mosaic_img.data[None]), path, pattern=pattern)


def read_mosaic(path: str | Path) -> MosaicImage:
    cube = read_cube(path)
    if cube.bands != 1:
        raise FormatError(f"{cube_stem(path)} has {cube.bands} bands; a mosaic has 1")
    return MosaicImage(cube.data[0])


def read_pgm16(path: str | Path) -> MosaicImage:
    """Ingest a binary 16-bit grayscale PGM frame, normalized by 65535."""
    raw = Path(path).read_bytes()
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        while i < len(raw) and raw[i : i + 1].isspace():
            i += 1
        if i < len(raw) and raw[i : i + 1] == b"#":
            while i < len(raw) and raw[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(raw) and not raw[j : j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(raw[i:j])
        i = j
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: expected binary PGM magic P5, got {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as e:
        raise FormatError(f"{path}: non-numeric PGM header field") from e
    if maxval != 65535:
        raise FormatError(f"{path}: unsupported depth maxval={maxval} (need 65535)")
    i += 1  # exactly one whitespace byte separates maxval from the payload
    payload = raw[i:]
    expected = width * height * 2
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}"
        )
    samples = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return MosaicImage((samples.astype(np.float64) / 65535.0).astype(np.float32))


def write_pgm8(values: np.ndarray, path: str | Path) -> None:
    """Export a non-negative 2D map as 8-bit PGM, normalized by its maximum
    (an all-zero map exports as all black)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"PGM export needs a 2D map, got shape {arr.shape}")
    peak = float(arr.max()) if arr.size else 0.0
    if peak > 0.0:
        img = np.clip(np.rint(arr / peak * 255.0), 0, 255).astype(np.uint8)
    else:
        img = np.zeros(arr.shape, dtype=np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    _atomic_write_bytes(Path(path), header + img.tobytes())


def write_fvmap(
    fv: FrequencyVariationMap, path: str | Path, *, pgm: str | Path | None = None
) -> Path:
    """Write a frequency-variation map as a 1-band cube file, optionally with
    an 8-bit PGM preview for visual inspection."""
    stem = write_cube(SpectralCube(fv.values[None].astype(np.float32)), path)
    if pgm is not None:
        write_pgm8(fv.values, pgm)
    return stem


_PATTERN_SPEC_RE = re.compile(r"^(\d+)x(\d+)$")


def load_pattern_spec(spec: str) -> SfaPattern:
    """Resolve a CLI pattern argument: ``NxN`` (row-major band assignment)
    or a path to a JSON file {"period": N, "band_at": [row-major indices]}."""
    m = _PATTERN_SPEC_RE.match(spec)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a != b or a < 1:
            raise FormatError(f"pattern spec {spec!r} must be square, e.g. 4x4")
        return SfaPattern.row_major(a)
    path = Path(spec)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FormatError(
            f"pattern spec {spec!r} is neither NxN nor a readable JSON file"
        ) from None
    except json.JSONDecodeError as e:
        raise FormatError(f"ill-formed pattern file {path}: {e}") from e
    try:
        return SfaPattern.from_dict(doc)
    except ValueError as e:
        raise FormatError(f"ill-formed pattern file {path}: {e}") from e


def write_pattern_json(pattern: SfaPattern, path: str | Path) -> None:
    doc = json.dumps(pattern.to_dict(), indent=2) + "\n"
    _atomic_write_bytes(Path(path), doc.encode("utf-8"))
