"""Core value types for spectral cubes, mosaics, and filter-array patterns.

Conventions that hold across the whole package:

* Cube samples are stored band-sequential: ``data[band, row, col]`` in a
  C-contiguous float32 array. Per-band access is a cheap view, which is the
  access pattern every downstream kernel wants.
* Storage is float32; arithmetic inside kernels happens in float64 and is
  rounded back to float32 on output. This keeps file round-trips bit-exact
  while avoiding drift inside the math.
* Value types are immutable after construction (backing numpy buffers are
  marked read-only), so they can be shared freely across worker threads.
* Geometry helpers that interact with the mosaic lattice take the pattern
  period explicitly and refuse misaligned windows — a patch that starts
  off-phase would silently scramble the band assignment of every pixel in it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpecmosaicError",
    "ShapeError",
    "AlignmentError",
    "BoundsError",
    "ValidationError",
    "FormatError",
    "DegenerateInputError",
    "SpectralCube",
    "MosaicImage",
    "SfaPattern",
    "SamplingLattice",
    "PatchOrigin",
    "Violation",
    "validate_cube",
    "crop_aligned",
    "transform_d4",
    "D4_OPS",
    "D4_INVERSE",
    "DTYPE",
]

DTYPE = np.float32


class SpecmosaicError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(SpecmosaicError, ValueError):
    """Array dimensions do not satisfy an operation's contract."""


class AlignmentError(SpecmosaicError, ValueError):
    """An origin or size is not aligned to the pattern period."""


class BoundsError(SpecmosaicError, ValueError):
    """A window or index falls outside its parent image."""


class ValidationError(SpecmosaicError, ValueError):
    """Data values violate an invariant (non-finite samples, bad pattern)."""


class FormatError(SpecmosaicError, ValueError):
    """An on-disk file is missing, truncated, or ill-formed."""


class DegenerateInputError(SpecmosaicError, ValueError):
    """The input is too small or too empty for the operation to be defined."""


def _frozen_f32(data: np.ndarray, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(data)
    if arr.ndim != ndim:
        raise ShapeError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    if any(n < 1 for n in arr.shape):
        raise ShapeError(f"{what} dimensions must all be >= 1, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=DTYPE)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SpectralCube:
    """A dense spectral image: ``data[band, row, col]`` float32, read-only.

    Construction checks structure only (3 dimensions, each >= 1). Values may
    be anything representable; use :func:`validate_cube` to check finiteness
    and the nominal [0, 1] range. The constructor takes ownership of the
    buffer when it is already C-contiguous float32 (it is marked read-only
    in place); otherwise a converted copy is made.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_f32(self.data, 3, "cube data"))

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def band(self, k: int) -> np.ndarray:
        """Read-only (height, width) view of band ``k``."""
        return self.data[k]


@dataclass(frozen=True)
class MosaicImage:
    """A single-channel sensor frame: ``data[row, col]`` float32, read-only."""

    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _frozen_f32(self.data, 2, "mosaic data"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SamplingLattice:
    """Where one band lives on the sensor: rows ``offset_row + n*period`` and
    columns ``offset_col + m*period``."""

    band: int
    offset_row: int
    offset_col: int
    period: int


@dataclass(frozen=True)
class SfaPattern:
    """A period x period grid assigning one band index to each cell.

    The assignment must be a bijection onto {0, ..., period**2 - 1}: each band
    is sampled exactly once per period tile, so the per-pixel masks partition
    the sensor.
    """

    band_at: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.band_at)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ShapeError(f"pattern grid must be square, got shape {grid.shape}")
        p = grid.shape[0]
        if p < 1:
            raise ShapeError("pattern period must be >= 1")
        grid = np.ascontiguousarray(grid, dtype=np.int64)
        if not np.array_equal(np.sort(grid.ravel()), np.arange(p * p)):
            raise ValidationError(
                f"pattern must assign each band in 0..{p * p - 1} exactly once"
            )
        grid.flags.writeable = False
        object.__setattr__(self, "band_at", grid)

    @classmethod
    def row_major(cls, period: int) -> "SfaPattern":
        """The default assignment: band ``i*period + j`` at cell (i, j)."""
        if period < 1:
            raise ShapeError("pattern period must be >= 1")
        return cls(np.arange(period * period).reshape(period, period))

    @property
    def period(self) -> int:
        return self.band_at.shape[0]

    @property
    def bands(self) -> int:
        return self.period * self.period

    def band_at_cell(self, i: int, j: int) -> int:
        return int(self.band_at[i, j])

    def lattice_of(self, band: int) -> SamplingLattice:
        """The unique lattice cell sampling ``band``."""
        if not 0 <= band < self.bands:
            raise BoundsError(f"band {band} outside 0..{self.bands - 1}")
        i, j = np.argwhere(self.band_at == band)[0]
        return SamplingLattice(band, int(i), int(j), self.period)

    def index_map(self, height: int, width: int) -> np.ndarray:
        """(height, width) int array giving the band sampled at each pixel."""
        p = self.period
        rows = np.arange(height) % p
        cols = np.arange(width) % p
        return self.band_at[rows[:, None], cols[None, :]]

    def to_dict(self) -> dict:
        return {"period": self.period, "band_at": self.band_at.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SfaPattern":
        try:
            period = int(d["period"])
            flat = list(d["band_at"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"bad pattern description: {e}") from e
        if period < 1 or len(flat) != period * period:
            raise FormatError(
                f"pattern band_at must list period**2 = {period * period} entries"
            )
        return cls(np.asarray(flat, dtype=np.int64).reshape(period, period))


@dataclass(frozen=True)
class PatchOrigin:
    """A window into a parent image: top-left corner plus size."""

    row: int
    col: int
    size_h: int
    size_w: int

    def __post_init__(self) -> None:
        if self.row < 0 or self.col < 0:
            raise BoundsError(f"origin ({self.row}, {self.col}) must be non-negative")
        if self.size_h < 1 or self.size_w < 1:
            raise BoundsError(
                f"patch size {self.size_h}x{self.size_w} must be at least 1x1"
            )


@dataclass(frozen=True)
class Violation:
    """One class of invariant violation found by :func:`validate_cube`.

    ``first`` lists up to the first 10 offending (band, row, col) positions
    in storage order; ``count`` is the total number found.
    """

    kind: str  # "non_finite" | "out_of_range"
    fatal: bool
    count: int
    first: tuple[tuple[int, int, int], ...]

    def __str__(self) -> str:
        where = ", ".join(str(t) for t in self.first)
        return f"{self.kind}: {self.count} sample(s), first at {where}"


def _collect(mask: np.ndarray, kind: str, fatal: bool) -> Violation | None:
    count = int(mask.sum())
    if count == 0:
        return None
    idx = np.argwhere(mask)[:10]
    first = tuple((int(b), int(r), int(c)) for b, r, c in idx)
    return Violation(kind=kind, fatal=fatal, count=count, first=first)


def validate_cube(cube: SpectralCube) -> list[Violation]:
    """Check value invariants; structural ones are enforced at construction.

    Non-finite samples are fatal; values outside [0, 1] are warnings only,
    because demosaicers can legitimately overshoot before clamping. An empty
    list means every sample is finite and in range.
    """
    data = cube.data
    finite = np.isfinite(data)
    out: list[Violation] = []
    v = _collect(~finite, "non_finite", fatal=True)
    if v is not None:
        out.append(v)
    v = _collect(finite & ((data < 0.0) | (data > 1.0)), "out_of_range", fatal=False)
    if v is not None:
        out.append(v)
    return out


def crop_aligned(cube: SpectralCube, origin: PatchOrigin, period: int) -> SpectralCube:
    """Extract the window described by ``origin`` from all bands.

    The origin must sit on a period boundary so the patch keeps the parent's
    mosaic phase, and the window must lie fully inside the cube.
    """
    if period < 1:
        raise AlignmentError("period must be >= 1")
    if origin.row % period != 0 or origin.col % period != 0:
        raise AlignmentError(
            f"origin ({origin.row}, {origin.col}) not aligned to period {period}"
        )
    if origin.row + origin.size_h > cube.height or origin.col + origin.size_w > cube.width:
        raise BoundsError(
            f"window {origin} exceeds cube extent {cube.height}x{cube.width}"
        )
    window = cube.data[
        :,
        origin.row : origin.row + origin.size_h,
        origin.col : origin.col + origin.size_w,
    ]
    return SpectralCube(window.copy())


D4_OPS = (
    "identity",
    "rot90cw",
    "rot180",
    "rot270cw",
    "flip_h",
    "flip_v",
    "transpose",
    "anti_transpose",
)

D4_INVERSE = {
    "identity": "identity",
    "rot90cw": "rot270cw",
    "rot180": "rot180",
    "rot270cw": "rot90cw",
    "flip_h": "flip_h",
    "flip_v": "flip_v",
    "transpose": "transpose",
    "anti_transpose": "anti_transpose",
}

# Spatial index maps, applied identically to every band. With out = f(x):
#   rot90cw:        out[u, v] = x[H-1-v, u]      (top row becomes right column)
#   rot180:         out[u, v] = x[H-1-u, W-1-v]
#   rot270cw:       out[u, v] = x[v, W-1-u]
#   flip_h:         out[u, v] = x[u, W-1-v]      (left-right mirror)
#   flip_v:         out[u, v] = x[H-1-u, v]      (top-bottom mirror)
#   transpose:      out[u, v] = x[v, u]
#   anti_transpose: out[u, v] = x[H-1-v, W-1-u]  (transpose of rot180)
_D4_ARRAY_OPS = {
    "identity": lambda d: d,
    "rot90cw": lambda d: np.rot90(d, k=-1, axes=(1, 2)),
    "rot180": lambda d: np.rot90(d, k=2, axes=(1, 2)),
    "rot270cw": lambda d: np.rot90(d, k=1, axes=(1, 2)),
    "flip_h": lambda d: d[:, :, ::-1],
    "flip_v": lambda d: d[:, ::-1, :],
    "transpose": lambda d: d.swapaxes(1, 2),
    "anti_transpose": lambda d: d[:, ::-1, ::-1].swapaxes(1, 2),
}


def transform_d4(cube: SpectralCube, op: str) -> SpectralCube:
    """Apply one of the 8 square symmetries to every band.

    Rotations and transposes of non-square cubes swap the spatial dimensions
    of the output. Each transform is a pure pixel permutation, so per-band
    value multisets are preserved exactly.
    """
    try:
        fn = _D4_ARRAY_OPS[op]
    except KeyError:
        raise ValueError(f"unknown transform {op!r}; expected one of {D4_OPS}") from None
    return SpectralCube(np.ascontiguousarray(fn(cube.data)))
