"""The discrete filter-array sampling model.

A spectral filter array tiles the sensor with a period x period pattern of
narrowband filters, so each pixel records exactly one band. ``mosaic``
simulates that capture from a full cube; ``remosaic`` is the same operation
applied to a reconstructed or generated cube to manufacture an input that is
perfectly aligned with it; ``sparse_expand`` scatters a mosaic back into a
cube that is zero except at each band's own lattice sites.
"""

from __future__ import annotations

import numpy as np

from .core import MosaicImage, SfaPattern, ShapeError, SpectralCube

__all__ = ["band_at_pixel", "mosaic", "remosaic", "sparse_expand"]


def band_at_pixel(pattern: SfaPattern, u: int, v: int) -> int:
    """The band index sampled at pixel (u, v): the pattern cell at
    (u mod period, v mod period)."""
    p = pattern.period
    return pattern.band_at_cell(u % p, v % p)


def _check_bands(cube: SpectralCube, pattern: SfaPattern) -> None:
    if cube.bands != pattern.bands:
        raise ShapeError(
            f"cube has {cube.bands} bands but pattern period {pattern.period} "
            f"requires {pattern.bands}"
        )


def mosaic(cube: SpectralCube, pattern: SfaPattern) -> MosaicImage:
    """Sample one band per pixel according to the pattern.

    output(u, v) = cube[band_at_pixel(u, v), u, v]. Because the per-band
    masks partition the sensor, exactly one band contributes to each pixel.
    Spatial dims need not be period multiples (sensor crops exist).
    """
    _check_bands(cube, pattern)
    idx = pattern.index_map(cube.height, cube.width)
    rows = np.arange(cube.height)[:, None]
    cols = np.arange(cube.width)[None, :]
    return MosaicImage(cube.data[idx, rows, cols])


def remosaic(pseudo_cube: SpectralCube, pattern: SfaPattern) -> MosaicImage:
    """Simulate filter-array capture of a cube that did not come from this
    sensor (a reconstruction or generated label), producing the mosaic that
    is exactly aligned with it. Definitionally identical to :func:`mosaic`."""
    return mosaic(pseudo_cube, pattern)


def sparse_expand(mosaic_img: MosaicImage, pattern: SfaPattern) -> SpectralCube:
    """Scatter a mosaic into a cube: band k holds the mosaic values on k's
    lattice sites and zero elsewhere. ``mosaic(sparse_expand(m)) == m``."""
    h, w = mosaic_img.height, mosaic_img.width
    idx = pattern.index_map(h, w)
    data = np.zeros((pattern.bands, h, w), dtype=mosaic_img.data.dtype)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    data[idx, rows, cols] = mosaic_img.data
    return SpectralCube(data)
