"""Reconstruction quality metrics: PSNR, SSIM, and spectral angle.

All three accept either :class:`~specmosaic.core.SpectralCube` values or bare
3D arrays laid out band-first, compute in float64, and are symmetric in their
two image arguments. Dataset-level scores are arithmetic means of per-image
values taken in input order (PSNR is averaged in dB).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._version import TOOL_VERSION
from .core import DegenerateInputError, ShapeError, SpecmosaicError, SpectralCube

__all__ = [
    "psnr",
    "ssim",
    "sam",
    "evaluate_dataset",
    "ImageMetrics",
    "MetricReport",
]

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03
_SSIM_L = 1.0
_SAM_NORM_GUARD = 1e-12


def _as_bands(x: SpectralCube | np.ndarray, name: str) -> np.ndarray:
    data = x.data if isinstance(x, SpectralCube) else np.asarray(x)
    if data.ndim != 3:
        raise ShapeError(f"{name} must be a cube (bands, height, width), got shape {data.shape}")
    return data.astype(np.float64, copy=False)


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    af = _as_bands(a, "a")
    bf = _as_bands(b, "b")
    if af.shape != bf.shape:
        raise ShapeError(f"shape mismatch: {af.shape} vs {bf.shape}")
    return af, bf


def psnr(a: SpectralCube | np.ndarray, b: SpectralCube | np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB: 10*log10(peak^2 / MSE) with the MSE
    taken over every sample of the cube. Identical inputs return +inf."""
    if not peak > 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    af, bf = _paired(a, b)
    diff = af - bf
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(peak * peak / mse))


def _gauss_kernel(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _corr_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric 1D kernel on both
    axes; output shrinks by (len(kernel) - 1) along each axis."""
    out = img
    taps = len(kernel)
    for axis in (0, 1):
        n = out.shape[axis] - (taps - 1)
        shape = (n, out.shape[1]) if axis == 0 else (out.shape[0], n)
        acc = np.zeros(shape, dtype=np.float64)
        view = [slice(None), slice(None)]
        for i, wgt in enumerate(kernel):
            view[axis] = slice(i, i + n)
            acc += wgt * out[tuple(view)]
        out = acc
    return out


def ssim(a: SpectralCube | np.ndarray, b: SpectralCube | np.ndarray) -> float:
    """Mean structural similarity, per band then averaged across bands.

    Local statistics use an 11x11 Gaussian window (sigma 1.5, normalized to
    sum 1) on the valid region only — no padding — with the standard
    stabilizers C1 = (K1*L)^2, C2 = (K2*L)^2 at L = 1, K1 = 0.01, K2 = 0.03.
    Identical inputs score exactly 1.0.
    """
    af, bf = _paired(a, b)
    radius = (_SSIM_WINDOW - 1) // 2
    if af.shape[1] < _SSIM_WINDOW or af.shape[2] < _SSIM_WINDOW:
        raise ShapeError(
            f"spatial extent {af.shape[1]}x{af.shape[2]} is smaller than the "
            f"{_SSIM_WINDOW}x{_SSIM_WINDOW} window"
        )
    c1 = (_SSIM_K1 * _SSIM_L) ** 2
    c2 = (_SSIM_K2 * _SSIM_L) ** 2
    kernel = _gauss_kernel(_SSIM_SIGMA, radius)
    per_band = np.empty(af.shape[0], dtype=np.float64)
    for k in range(af.shape[0]):
        x, y = af[k], bf[k]
        mx = _corr_valid(x, kernel)
        my = _corr_valid(y, kernel)
        # Variances/covariance via E[xy] - E[x]E[y]; with x is y this makes
        # every factor of the SSIM quotient bitwise equal to its denominator
        # twin, so ssim(a, a) == 1.0 exactly.
        sxx = _corr_valid(x * x, kernel) - mx * mx
        syy = _corr_valid(y * y, kernel) - my * my
        sxy = _corr_valid(x * y, kernel) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * sxy + c2)
        den = (mx * mx + my * my + c1) * (sxx + syy + c2)
        per_band[k] = np.mean(num / den)
    return float(np.mean(per_band))


def sam(a: SpectralCube | np.ndarray, b: SpectralCube | np.ndarray) -> float:
    """Mean spectral angle in degrees.

    Each pixel's band vector pair contributes arccos of the clamped cosine
    similarity; pixels where either vector norm falls below 1e-12 are
    excluded (the angle is undefined there). Raises when no pixel survives.
    """
    af, bf = _paired(a, b)
    daa = np.sum(af * af, axis=0)
    dbb = np.sum(bf * bf, axis=0)
    dab = np.sum(af * bf, axis=0)
    valid = (np.sqrt(daa) >= _SAM_NORM_GUARD) & (np.sqrt(dbb) >= _SAM_NORM_GUARD)
    if not valid.any():
        raise DegenerateInputError("no pixel has both spectra above the norm guard")
    cos = dab[valid] / np.sqrt(daa[valid] * dbb[valid])
    angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    return float(np.mean(angles))


@dataclass(frozen=True)
class ImageMetrics:
    index: int
    psnr: float
    ssim: float
    sam: float


@dataclass(frozen=True)
class MetricReport:
    """Per-image metrics plus their arithmetic means, in input order."""

    per_image: tuple[ImageMetrics, ...]
    mean_psnr: float
    mean_ssim: float
    mean_sam: float
    peak: float
    tool_version: str = TOOL_VERSION

    def to_json(self) -> str:
        doc = {
            "per_image": [
                {"index": m.index, "psnr": m.psnr, "ssim": m.ssim, "sam": m.sam}
                for m in self.per_image
            ],
            "mean_psnr": self.mean_psnr,
            "mean_ssim": self.mean_ssim,
            "mean_sam": self.mean_sam,
            "peak": self.peak,
            "tool_version": self.tool_version,
        }
        # +inf PSNR serializes as the JavaScript-style Infinity token, which
        # json.loads round-trips.
        return json.dumps(doc, indent=2) + "\n"


def report_from_triples(
    triples: Sequence[tuple[float, float, float]], peak: float = 1.0
) -> MetricReport:
    """Assemble a report from already-computed (psnr, ssim, sam) triples."""
    if len(triples) == 0:
        raise DegenerateInputError("cannot aggregate an empty metric sequence")
    per_image = tuple(
        ImageMetrics(index=i, psnr=p, ssim=s, sam=g) for i, (p, s, g) in enumerate(triples)
    )
    return MetricReport(
        per_image=per_image,
        mean_psnr=float(np.mean([m.psnr for m in per_image])),
        mean_ssim=float(np.mean([m.ssim for m in per_image])),
        mean_sam=float(np.mean([m.sam for m in per_image])),
        peak=peak,
    )


def evaluate_dataset(
    pairs: Iterable[tuple[SpectralCube | np.ndarray, SpectralCube | np.ndarray]],
    peak: float = 1.0,
) -> MetricReport:
    """Score every (reconstruction, reference) pair and average the results.

    Evaluation runs sequentially in input order; a failure on any pair is
    re-raised with that pair's index attached.
    """
    triples: list[tuple[float, float, float]] = []
    for i, (recon, ref) in enumerate(pairs):
        try:
            triples.append((psnr(recon, ref, peak), ssim(recon, ref), sam(recon, ref)))
        except SpecmosaicError as e:
            raise type(e)(f"pair {i}: {e}") from e
    return report_from_triples(triples, peak)
