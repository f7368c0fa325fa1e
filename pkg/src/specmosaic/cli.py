"""Batch command-line surface.

Subcommands mirror the dataset workflow: ``mosaic``/``demosaic`` convert
single images, ``pairs`` builds the pseudo-paired dataset, ``select-hard``
filters it down to the artifact-prone subset, ``fvmap`` exports one
frequency-variation map, ``metrics`` scores reconstructions, and
``patchify`` cuts aligned patches.

Exit status: 0 on success, 2 on usage errors (argparse), 1 on processing
errors, which are reported on stderr with the failing record's index where
applicable. Outputs are deterministic: same inputs and flags produce
byte-identical files regardless of ``SPECMOSAIC_THREADS``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ._threads import parallel_map
from ._version import TOOL_VERSION
from .core import DegenerateInputError, FormatError, SpecmosaicError, SpectralCube
from .dataset import MANIFEST_NAME, filter_hard, make_pseudo_pairs, patchify, read_manifest
from .demosaic import wb_bilinear
from .fileio import (
    _atomic_write_bytes,
    load_pattern_spec,
    read_cube,
    read_mosaic,
    read_sidecar,
    write_cube,
    write_fvmap,
    write_mosaic,
)
from .freqsel import FreqParams, SelectionParams, frequency_variation_map
from .metrics import psnr, report_from_triples, sam, ssim
from .sfa import mosaic as sfa_mosaic

__all__ = ["cli_dispatch", "main"]

_FREQ_DEFAULTS = FreqParams()
_SEL_DEFAULTS = SelectionParams()


def _add_freq_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=_FREQ_DEFAULTS.epsilon,
                   help="log-magnitude guard (default %(default)s)")
    p.add_argument("--sigma", type=float, default=_FREQ_DEFAULTS.blur_sigma,
                   help="Gaussian smoothing sigma (default %(default)s)")
    p.add_argument("--radius", type=int, default=_FREQ_DEFAULTS.blur_radius,
                   help="Gaussian kernel half-width (default %(default)s)")
    p.add_argument("--r-low", type=float, default=_FREQ_DEFAULTS.r_low,
                   help="bandpass inner radius fraction (default %(default)s)")
    p.add_argument("--r-high", type=float, default=_FREQ_DEFAULTS.r_high,
                   help="bandpass outer radius fraction (default %(default)s)")


def _freq_params(args: argparse.Namespace) -> FreqParams:
    try:
        return FreqParams(
            epsilon=args.eps,
            blur_sigma=args.sigma,
            blur_radius=args.radius,
            r_low=args.r_low,
            r_high=args.r_high,
        )
    except ValueError as e:
        raise FormatError(str(e)) from e


def _cmd_mosaic(args: argparse.Namespace) -> int:
    pattern = load_pattern_spec(args.pattern)
    cube = read_cube(args.cube)
    write_mosaic(sfa_mosaic(cube, pattern), args.output, pattern=pattern)
    return 0


def _cmd_demosaic(args: argparse.Namespace) -> int:
    pattern = load_pattern_spec(args.pattern)
    mosaic_img = read_mosaic(args.mosaic)
    write_cube(wb_bilinear(mosaic_img, pattern), args.output, pattern=pattern)
    return 0


def _cmd_pairs(args: argparse.Namespace) -> int:
    pattern = load_pattern_spec(args.pattern)
    cube_dir = Path(args.cube_dir)
    if not cube_dir.is_dir():
        raise FormatError(f"{cube_dir} is not a directory")
    sources = sorted(cube_dir.glob("*.bsq"))
    if not sources:
        raise DegenerateInputError(f"no .bsq cubes found in {cube_dir}")
    records = make_pseudo_pairs(
        sources,
        pattern,
        args.output,
        patch=tuple(args.patch) if args.patch else None,
        stride=args.stride,
        augment=args.augment,
    )
    print(f"{len(records)} records -> {Path(args.output) / MANIFEST_NAME}")
    return 0


def _cmd_select_hard(args: argparse.Namespace) -> int:
    try:
        sparams = SelectionParams(t_var=args.t_var, t_cnt=args.t_cnt)
    except ValueError as e:
        raise FormatError(str(e)) from e
    kept = filter_hard(
        args.manifest, _freq_params(args), sparams, out_path=args.output
    )
    print(f"{len(kept)} hard records -> {args.output}")
    return 0


def _cmd_fvmap(args: argparse.Namespace) -> int:
    a = read_cube(args.cube_a)
    b = read_cube(args.cube_b)
    fv = frequency_variation_map(a, b, _freq_params(args))
    write_fvmap(fv, args.output, pgm=args.pgm)
    return 0


def _metric_pairs_from_manifest(path: Path, clamp: bool):
    records = read_manifest(path)
    base = path.parent

    def job(item):
        i, rec = item
        try:
            ref = read_cube(base / rec.cube)
            side = read_sidecar(base / rec.cube)
            if side.pattern is None:
                raise FormatError(f"cube sidecar for {rec.cube} carries no pattern")
            recon = wb_bilinear(read_mosaic(base / rec.mosaic), side.pattern)
            return _triple(recon, ref, clamp)
        except SpecmosaicError as e:
            raise type(e)(f"record {i}: {e}") from e
        except OSError as e:
            raise FormatError(f"record {i}: {e}") from e

    return parallel_map(job, list(enumerate(records)))


def _metric_pairs_from_list(path: Path, clamp: bool):
    lines = [
        (n, line.strip())
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines())
        if line.strip() and not line.strip().startswith("#")
    ]

    def job(item):
        i, (n, line) = item
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(
                f"record {i} ({path} line {n + 1}): expected '<recon> <ref>', got {line!r}"
            )
        try:
            return _triple(read_cube(parts[0]), read_cube(parts[1]), clamp)
        except SpecmosaicError as e:
            raise type(e)(f"record {i}: {e}") from e
        except OSError as e:
            raise FormatError(f"record {i}: {e}") from e

    return parallel_map(job, list(enumerate(lines)))


def _triple(recon: SpectralCube, ref: SpectralCube, clamp: bool):
    if clamp:
        recon = SpectralCube(np.clip(recon.data, 0.0, 1.0))
    return psnr(recon, ref, 1.0), ssim(recon, ref), sam(recon, ref)


def _cmd_metrics(args: argparse.Namespace) -> int:
    path = Path(args.input)
    try:
        head = next(
            (ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip()),
            "",
        )
    except FileNotFoundError:
        raise FormatError(f"missing input {path}") from None
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    is_manifest = path.suffix == ".jsonl" or head.startswith("{")
    if is_manifest:
        triples = _metric_pairs_from_manifest(path, args.clamp)
    else:
        triples = _metric_pairs_from_list(path, args.clamp)
    report = report_from_triples(triples, peak=1.0)
    _atomic_write_bytes(Path(args.output), report.to_json().encode("utf-8"))
    print(
        f"{len(triples)} pairs: psnr {report.mean_psnr:.4f} dB, "
        f"ssim {report.mean_ssim:.6f}, sam {report.mean_sam:.6f} deg"
    )
    return 0


def _cmd_patchify(args: argparse.Namespace) -> int:
    pattern = load_pattern_spec(args.pattern)
    cube = read_cube(args.cube)
    stride = args.stride if args.stride is not None else args.patch[0]
    pieces = patchify(cube, args.patch[0], args.patch[1], stride, pattern.period)
    out = Path(args.output)
    stem = Path(args.cube).name.removesuffix(".bsq").removesuffix(".json")
    for origin, piece in pieces:
        name = f"{stem}_r{origin.row:05d}_c{origin.col:05d}"
        write_cube(piece, out / name, pattern=pattern)
    print(f"{len(pieces)} patches -> {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specmosaic",
        description="Filter-array mosaicing, demosaicing, hard-patch mining, "
                    "and reconstruction scoring.",
    )
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mosaic", help="sample a cube through a filter pattern")
    p.add_argument("cube")
    p.add_argument("--pattern", required=True, help="NxN or pattern JSON path")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_mosaic)

    p = sub.add_parser("demosaic", help="bilinear reconstruction of a mosaic")
    p.add_argument("mosaic")
    p.add_argument("--pattern", required=True, help="NxN or pattern JSON path")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_demosaic)

    p = sub.add_parser("pairs", help="build the pseudo-paired dataset")
    p.add_argument("cube_dir")
    p.add_argument("--pattern", required=True, help="NxN or pattern JSON path")
    p.add_argument("--augment", action="store_true",
                   help="emit all square-symmetry variants of each cube")
    p.add_argument("--patch", nargs=2, type=int, metavar=("H", "W"))
    p.add_argument("--stride", type=int, default=None,
                   help="window stride (default: patch size)")
    p.add_argument("-o", "--output", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("select-hard", help="filter a manifest down to hard records")
    p.add_argument("manifest")
    _add_freq_flags(p)
    p.add_argument("--t-var", type=float, default=_SEL_DEFAULTS.t_var,
                   help="bin intensity threshold (default %(default)s)")
    p.add_argument("--t-cnt", type=int, default=_SEL_DEFAULTS.t_cnt,
                   help="suprathreshold bin count threshold (default %(default)s)")
    p.add_argument("-o", "--output", required=True, help="filtered manifest path")
    p.set_defaults(func=_cmd_select_hard)

    p = sub.add_parser("fvmap", help="frequency-variation map of two cubes")
    p.add_argument("cube_a")
    p.add_argument("cube_b")
    _add_freq_flags(p)
    p.add_argument("-o", "--output", required=True, help="output map (1-band cube)")
    p.add_argument("--pgm", default=None, help="also export an 8-bit PGM preview")
    p.set_defaults(func=_cmd_fvmap)

    p = sub.add_parser("metrics", help="score reconstructions against references")
    p.add_argument("input", help="manifest (.jsonl) or pair list ('<recon> <ref>' lines)")
    p.add_argument("--clamp", action="store_true",
                   help="clamp reconstructions to [0, 1] before scoring")
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("patchify", help="cut pattern-aligned patches from a cube")
    p.add_argument("cube")
    p.add_argument("--patch", nargs=2, type=int, metavar=("H", "W"), required=True)
    p.add_argument("--stride", type=int, default=None,
                   help="window stride (default: patch height)")
    p.add_argument("--pattern", required=True, help="NxN or pattern JSON path")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_patchify)

    return parser


def cli_dispatch(argv: list[str]) -> int:
    """Parse and run one command; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (SpecmosaicError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
