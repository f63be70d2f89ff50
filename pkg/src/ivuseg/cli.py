"""Batch orchestration: preprocess, extract, select, fit, evaluate.

Subcommands:
  segment   batch segmentation of PGM frames with optional gold scoring
  evaluate  segmentation plus mandatory gold scoring and aggregate stats
  phantom   synthetic frame/sequence generation with ground truth
  bestcase  per-frame upper bound: score every extracted region against gold

Exit codes: 0 success, 2 partial batch failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import erel, metrics, phantom, preprocess, selection
from .component_tree import build_component_tree
from .errors import ConfigError, SegmentationError
from .geometry import Ellipse, ellipse_from_moments, ellipse_mask, rasterize_ellipse
from .imaging import (
    Contour,
    Frame,
    Sequence,
    frame_center,
    load_contour,
    load_frame,
    median_filter,
    save_contour,
    save_frame,
)

OVERLAY_LUMEN = (255, 0, 255)
OVERLAY_MEDIA = (0, 255, 0)
OVERLAY_GOLD = (255, 255, 0)


@dataclass
class RunConfig:
    """Every tunable of the pipeline, shared by all subcommands."""

    inputs: list[Path] = field(default_factory=list)
    gold_dir: Path | None = None
    outdir: Path = Path("out")
    mm_per_px: float | None = None
    alpha: float = erel.DEFAULT_ALPHA
    beta: int = erel.DEFAULT_BETA
    amin_frac: float = erel.DEFAULT_AMIN_FRAC
    amax_frac: float = erel.DEFAULT_AMAX_FRAC
    ringdown_threshold: int = preprocess.DEFAULT_RINGDOWN_THRESHOLD
    no_ringdown: bool = False
    min_peaks: int = selection.DEFAULT_MIN_PEAKS
    z_min: float = selection.DEFAULT_Z_MIN
    z_max: float = selection.DEFAULT_Z_MAX
    seed: tuple[int, int] | None = None
    despeckle_radius: int = 1
    jobs: int = 1
    trace: bool = False
    contour_points: int = 360

    def validate(self) -> None:
        checks = [
            (0 <= self.alpha <= 2.5, "alpha must lie in [0, 2.5]"),
            (self.beta >= 1, "beta must be >= 1"),
            (0 < self.amin_frac < self.amax_frac <= 1, "need 0 < amin-frac < amax-frac <= 1"),
            (0 <= self.ringdown_threshold <= 255, "ringdown threshold must lie in [0, 255]"),
            (self.min_peaks >= 1, "min-peaks must be >= 1"),
            (self.z_min < self.z_max, "z-min must be below z-max"),
            (self.despeckle_radius >= 1, "despeckle radius must be >= 1"),
            (self.jobs >= 1, "jobs must be >= 1"),
            (self.contour_points >= 16, "contour-points must be >= 16"),
            (self.mm_per_px is None or self.mm_per_px > 0, "mm-per-px must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)


@dataclass
class SegmentResult:
    lumen: Ellipse
    media: Ellipse
    trace: dict


def segment_frame(
    frame: Frame,
    cfg: RunConfig,
    artifact_model: preprocess.ArtifactModel | None = None,
) -> SegmentResult:
    """Run the four pipeline stages on one frame.

    Artifact removal, despeckling, region extraction, selection, and the
    final ellipse fit; the returned trace records the region count after
    each stage plus the full stability profile.
    """
    cfg.validate()
    despeckled = median_filter(frame, cfg.despeckle_radius)
    if artifact_model is not None:
        despeckled = preprocess.remove_artifacts(despeckled, artifact_model)
    seed = cfg.seed if cfg.seed is not None else frame_center(frame)
    if not (0 <= seed[0] < frame.width and 0 <= seed[1] < frame.height):
        raise ConfigError(f"seed {seed} outside the {frame.width}x{frame.height} frame")
    params = erel.ErelParams.for_frame(
        despeckled.pixels.shape,
        alpha=cfg.alpha,
        beta=cfg.beta,
        amin_frac=cfg.amin_frac,
        amax_frac=cfg.amax_frac,
    )
    tree = build_component_tree(despeckled.pixels, stop_seed=seed, stop_area=params.a_max)
    series = erel.extract_qplus(tree, params, seed, despeckled)
    lumen_region, media_region, profile = selection.select_regions(
        series, z_min=cfg.z_min, z_max=cfg.z_max, min_peaks=cfg.min_peaks
    )
    lumen = ellipse_from_moments(
        lumen_region.centroid, lumen_region.mu_xx, lumen_region.mu_xy, lumen_region.mu_yy
    )
    media = ellipse_from_moments(
        media_region.centroid, media_region.mu_xx, media_region.mu_xy, media_region.mu_yy
    )
    trace = {
        "seed": list(seed),
        "area_band": [params.a_min, params.a_max],
        "regions_extracted": len(series),
        "regions_after_outliers": len(profile.v),
        "levels": [r.level for r in series],
        "areas": [r.area for r in series],
        "v": profile.v.tolist(),
        "omega": profile.omega.tolist(),
        "peaks": [[int(i), float(p)] for i, p in profile.peaks],
        "lumen_index": profile.lumen_index,
        "media_index": profile.media_index,
        "degenerate_selection": profile.degenerate,
    }
    return SegmentResult(lumen=lumen, media=media, trace=trace)


# ---------------------------------------------------------------------------
# Batch machinery
# ---------------------------------------------------------------------------

def _collect_inputs(inputs: list[Path]) -> list[Path]:
    files: list[Path] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files.extend(sorted(p.glob("*.pgm")))
        else:
            files.append(p)
    return files


# Ring-down halos and calibration squares cover a small part of the frame;
# a mask beyond this fraction means the inputs are not a decorrelating
# pullback (or the threshold is wrong) and removal would destroy tissue.
MAX_ARTIFACT_FRACTION = 0.2


def _build_artifact_model(frames: list[Frame], cfg: RunConfig) -> preprocess.ArtifactModel | None:
    if cfg.no_ringdown:
        return None
    if len(frames) < 2:
        print(
            "warning: single frame supplied; skipping ring-down removal "
            "(sequence minimum needs at least 2 frames)",
            file=sys.stderr,
        )
        return None
    model = preprocess.build_artifact_model(Sequence(frames=frames), cfg.ringdown_threshold)
    fraction = float(model.mask.mean())
    if fraction > MAX_ARTIFACT_FRACTION:
        print(
            f"warning: artifact mask covers {100 * fraction:.0f}% of the frame, "
            f"which no catheter artifact does; skipping ring-down removal "
            f"(check --ringdown-threshold or pass --no-ringdown)",
            file=sys.stderr,
        )
        return None
    return model


def _segment_worker(args: tuple[int, Frame, RunConfig, preprocess.ArtifactModel | None]):
    index, frame, cfg, model = args
    try:
        result = segment_frame(frame, cfg, model)
        return index, result, None
    except SegmentationError as exc:
        return index, None, {"error": type(exc).__name__, "message": str(exc)}


def _draw_contour(rgb: np.ndarray, contour: Contour, color, dashed: bool = False) -> None:
    h, w, _ = rgb.shape
    pts = metrics.densify(contour, 0.7)
    keep = np.ones(len(pts), dtype=bool)
    if dashed:
        keep = (np.arange(len(pts)) // 6) % 2 == 0
    xs = np.rint(pts[keep, 0]).astype(int)
    ys = np.rint(pts[keep, 1]).astype(int)
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    rgb[ys[ok], xs[ok]] = color


def _write_overlay(path: Path, frame: Frame, lumen: Contour, media: Contour,
                   gold: list[Contour]) -> None:
    rgb = np.repeat(frame.pixels[:, :, None], 3, axis=2).astype(np.uint8)
    for g in gold:
        _draw_contour(rgb, g, OVERLAY_GOLD, dashed=True)
    _draw_contour(rgb, media, OVERLAY_MEDIA)
    _draw_contour(rgb, lumen, OVERLAY_LUMEN)
    header = f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + rgb.tobytes())


def _gold_paths(gold_dir: Path, stem: str) -> tuple[Path, Path]:
    return gold_dir / f"{stem}_lumen.txt", gold_dir / f"{stem}_media.txt"


def _score_frame(
    stem: str,
    lumen: Ellipse,
    media: Ellipse,
    shape: tuple[int, int],
    gold_dir: Path,
    mm_per_px: float | None,
    artifact: str = "none",
) -> metrics.EvaluationReport | None:
    lumen_path, media_path = _gold_paths(gold_dir, stem)
    if not lumen_path.exists() or not media_path.exists():
        return None
    gold_lumen = load_contour(lumen_path)
    gold_media = load_contour(media_path)
    return metrics.EvaluationReport(
        frame=stem,
        artifact=artifact,
        lumen=metrics.structure_metrics(
            ellipse_mask(lumen, shape), _polygon_mask(gold_lumen, shape),
            rasterize_ellipse(lumen, 720), gold_lumen, mm_per_px,
        ),
        media=metrics.structure_metrics(
            ellipse_mask(media, shape), _polygon_mask(gold_media, shape),
            rasterize_ellipse(media, 720), gold_media, mm_per_px,
        ),
    )


def _polygon_mask(contour: Contour, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd scanline fill of a closed polygon at pixel centres."""
    h, w = shape
    pts = contour.points
    x0 = max(0, int(np.floor(pts[:, 0].min())))
    x1 = min(w, int(np.ceil(pts[:, 0].max())) + 1)
    y0 = max(0, int(np.floor(pts[:, 1].min())))
    y1 = min(h, int(np.ceil(pts[:, 1].max())) + 1)
    out = np.zeros((h, w), dtype=bool)
    if x0 >= x1 or y0 >= y1:
        return out
    xs = np.arange(x0, x1, dtype=np.float64)
    px, py = pts[:, 0], pts[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    keep = py != qy
    px, py, qx, qy = px[keep], py[keep], qx[keep], qy[keep]
    for row, y in enumerate(range(y0, y1)):
        crosses = ((py <= y) & (qy > y)) | ((qy <= y) & (py > y))
        if not crosses.any():
            continue
        x_at = px[crosses] + (y - py[crosses]) * (qx[crosses] - px[crosses]) / (qy[crosses] - py[crosses])
        x_at.sort()
        # odd number of crossings strictly right of a pixel centre = inside
        out[y, x0:x1] = (np.searchsorted(x_at, xs, side="right") % 2).astype(bool)
    return out


@dataclass
class BatchSummary:
    processed: int
    failed: int
    reports: list[metrics.EvaluationReport]

    @property
    def exit_code(self) -> int:
        return 0 if self.failed == 0 else 2


def run_batch(cfg: RunConfig) -> BatchSummary:
    """Segment every input frame; emit contours, overlays, traces, and CSV.

    Frames are processed independently (optionally in parallel) and results
    are written in input order, so outputs are byte-identical regardless of
    the parallelism degree.  Per-frame failures are recorded and the batch
    continues.
    """
    cfg.validate()
    files = _collect_inputs(cfg.inputs)
    if not files:
        raise ConfigError("no input frames found")
    cfg.outdir.mkdir(parents=True, exist_ok=True)

    frames = []
    errors: dict[int, dict] = {}
    for i, path in enumerate(files):
        try:
            frames.append((i, load_frame(path)))
        except SegmentationError as exc:
            errors[i] = {"error": type(exc).__name__, "message": str(exc)}

    model = _build_artifact_model([f for _, f in frames], cfg)

    tasks = [(i, frame, cfg, model) for i, frame in frames]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_segment_worker, tasks, chunksize=1))
    else:
        outcomes = [_segment_worker(t) for t in tasks]

    results: dict[int, SegmentResult] = {}
    for index, result, error in outcomes:
        if error is not None:
            errors[index] = error
        else:
            results[index] = result

    reports: list[metrics.EvaluationReport] = []
    rows = []
    frame_by_index = dict(frames)
    for i, path in enumerate(files):
        stem = path.stem
        if i in errors:
            (cfg.outdir / f"{stem}_error.json").write_text(
                json.dumps({"frame": stem, **errors[i]}, indent=2) + "\n"
            )
            continue
        result = results[i]
        frame = frame_by_index[i]
        lumen_contour = rasterize_ellipse(result.lumen, cfg.contour_points)
        media_contour = rasterize_ellipse(result.media, cfg.contour_points)
        save_contour(lumen_contour, cfg.outdir / f"{stem}_lumen.txt")
        save_contour(media_contour, cfg.outdir / f"{stem}_media.txt")
        gold_contours = []
        report = None
        if cfg.gold_dir is not None:
            report = _score_frame(
                stem, result.lumen, result.media, frame.pixels.shape,
                cfg.gold_dir, cfg.mm_per_px,
            )
            if report is not None:
                reports.append(report)
                metrics.write_report_json(report, cfg.outdir / f"{stem}_metrics.json")
                gp_l, gp_m = _gold_paths(cfg.gold_dir, stem)
                gold_contours = [load_contour(gp_l), load_contour(gp_m)]
        _write_overlay(
            cfg.outdir / f"{stem}_overlay.ppm", frame,
            lumen_contour, media_contour, gold_contours,
        )
        if cfg.trace:
            (cfg.outdir / f"{stem}_trace.json").write_text(
                json.dumps({"frame": stem, **result.trace}, indent=2) + "\n"
            )
        if report is not None:
            rows.append(report)

    if rows:
        metrics.write_report_csv(rows, cfg.outdir / "summary.csv")
    return BatchSummary(processed=len(results), failed=len(errors), reports=reports)


# ---------------------------------------------------------------------------
# bestcase: upper bound over all extracted regions (no selection)
# ---------------------------------------------------------------------------

def bestcase_frame(
    frame: Frame,
    cfg: RunConfig,
    gold_lumen: Contour,
    gold_media: Contour,
    artifact_model: preprocess.ArtifactModel | None = None,
) -> dict:
    """Score every extracted region against gold; keep the maximum-JM ones."""
    cfg.validate()
    despeckled = median_filter(frame, cfg.despeckle_radius)
    if artifact_model is not None:
        despeckled = preprocess.remove_artifacts(despeckled, artifact_model)
    seed = cfg.seed if cfg.seed is not None else frame_center(frame)
    if not (0 <= seed[0] < frame.width and 0 <= seed[1] < frame.height):
        raise ConfigError(f"seed {seed} outside the {frame.width}x{frame.height} frame")
    params = erel.ErelParams.for_frame(
        despeckled.pixels.shape, alpha=cfg.alpha, beta=cfg.beta,
        amin_frac=cfg.amin_frac, amax_frac=cfg.amax_frac,
    )
    tree = build_component_tree(despeckled.pixels, stop_seed=seed, stop_area=params.a_max)
    series = erel.extract_qplus(tree, params, seed, despeckled)
    shape = frame.pixels.shape
    lumen_mask = _polygon_mask(gold_lumen, shape)
    media_mask = _polygon_mask(gold_media, shape)
    best = {"lumen": (-1.0, None), "media": (-1.0, None)}
    for idx, region in enumerate(series):
        mask = region.mask
        jm_l = metrics.jaccard(mask, lumen_mask)
        jm_m = metrics.jaccard(mask, media_mask)
        if jm_l > best["lumen"][0]:
            best["lumen"] = (jm_l, idx)
        if jm_m > best["media"][0]:
            best["media"] = (jm_m, idx)
    out = {"n_regions": len(series)}
    for name, gold, gold_mask in (
        ("lumen", gold_lumen, lumen_mask),
        ("media", gold_media, media_mask),
    ):
        jm, idx = best[name]
        region = series[idx]
        contour = region.boundary
        hd = metrics.hausdorff(contour, gold)
        out[name] = {
            "jm": jm,
            "index": idx,
            "area": region.area,
            "hd_px": hd,
            "hd_mm": None if cfg.mm_per_px is None else hd * cfg.mm_per_px,
            "pad": metrics.pad(float(region.area), float(np.count_nonzero(gold_mask))),
        }
    return out


# ---------------------------------------------------------------------------
# Command-line front end
# ---------------------------------------------------------------------------

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value config file; flags override it")
    p.add_argument("--outdir", type=Path, default=Path("out"))
    p.add_argument("--mm-per-px", type=float, dest="mm_per_px")
    p.add_argument("--alpha", type=float, default=erel.DEFAULT_ALPHA)
    p.add_argument("--beta", type=int, default=erel.DEFAULT_BETA)
    p.add_argument("--amin-frac", type=float, dest="amin_frac", default=erel.DEFAULT_AMIN_FRAC)
    p.add_argument("--amax-frac", type=float, dest="amax_frac", default=erel.DEFAULT_AMAX_FRAC)
    p.add_argument("--ringdown-threshold", type=int, dest="ringdown_threshold",
                   default=preprocess.DEFAULT_RINGDOWN_THRESHOLD)
    p.add_argument("--no-ringdown", action="store_true", dest="no_ringdown")
    p.add_argument("--min-peaks", type=int, dest="min_peaks", default=selection.DEFAULT_MIN_PEAKS)
    p.add_argument("--zmin", type=float, dest="z_min", default=selection.DEFAULT_Z_MIN)
    p.add_argument("--zmax", type=float, dest="z_max", default=selection.DEFAULT_Z_MAX)
    p.add_argument("--seed", type=str, help="seed pixel as x,y (default: frame centre)")
    p.add_argument("--despeckle-radius", type=int, dest="despeckle_radius", default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--contour-points", type=int, dest="contour_points", default=360)


def _parse_config_file(path: Path) -> dict:
    values: dict = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"bad config line {raw!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_TYPES = {
    "alpha": float, "beta": int, "amin_frac": float, "amax_frac": float,
    "ringdown_threshold": int, "no_ringdown": lambda v: v.lower() in ("1", "true", "yes"),
    "min_peaks": int, "z_min": float, "z_max": float, "seed": str,
    "despeckle_radius": int, "jobs": int, "mm_per_px": float,
    "trace": lambda v: v.lower() in ("1", "true", "yes"),
    "contour_points": int, "outdir": Path,
}


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        try:
            raw = _parse_config_file(pre.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        defaults = {}
        for key, value in raw.items():
            if key not in _CONFIG_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            defaults[key] = _CONFIG_TYPES[key](value)
        parser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _config_from_args(args: argparse.Namespace, inputs: list[Path],
                      gold_dir: Path | None) -> RunConfig:
    seed = None
    if getattr(args, "seed", None):
        try:
            x, y = (int(v) for v in str(args.seed).split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --seed value {args.seed!r}; expected x,y") from exc
        seed = (x, y)
    cfg = RunConfig(
        inputs=inputs,
        gold_dir=gold_dir,
        outdir=args.outdir,
        mm_per_px=args.mm_per_px,
        alpha=args.alpha,
        beta=args.beta,
        amin_frac=args.amin_frac,
        amax_frac=args.amax_frac,
        ringdown_threshold=args.ringdown_threshold,
        no_ringdown=args.no_ringdown,
        min_peaks=args.min_peaks,
        z_min=args.z_min,
        z_max=args.z_max,
        seed=seed,
        despeckle_radius=args.despeckle_radius,
        jobs=args.jobs,
        trace=args.trace,
        contour_points=args.contour_points,
    )
    cfg.validate()
    return cfg


def _cmd_segment(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args, args.inputs, args.gold)
    summary = run_batch(cfg)
    print(f"segmented {summary.processed} frame(s), {summary.failed} failure(s)")
    return summary.exit_code


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args, args.inputs, args.gold)
    summary = run_batch(cfg)
    if not summary.reports:
        print("no frames could be scored against gold", file=sys.stderr)
        return 2
    agg = metrics.aggregate(summary.reports)
    (cfg.outdir / "aggregate.json").write_text(json.dumps(agg, indent=2) + "\n")
    stats = agg["all"]
    line = (
        f"frames {stats['count']}: lumen JM {stats['lumen_jm_mean']:.3f} "
        f"(sd {stats['lumen_jm_std']:.3f}), lumen HD {stats['lumen_hd_px_mean']:.2f} px"
    )
    if "lumen_hd_mm_mean" in stats:
        line += f" = {stats['lumen_hd_mm_mean']:.3f} mm (sd {stats['lumen_hd_mm_std']:.3f})"
    print(line)
    print(
        f"media JM {stats['media_jm_mean']:.3f} (sd {stats['media_jm_std']:.3f}), "
        f"media HD {stats['media_hd_px_mean']:.2f} px"
    )
    return summary.exit_code


def _cmd_bestcase(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args, args.inputs, args.gold)
    files = _collect_inputs(cfg.inputs)
    if not files:
        raise ConfigError("no input frames found")
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    loaded = []
    failed = 0
    for path in files:
        try:
            loaded.append((path, load_frame(path)))
        except SegmentationError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            failed += 1
    model = _build_artifact_model([f for _, f in loaded], cfg)
    results = []
    for path, frame in loaded:
        stem = path.stem
        gl, gm = _gold_paths(cfg.gold_dir, stem)
        if not gl.exists() or not gm.exists():
            print(f"{stem}: missing gold contours", file=sys.stderr)
            failed += 1
            continue
        try:
            entry = bestcase_frame(frame, cfg, load_contour(gl), load_contour(gm), model)
        except SegmentationError as exc:
            print(f"{stem}: {exc}", file=sys.stderr)
            failed += 1
            continue
        entry["frame"] = stem
        results.append(entry)
    (cfg.outdir / "bestcase.json").write_text(json.dumps(results, indent=2) + "\n")
    if results:
        jl = float(np.mean([r["lumen"]["jm"] for r in results]))
        jm = float(np.mean([r["media"]["jm"] for r in results]))
        print(f"best-case over {len(results)} frame(s): lumen JM {jl:.3f}, media JM {jm:.3f}")
    return 0 if failed == 0 else 2


def _cmd_phantom(args: argparse.Namespace) -> int:
    if args.spec is not None:
        spec = phantom.load_spec(args.spec)
    else:
        spec = phantom.PhantomSpec(rng_seed=args.rng_seed, speckle_sigma=args.sigma)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    generated, truth = phantom.generate_phantom(spec, n_frames=args.frames)
    frames = generated.frames if isinstance(generated, Sequence) else [generated]
    for i, frame in enumerate(frames):
        save_frame(frame, outdir / f"phantom_{i:03d}.pgm")
        save_contour(truth.lumen_contour, outdir / f"phantom_{i:03d}_lumen.txt")
        save_contour(truth.media_contour, outdir / f"phantom_{i:03d}_media.txt")
    phantom.save_spec(spec, outdir / "phantom.spec")
    print(f"wrote {len(frames)} phantom frame(s) to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivuseg",
        description="Lumen and media segmentation for IVUS B-mode frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment frames; score them when gold is given")
    p_seg.add_argument("inputs", nargs="+", type=Path)
    p_seg.add_argument("--gold", type=Path, help="directory of gold-standard contours")
    _add_common_flags(p_seg)
    p_seg.set_defaults(func=_cmd_segment)

    p_eval = sub.add_parser("evaluate", help="segment and report metrics against gold")
    p_eval.add_argument("inputs", nargs="+", type=Path)
    p_eval.add_argument("--gold", type=Path, required=True)
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_best = sub.add_parser("bestcase", help="per-frame maximum-JM region over all candidates")
    p_best.add_argument("inputs", nargs="+", type=Path)
    p_best.add_argument("--gold", type=Path, required=True)
    _add_common_flags(p_best)
    p_best.set_defaults(func=_cmd_bestcase)

    p_ph = sub.add_parser("phantom", help="generate synthetic frames with ground truth")
    p_ph.add_argument("--spec", type=Path, help="phantom spec file (key=value)")
    p_ph.add_argument("--outdir", type=Path, default=Path("phantom_out"))
    p_ph.add_argument("--frames", type=int, default=1)
    p_ph.add_argument("--rng-seed", type=int, dest="rng_seed", default=0)
    p_ph.add_argument("--sigma", type=float, default=0.3)
    p_ph.set_defaults(func=_cmd_phantom)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        if argv is None:
            argv = sys.argv[1:]
        args = _apply_config_file(parser, list(argv))
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
