"""Batch front-end: sweep (mu, R) grids over a scene and emit result tables.

Exit codes:
    0  success
    2  configuration error (unreadable/malformed config or scene)
    3  a transverse cut-off value lies inside the requested mu interval
    4  numerical failure (singular Gram matrix or factorization fault);
       partial results are flushed with an ``# INCOMPLETE`` trailer

Identical configurations produce byte-identical CSV output regardless of the
worker count: grid points are computed independently and gathered in a fixed
order before anything is written.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import report
from .errors import (
    ConfigError,
    ConvergenceError,
    SingularGramError,
    SingularSystemError,
    ThresholdProximityError,
    WavescatError,
)
from .geometry import WaveguideScene, scene_from_json, validate_scene
from .scattering import (
    compute_scattering,
    convergence_from_results,
    scene_bases,
)
from .spectral import enumerate_modes, gamma_estimate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_THRESHOLD = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class RunConfig:
    scene_path: str
    mu_values: tuple[float, ...]
    R_list: tuple[float, ...]
    h: float
    zeta: float = 1.0
    threshold_guard: float = 1e-3
    grade_corners: bool = False
    workers: int = 1
    output_dir: str = "out"


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {p} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        mu_spec = doc["mu"]
        if isinstance(mu_spec, dict):
            count = int(mu_spec["count"])
            if count < 1:
                raise ConfigError("mu count must be >= 1")
            mu_values = tuple(
                np.linspace(float(mu_spec["start"]), float(mu_spec["stop"]), count)
            )
        else:
            mu_values = tuple(float(m) for m in mu_spec)
        cfg = RunConfig(
            scene_path=str(doc["scene"]),
            mu_values=mu_values,
            R_list=tuple(float(r) for r in doc["R_list"]),
            h=float(doc["h"]),
            zeta=float(doc.get("zeta", 1.0)),
            threshold_guard=float(doc.get("threshold_guard", 1e-3)),
            grade_corners=bool(doc.get("grade_corners", False)),
            workers=int(doc.get("workers", 1)),
            output_dir=str(doc.get("output_dir", "out")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {p}: {exc!r}") from exc
    if not cfg.mu_values or not cfg.R_list:
        raise ConfigError("mu grid and R_list must be nonempty")
    if cfg.h <= 0 or cfg.zeta == 0.0:
        raise ConfigError("h must be positive and zeta nonzero")
    scene_path = Path(cfg.scene_path)
    if not scene_path.is_absolute():
        scene_path = p.parent / scene_path
    return replace(cfg, scene_path=str(scene_path))


def _load_scene(cfg: RunConfig) -> WaveguideScene:
    try:
        scene = scene_from_json(cfg.scene_path)
    except (OSError, json.JSONDecodeError, WavescatError) as exc:
        raise ConfigError(f"cannot load scene {cfg.scene_path}: {exc}") from exc
    diags = validate_scene(scene)
    if diags:
        raise ConfigError("invalid scene: " + "; ".join(diags))
    return scene


def _check_interval_thresholds(scene: WaveguideScene, cfg: RunConfig) -> None:
    """The whole [mu_min, mu_max] interval must be free of cut-off values."""
    mu_min = min(cfg.mu_values)
    mu_max = max(cfg.mu_values)
    for end in scene.ends:
        k = 1
        while True:
            nu = (k * math.pi / end.width) ** 2
            if nu > mu_max + cfg.threshold_guard:
                break
            if nu > mu_min - cfg.threshold_guard:
                raise ThresholdProximityError(
                    (mu_min + mu_max) / 2, nu, end.index, k, cfg.threshold_guard
                )
            k += 1


def _grid_point(args):
    scene, mu, R, cfg = args
    return compute_scattering(
        scene,
        mu,
        R,
        cfg.h,
        cfg.zeta,
        threshold_guard=cfg.threshold_guard,
        grade_corners=cfg.grade_corners,
    )


def run(cfg: RunConfig) -> int:
    """Execute the sweep and write results.csv, convergence.csv,
    summary.json, plots.gp and the rendered figures."""
    try:
        scene = _load_scene(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _check_interval_thresholds(scene, cfg)
    except ThresholdProximityError as exc:
        print(f"threshold violation: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    points = [(scene, mu, R, cfg) for mu in cfg.mu_values for R in sorted(cfg.R_list)]
    results = []
    failure: tuple[float, float, Exception] | None = None
    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                for (self_scene, mu, R, _), res in zip(points, ex.map(_grid_point, points)):
                    results.append(res)
        else:
            for pt in points:
                results.append(_grid_point(pt))
    except (SingularGramError, SingularSystemError) as exc:
        done = len(results)
        mu_f, R_f = points[done][1], points[done][2]
        failure = (mu_f, R_f, exc)

    results.sort(key=lambda r: (r.mu, r.R))
    report.write_results_csv(outdir / "results.csv", results, incomplete=failure is not None)
    if failure is not None:
        mu_f, R_f, exc = failure
        print(
            f"numerical failure at mu={mu_f!r}, R={R_f!r}: {exc}",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL

    studies = []
    for mu in cfg.mu_values:
        group = [r for r in results if r.mu == mu]
        if len(group) < 2:
            continue
        bases = scene_bases(scene, mu, cfg.threshold_guard)
        try:
            studies.append(convergence_from_results(group, gamma_estimate(bases, mu)))
        except ConvergenceError:
            continue
    report.write_convergence_csv(outdir / "convergence.csv", studies)

    summary = {"scene": scene.name, "h": cfg.h, "zeta": cfg.zeta, "per_mu": {}}
    for mu in cfg.mu_values:
        group = [r for r in results if r.mu == mu]
        at_max = max(group, key=lambda r: r.R)
        st = next((s for s in studies if s.mu == mu), None)
        summary["per_mu"][f"{mu:.17g}"] = {
            "M": at_max.S.shape[0],
            "unitarity_defect_at_max_R": at_max.unitarity_defect,
            "lambda_hat": None if st is None else st.lambda_hat,
            "two_gamma_hat": None if st is None else st.two_gamma_hat,
            "cond_E_range": [
                min(r.cond_E for r in group),
                max(r.cond_E for r in group),
            ],
            "min_eig_E_range": [
                min(r.min_eig_E for r in group),
                max(r.min_eig_E for r in group),
            ],
        }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    report.write_plot_script(outdir / "plots.gp")
    report.render_figures(outdir, results, studies)
    return EXIT_OK


def validate(cfg: RunConfig) -> int:
    """Dry run: everything ``run`` checks before the first solve."""
    try:
        scene = _load_scene(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _check_interval_thresholds(scene, cfg)
    except ThresholdProximityError as exc:
        print(f"threshold violation: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    print(f"scene '{scene.name}': {len(scene.ends)} ends, "
          f"{len(scene.obstacles)} obstacles; valid")
    for mu in cfg.mu_values:
        bases = scene_bases(scene, mu, cfg.threshold_guard)
        modes = enumerate_modes(bases, mu, cfg.threshold_guard)
        gamma = gamma_estimate(bases, mu)
        print(f"mu={mu:.17g}: M={len(modes)}, gamma_estimate={gamma:.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavescat",
        description="Waveguide scattering matrices by impedance truncation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--workers", type=int, default=None, help="worker processes")
        sp.add_argument("--output", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.output is not None:
        cfg = replace(cfg, output_dir=args.output)
    if args.command == "run":
        return run(cfg)
    return validate(cfg)


if __name__ == "__main__":
    sys.exit(main())
