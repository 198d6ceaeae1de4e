"""Command-line interface: convert, evaluate, selftest.

Every run resolves one RunConfig from, in increasing precedence: built-in
defaults, the JSON file named by the C2G_CONFIG environment variable, the
JSON file given with --config, and explicit flags. The first stdout line of
every run is the fully resolved config as one JSON object; feeding that line
back through --config reproduces the run exactly. The echoed object carries a
derived, read-only "scales_px" entry so the effective band scales are visible
without recomputing the viewing geometry; it is ignored on load.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error (missing
inputs, unreadable images, refusing to overwrite), 3 numerical failure
(solver stall, or a failed selftest property). Fatal errors print one
machine-readable stderr line of the form ``c2g-error {json}``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorspace import _srgb_decode, _srgb_encode, gray_to_rgb, load_rgb, save_png, srgb_to_lab
from .contrast import ContrastConfig, config_from_viewing
from .energy import EnergyParams, total_energy
from .metrics import CSV_HEADER, full_report
from .selftest import run_selftest
from .solver import SolverConfig, SolverError, solve_l1, solve_l2

ENV_CONFIG = "C2G_CONFIG"
METHODS = ("ours-l2", "ours-l1", "cie-y", "l-channel")
_IMAGE_EXTS = (".png", ".jpg", ".jpeg")


class CliError(Exception):
    """Base for errors that map straight to an exit code."""

    exit_code = 1
    kind = "usage"


class UsageError(CliError):
    exit_code = 1
    kind = "usage"


class InputOutputError(CliError):
    exit_code = 2
    kind = "io"


class NumericalError(CliError):
    exit_code = 3
    kind = "numerical"


class _Parser(argparse.ArgumentParser):
    # route argparse's own failures through the usual exit-code machinery
    def error(self, message):
        raise UsageError(message)


def _warn(message: str):
    print(f"c2g: warning: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Viewing geometry plus energy and solver settings for one run."""

    dpi: float = 72.0
    distance_cm: float = 60.0
    energy: EnergyParams = field(default_factory=EnergyParams)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def contrast(self) -> ContrastConfig:
        return config_from_viewing(self.dpi, self.distance_cm)

    def to_dict(self) -> dict:
        return {
            "viewing": {"dpi": self.dpi, "distance_cm": self.distance_cm},
            "energy": dataclasses.asdict(self.energy),
            "solver": dataclasses.asdict(self.solver),
            "scales_px": list(self.contrast().scales),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        viewing = d.get("viewing", {})
        return cls(
            dpi=float(viewing.get("dpi", 72.0)),
            distance_cm=float(viewing.get("distance_cm", 60.0)),
            energy=EnergyParams(**d.get("energy", {})),
            solver=SolverConfig(**d.get("solver", {})),
        )


_ALLOWED_KEYS = {
    None: {"viewing", "energy", "solver", "scales_px"},
    "viewing": {"dpi", "distance_cm"},
    "energy": {"alpha_l", "alpha_ab", "epsilon", "norm"},
    "solver": {"cg_tol", "cg_max_iters", "irls_iters", "irls_tol", "clamp_output"},
}


def _check_keys(d: dict, section, source: str):
    allowed = _ALLOWED_KEYS[section]
    for key in d:
        if key not in allowed:
            where = f"{source} section {section!r}" if section else source
            raise UsageError(f"unknown config key {key!r} in {where}")
        if section is None and key in ("viewing", "energy", "solver"):
            if not isinstance(d[key], dict):
                raise UsageError(f"config key {key!r} in {source} must be an object")
            _check_keys(d[key], key, source)


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise InputOutputError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    _check_keys(data, None, path)
    data.pop("scales_px", None)
    return data


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(args) -> RunConfig:
    """Fold defaults, env config, --config and flags into one RunConfig."""
    merged: dict = {}
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        merged = _merge(merged, _load_config_file(env_path))
    if getattr(args, "config", None):
        merged = _merge(merged, _load_config_file(args.config))

    flags: dict = {"viewing": {}, "energy": {}}
    if getattr(args, "dpi", None) is not None:
        flags["viewing"]["dpi"] = args.dpi
    if getattr(args, "distance_cm", None) is not None:
        flags["viewing"]["distance_cm"] = args.distance_cm
    for name in ("alpha_l", "alpha_ab", "epsilon", "norm"):
        value = getattr(args, name, None)
        if value is not None:
            flags["energy"][name] = value
    merged = _merge(merged, flags)

    try:
        return RunConfig.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}")


def _echo_config(rc: RunConfig):
    print(json.dumps(rc.to_dict(), sort_keys=True, separators=(",", ":")))
    sys.stdout.flush()


# ---------------------------------------------------------------------------
# gray candidates


def _solve_gray(img: np.ndarray, rc: RunConfig, norm: str) -> np.ndarray:
    lab = srgb_to_lab(img)
    params = dataclasses.replace(rc.energy, norm=norm)
    if norm == "l1":
        return solve_l1(lab, rc.contrast(), params, rc.solver)
    return solve_l2(lab, rc.contrast(), params, rc.solver)


def _cie_y_gray(img: np.ndarray) -> np.ndarray:
    """Rec.709 luma of linear light, re-encoded as an 8-bit gray image."""
    lin = _srgb_decode(np.asarray(img, dtype=np.float64) / 255.0)
    y = 0.2126 * lin[..., 0] + 0.7152 * lin[..., 1] + 0.0722 * lin[..., 2]
    v = np.clip(np.rint(255.0 * _srgb_encode(y)), 0, 255).astype(np.uint8)
    return np.repeat(v[:, :, None], 3, axis=2)


def _method_gray_field(method: str, img: np.ndarray, rc: RunConfig) -> np.ndarray:
    """The lightness field a method is scored on.

    Every generated candidate is rendered to its 8-bit gray image first and
    the decoded lightness of those bytes is scored, so built-in methods face
    exactly the same quantization as gray files supplied on disk.
    """
    if method == "ours-l2":
        rendered = gray_to_rgb(_solve_gray(img, rc, "l2"))
    elif method == "ours-l1":
        rendered = gray_to_rgb(_solve_gray(img, rc, "l1"))
    elif method == "l-channel":
        rendered = gray_to_rgb(srgb_to_lab(img).L)
    elif method == "cie-y":
        rendered = _cie_y_gray(img)
    else:
        raise UsageError(f"unknown method {method!r}")
    return srgb_to_lab(rendered).L


# ---------------------------------------------------------------------------
# convert


def _convert_targets(inputs: list[Path], out: str | None, overwrite: bool) -> list[Path]:
    if out is None:
        targets = [p.with_name(p.stem + "_gray.png") for p in inputs]
    else:
        out_path = Path(out)
        as_file = out_path.suffix.lower() == ".png" and not out_path.is_dir()
        if as_file:
            if len(inputs) > 1:
                raise UsageError("--out must be a directory when converting multiple inputs")
            targets = [out_path]
        else:
            targets = [out_path / (p.stem + ".png") for p in inputs]
    seen: dict = {}
    for src, dst in zip(inputs, targets):
        if dst in seen:
            raise UsageError(f"inputs {seen[dst]} and {src} map to the same output {dst}")
        seen[dst] = src
    if not overwrite:
        existing = [str(t) for t in targets if t.exists()]
        if existing:
            raise InputOutputError(
                f"output exists, pass --overwrite to replace: {', '.join(existing)}"
            )
    return targets


def cmd_convert(args) -> int:
    rc = resolve_config(args)
    _echo_config(rc)

    inputs = [Path(p) for p in args.inputs]
    missing = [str(p) for p in inputs if not p.is_file()]
    if missing:
        raise InputOutputError(f"input not found: {', '.join(missing)}")
    targets = _convert_targets(inputs, args.out, args.overwrite)

    def work(path: Path):
        img = load_rgb(path)
        lab = srgb_to_lab(img)
        cc = rc.contrast()
        if rc.energy.norm == "l1":
            g = solve_l1(lab, cc, rc.energy, rc.solver)
        else:
            g = solve_l2(lab, cc, rc.energy, rc.solver)
        return gray_to_rgb(g), total_energy(g, lab, cc, rc.energy)

    results = _run_jobs(work, inputs, args.jobs)

    for src, dst, (gray, breakdown) in zip(inputs, targets, results):
        dst.parent.mkdir(parents=True, exist_ok=True)
        save_png(dst, gray)
        line = {"input": str(src), "output": str(dst), "energy": breakdown.to_dict()}
        print(json.dumps(line, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _list_images(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise InputOutputError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_EXTS)


def _find_gray(gray_dir: Path, stem: str) -> Path | None:
    for ext in _IMAGE_EXTS:
        candidate = gray_dir / (stem + ext)
        if candidate.is_file():
            return candidate
    return None


def _prepare_report_path(path: str, overwrite: bool) -> Path:
    p = Path(path)
    if p.exists() and not overwrite:
        raise InputOutputError(f"output exists, pass --overwrite to replace: {p}")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def cmd_evaluate(args) -> int:
    rc = resolve_config(args)
    _echo_config(rc)

    if bool(args.gray) == bool(args.method):
        raise UsageError("evaluate needs exactly one of --gray or --method")

    color_paths = _list_images(Path(args.colors))
    if not color_paths:
        raise InputOutputError(f"no images found in {args.colors}")
    csv_path = _prepare_report_path(args.csv, args.overwrite)
    json_path = _prepare_report_path(args.json, args.overwrite)

    if args.gray:
        gray_dir = Path(args.gray)
        if not gray_dir.is_dir():
            raise InputOutputError(f"not a directory: {gray_dir}")
        methods = ["external"]
    else:
        methods = sorted(set(args.method))

    tasks = []  # (method, image_id, color_path)
    for method in methods:
        for path in color_paths:
            tasks.append((method, path.stem, path))

    cc = rc.contrast()

    def work(task):
        method, image_id, path = task
        img = load_rgb(path)
        lab = srgb_to_lab(img)
        if method == "external":
            gray_path = _find_gray(Path(args.gray), path.stem)
            if gray_path is None:
                return ("skip", f"no gray counterpart for {path.stem}")
            g = srgb_to_lab(load_rgb(gray_path)).L
            if g.shape != lab.shape:
                return ("skip", f"{gray_path.name} shape {g.shape} != color {lab.shape}")
        else:
            g = _method_gray_field(method, img, rc)
        return ("ok", full_report(lab, g, cc, rc.energy, image_id=image_id))

    outcomes = _run_jobs_safe(work, tasks, args.jobs)

    csv_lines = [CSV_HEADER]
    aggregate: dict = {}
    skipped = []
    numeric_failures = 0
    for (method, image_id, _), outcome in zip(tasks, outcomes):
        status, payload = outcome
        if status == "ok":
            csv_lines.extend(payload.csv_rows(method))
            aggregate.setdefault(method, []).append(payload)
        elif status == "skip":
            skipped.append({"method": method, "image_id": image_id, "reason": payload})
            _warn(f"skipping {image_id} [{method}]: {payload}")
        else:
            numeric_failures += 1
            skipped.append({"method": method, "image_id": image_id, "reason": payload})
            _warn(f"failed {image_id} [{method}]: {payload}")

    scored = sum(len(v) for v in aggregate.values())
    if scored == 0:
        if numeric_failures:
            raise NumericalError("no image was scored; all solver runs failed")
        raise InputOutputError("no image was scored")

    summary = {"scales_px": list(cc.scales), "methods": {}, "skipped": skipped}
    for method, reports in aggregate.items():
        means = [
            float(np.mean([r.per_scale[i].pscore for r in reports]))
            for i in range(len(cc.scales))
        ]
        summary["methods"][method] = {
            "images": len(reports),
            "mean_pscore": means,
        }

    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    json_path.write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {csv_path} ({len(csv_lines) - 1} rows) and {json_path}")
    return 0


# ---------------------------------------------------------------------------
# selftest


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        h, w = (int(p) for p in parts)
    except ValueError:
        raise UsageError(f"--size must look like 8x8, got {text!r}")
    if h < 2 or w < 2:
        raise UsageError(f"--size must be at least 2x2, got {text!r}")
    return h, w


def cmd_selftest(args) -> int:
    rc = resolve_config(args)
    _echo_config(rc)
    size = _parse_size(args.size)
    ok = run_selftest(rc.contrast(), rc.energy, size=size, seed=args.seed)
    if not ok:
        raise NumericalError("selftest failed; see FAIL lines above")
    print("selftest passed")
    return 0


# ---------------------------------------------------------------------------
# job running


def _run_jobs(work, items, jobs):
    """Map work over items, preserving item order in the results."""
    if jobs is not None and jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")
    if jobs == 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs or os.cpu_count()) as pool:
        futures = [pool.submit(work, item) for item in items]
        return [f.result() for f in futures]


def _run_jobs_safe(work, items, jobs):
    """Like _run_jobs but turns per-item failures into ('fail', reason)."""

    def guarded(item):
        try:
            return work(item)
        except SolverError as exc:
            return ("fail", str(exc))

    return _run_jobs(guarded, items, jobs)


# ---------------------------------------------------------------------------
# parser and entry point


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="JSON", help="JSON config file (see config echo)")
    p.add_argument("--dpi", type=float, help="display pixel density (default 72)")
    p.add_argument("--distance-cm", type=float, dest="distance_cm",
                   help="viewing distance in cm (default 60)")
    p.add_argument("--alpha-l", type=float, dest="alpha_l",
                   help="lightness-contrast weight (default 0.5)")
    p.add_argument("--alpha-ab", type=float, dest="alpha_ab",
                   help="chroma-contrast weight (default 1.5)")
    p.add_argument("--epsilon", type=float, help="brightness-weight regulator (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="c2g", description="Contrast-preserving color-to-gray conversion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[], help="convert color images to gray PNGs")
    p.add_argument("inputs", nargs="+", metavar="IMAGE", help="input PNG/JPEG files")
    p.add_argument("--out", metavar="PATH",
                   help="output PNG file (single input) or directory; "
                        "default: <input>_gray.png beside each input")
    p.add_argument("--norm", choices=("l1", "l2"), help="energy norm (default l2)")
    p.add_argument("--overwrite", action="store_true", help="replace existing outputs")
    p.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("evaluate", help="score gray renderings against color originals")
    p.add_argument("colors", metavar="COLOR_DIR", help="directory of color images")
    p.add_argument("--gray", metavar="DIR",
                   help="directory of gray renderings matched by file stem")
    p.add_argument("--method", action="append", choices=METHODS,
                   help="built-in method to generate and score (repeatable)")
    p.add_argument("--csv", default="evaluation.csv", metavar="PATH",
                   help="per-scale scores table (default evaluation.csv)")
    p.add_argument("--json", default="evaluation.json", metavar="PATH",
                   help="aggregate summary (default evaluation.json)")
    p.add_argument("--overwrite", action="store_true", help="replace existing reports")
    p.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("selftest", help="run built-in numerical checks")
    p.add_argument("--size", default="8x8", help="check size as ROWSxCOLS (default 8x8)")
    p.add_argument("--seed", type=int, default=0, help="probe RNG seed (default 0)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_selftest)

    return parser


def _emit_error(exit_code: int, kind: str, message: str):
    payload = {"exit": exit_code, "kind": kind, "message": message}
    print("c2g-error " + json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        _emit_error(exc.exit_code, exc.kind, str(exc))
        return exc.exit_code
    except SolverError as exc:
        _emit_error(3, "numerical", str(exc))
        return 3
    except ValueError as exc:
        _emit_error(1, "usage", str(exc))
        return 1
    except OSError as exc:
        _emit_error(2, "io", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
