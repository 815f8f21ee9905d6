"""Command-line front end: run repeated campaign comparisons, dump process
draws, and summarize trace directories into quartile tables.

All outputs are UTF-8 CSV with a header row.  Trace schema:
``run_id, step, x_1..x_d, y, y_best, bandwidth, scale_factor`` (the last two
empty during the initial design).  Summary schema:
``process, step, q25, q50, q75``.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bayesopt import (
    BandwidthGrid,
    CampaignConfig,
    CampaignTrace,
    run_campaign,
)
from .distributions import GAUSSIAN, STUDENT_T
from .kernels import KernelSpec
from .objectives import ObjectiveHandle, make_objective
from .processes import Dataset, ProcessModel, fit_surrogate, sample_posterior_paths, sample_prior_paths

TRACE_NAME_RE = re.compile(r"^trace_(?P<label>.+)_rep(?P<rep>\d+)\.csv$")

# Placeholder bandwidth for process specs; campaigns re-select it from data.
_DEFAULT_BANDWIDTH = 1.0


class ConfigError(Exception):
    """Experiment config is missing or malforms a field."""


class EmptyInput(Exception):
    """No trace files found to summarize."""


@dataclass
class ProcessVariant:
    label: str
    family: str
    nu: float | None = None

    def model(self, bandwidth: float = _DEFAULT_BANDWIDTH) -> ProcessModel:
        return ProcessModel(
            kernel=KernelSpec(bandwidth=bandwidth), family=self.family, nu=self.nu
        )


@dataclass
class ExperimentConfig:
    objective_spec: dict
    variants: list[ProcessVariant]
    repeats: int
    seed: int
    out_dir: str | None = None
    campaign_kwargs: dict = field(default_factory=dict)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def default_label(family: str, nu: float | None) -> str:
    if family == GAUSSIAN:
        return "gp"
    return f"stp_nu{nu:g}"


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config file (JSON, one experiment)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    obj = raw.get("objective")
    if not isinstance(obj, dict):
        raise ConfigError("missing or invalid field 'objective'")
    kind = obj.get("kind")
    if kind not in ("rosenbrock", "six_hump_camel", "external"):
        raise ConfigError("field 'objective.kind' must be rosenbrock, six_hump_camel, or external")
    if kind == "external":
        if "command" not in obj:
            raise ConfigError("missing field 'objective.command' (required for external)")
        if "bounds" not in obj:
            raise ConfigError("missing field 'objective.bounds' (required for external)")

    procs = raw.get("processes")
    if not isinstance(procs, list) or not procs:
        raise ConfigError("field 'processes' must be a nonempty list")
    variants = []
    for k, p in enumerate(procs):
        family = p.get("family")
        if family not in (GAUSSIAN, STUDENT_T):
            raise ConfigError(f"field 'processes[{k}].family' must be gaussian or student_t")
        nu = p.get("nu")
        if family == STUDENT_T and (nu is None or float(nu) <= 2):
            raise ConfigError(f"field 'processes[{k}].nu' must be > 2 for student_t")
        nu = None if family == GAUSSIAN else float(nu)
        variants.append(
            ProcessVariant(label=p.get("label", default_label(family, nu)), family=family, nu=nu)
        )
    if len({v.label for v in variants}) != len(variants):
        raise ConfigError("field 'processes' contains duplicate labels")

    repeats = raw.get("repeats", 20)
    if not isinstance(repeats, int) or repeats < 1:
        raise ConfigError("field 'repeats' must be a positive integer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("field 'seed' must be an integer")

    campaign = dict(raw.get("campaign", {}))
    grid = campaign.pop("bandwidth_grid", None)
    if grid is not None:
        campaign["bandwidth_grid"] = BandwidthGrid(
            log10_low=grid.get("log10_low", -3.0),
            log10_high=grid.get("log10_high", 3.0),
            points=grid.get("points", 11),
        )
    allowed = {
        "n_initial",
        "max_acquisitions",
        "max_evaluations",
        "renormalize_every",
        "stop_tolerance",
        "grid_points_per_dim",
        "candidate_pool",
        "refine",
        "refine_max_iter",
        "bandwidth_grid",
    }
    unknown = set(campaign) - allowed
    if unknown:
        raise ConfigError(f"unknown campaign field(s): {sorted(unknown)}")

    return ExperimentConfig(
        objective_spec=obj,
        variants=variants,
        repeats=repeats,
        seed=seed,
        out_dir=raw.get("out_dir"),
        campaign_kwargs=campaign,
    )


def build_objective(spec: dict) -> ObjectiveHandle:
    return make_objective(
        kind=spec["kind"],
        bounds=spec.get("bounds"),
        known_optimum=spec.get("known_optimum"),
        command=spec.get("command"),
        timeout=spec.get("timeout", 600.0),
    )


def derive_seed(master_seed: int, repeat: int) -> int:
    """Stable per-repeat seed; shared across process variants so that every
    variant of a repeat starts from the identical initial design."""
    return int(np.random.SeedSequence(entropy=[master_seed, repeat]).generate_state(1)[0])


def write_trace_csv(path: Path, run_id: str, trace: CampaignTrace) -> None:
    d = trace.records[0].x.size
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["run_id", "step"]
            + [f"x_{j + 1}" for j in range(d)]
            + ["y", "y_best", "bandwidth", "scale_factor"]
        )
        for r in trace.records:
            writer.writerow(
                [run_id, r.step]
                + [_fmt(v) for v in r.x]
                + [_fmt(r.y), _fmt(r.y_best), _fmt(r.bandwidth), _fmt(r.scale_factor)]
            )


def _run_one(task: dict) -> str:
    """Worker entry: run a single campaign and write its trace file."""
    objective = build_objective(task["objective_spec"])
    variant = ProcessVariant(**task["variant"])
    config = CampaignConfig(
        process=variant.model(),
        optimum_value=objective.known_optimum,
        seed=task["seed"],
        **task["campaign_kwargs"],
    )
    trace = run_campaign(objective, config)
    out_path = Path(task["out_path"])
    write_trace_csv(out_path, task["run_id"], trace)
    return str(out_path)


def run_experiment(config: ExperimentConfig, out_dir: Path, jobs: int = 1) -> list[Path]:
    """Run every (variant, repeat) campaign and write traces plus a summary."""
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for variant in config.variants:
        for rep in range(config.repeats):
            tasks.append(
                {
                    "objective_spec": config.objective_spec,
                    "variant": {"label": variant.label, "family": variant.family, "nu": variant.nu},
                    "campaign_kwargs": config.campaign_kwargs,
                    "seed": derive_seed(config.seed, rep),
                    "run_id": f"{variant.label}-rep{rep:03d}",
                    "out_path": str(out_dir / f"trace_{variant.label}_rep{rep:03d}.csv"),
                }
            )
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                paths = list(pool.map(_run_one, tasks))
        else:
            paths = [_run_one(t) for t in tasks]
    except KeyboardInterrupt:
        print(f"interrupted; completed traces remain under {out_dir}", file=sys.stderr)
        raise

    objective = build_objective(config.objective_spec)
    floor = config.campaign_kwargs.get("stop_tolerance", 1e-4)
    rows = summarize_traces(out_dir, optimum=objective.known_optimum, floor=floor)
    summary_path = out_dir / "summary.csv"
    write_summary_csv(summary_path, rows)
    return [Path(p) for p in paths] + [summary_path]


def read_trace_best(path: Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return np.array([float(row["y_best"]) for row in reader])


def summarize_traces(
    trace_dir: str | Path, optimum: float | None = None, floor: float = 1e-4
) -> list[tuple[str, int, float, float, float]]:
    """Per-step quartiles of the log10 regret statistic across runs.

    Regret is ``y_best - optimum`` when the optimum is known, else ``y_best``
    itself, floored at ``floor`` before taking log10.  Runs shorter than the
    longest one carry their final incumbent forward.
    """
    trace_dir = Path(trace_dir)
    by_label: dict[str, list[np.ndarray]] = {}
    for path in sorted(trace_dir.iterdir()):
        m = TRACE_NAME_RE.match(path.name)
        if m:
            by_label.setdefault(m.group("label"), []).append(read_trace_best(path))
    if not by_label:
        raise EmptyInput(f"no trace files matching trace_*_rep*.csv under {trace_dir}")

    max_len = max(len(seq) for seqs in by_label.values() for seq in seqs)
    rows = []
    for label in sorted(by_label):
        padded = np.vstack(
            [np.append(seq, np.full(max_len - len(seq), seq[-1])) for seq in by_label[label]]
        )
        ref = padded - optimum if optimum is not None else padded
        stat = np.log10(np.maximum(ref, floor))
        q25, q50, q75 = np.percentile(stat, [25, 50, 75], axis=0)
        for step in range(max_len):
            rows.append((label, step, float(q25[step]), float(q50[step]), float(q75[step])))
    return rows


def write_summary_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["process", "step", "q25", "q50", "q75"])
        for label, step, q25, q50, q75 in rows:
            writer.writerow([label, step, _fmt(q25), _fmt(q50), _fmt(q75)])


def read_dataset_csv(path: str | Path) -> Dataset:
    """Observation file: header row, a 'y' column, remaining columns are inputs."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "y" not in reader.fieldnames:
            raise ConfigError(f"data file {path} needs a 'y' column")
        x_cols = [c for c in reader.fieldnames if c != "y"]
        xs, ys = [], []
        for row in reader:
            xs.append([float(row[c]) for c in x_cols])
            ys.append(float(row["y"]))
    return Dataset(np.array(xs), np.array(ys))


def write_draws_csv(
    path: Path,
    grid: np.ndarray,
    mean: np.ndarray,
    std: np.ndarray,
    paths_matrix: np.ndarray,
) -> None:
    n_pts = grid.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series"] + [f"g{i}" for i in range(n_pts)])
        writer.writerow(["grid"] + [_fmt(v) for v in grid[:, 0]])
        writer.writerow(["mean"] + [_fmt(v) for v in mean])
        writer.writerow(["lower2sd"] + [_fmt(v) for v in mean - 2.0 * std])
        writer.writerow(["upper2sd"] + [_fmt(v) for v in mean + 2.0 * std])
        for k, row in enumerate(paths_matrix):
            writer.writerow([f"draw_{k:04d}"] + [_fmt(v) for v in row])


def cmd_run(args) -> int:
    config = load_experiment_config(args.config)
    if args.repeats is not None:
        config.repeats = args.repeats
    if args.seed is not None:
        config.seed = args.seed
    out_dir = Path(args.out or config.out_dir or "results")
    paths = run_experiment(config, out_dir, jobs=args.jobs)
    print(f"wrote {len(paths) - 1} trace files and {paths[-1]}")
    return 0


def cmd_sample(args) -> int:
    nu = args.nu if args.family == STUDENT_T else None
    model = ProcessModel(
        kernel=KernelSpec(bandwidth=args.bandwidth), family=args.family, nu=nu
    )
    grid = np.linspace(args.grid_low, args.grid_high, args.grid_points)[:, None]
    rng = np.random.default_rng(args.seed)
    if args.data is not None:
        data = read_dataset_csv(args.data)
        post = fit_surrogate(model, data).joint(grid)
        mean = post.mu
        scale = np.sqrt(np.clip(np.diag(post.shape), 0.0, None))
        if model.family == STUDENT_T:
            std = scale * np.sqrt(post.nu_hat / (post.nu_hat - 2.0))
        else:
            std = scale
        draws = sample_posterior_paths(model, data, grid, args.draws, rng)
    else:
        mean = np.zeros(grid.shape[0])
        std = np.ones(grid.shape[0])  # prior covariance diagonal is k(x, x) = 1
        draws = sample_prior_paths(model, grid, args.draws, rng)
    write_draws_csv(Path(args.out), grid, mean, std, draws)
    print(f"wrote {args.draws} draws over {grid.shape[0]} grid points to {args.out}")
    return 0


def cmd_summarize(args) -> int:
    rows = summarize_traces(args.traces, optimum=args.optimum, floor=args.floor)
    out = Path(args.out)
    write_summary_csv(out, rows)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpbo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured campaign comparison")
    run.add_argument("--config", required=True, help="experiment config JSON")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--seed", type=int, default=None, help="master seed override")
    run.add_argument("--repeats", type=int, default=None, help="repeat count override")
    run.add_argument("--jobs", type=int, default=1, help="parallel campaign workers")
    run.set_defaults(func=cmd_run)

    sample = sub.add_parser("sample", help="dump prior or posterior draws on a 1-D grid")
    sample.add_argument("--family", choices=[GAUSSIAN, STUDENT_T], default=GAUSSIAN)
    sample.add_argument("--nu", type=float, default=5.0)
    sample.add_argument("--bandwidth", type=float, default=1.0)
    sample.add_argument("--grid-low", type=float, default=-5.0)
    sample.add_argument("--grid-high", type=float, default=5.0)
    sample.add_argument("--grid-points", type=int, default=201)
    sample.add_argument("--draws", type=int, default=300)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--data", default=None, help="observation CSV for posterior mode")
    sample.add_argument("--out", required=True, help="output CSV path")
    sample.set_defaults(func=cmd_sample)

    summ = sub.add_parser("summarize", help="quartile summary of a trace directory")
    summ.add_argument("--traces", required=True, help="directory of trace CSVs")
    summ.add_argument("--out", required=True, help="summary CSV path")
    summ.add_argument("--optimum", type=float, default=None, help="known optimum value")
    summ.add_argument("--floor", type=float, default=1e-4, help="regret floor before log10")
    summ.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
