"""Seeded benchmark harness comparing recovery against the EM baseline.

Sweeps one variable (noise variance, dimensionality, or sample count)
with everything else fixed, runs seeded trials per value and method, and
writes a results table plus per-sweep plot data. Per-trial seeds are
derived by hashing (sweep value, trial, method) into the base seed, so
trials are independent jobs and the output is identical however they are
scheduled; worker parallelism is capped by the ``SCFM_THREADS``
environment variable.

Timed work is the learning stage only (clustering plus dictionary
recovery for the proposed method, the EM fit for the baseline); data
generation and I/O are excluded. Failed trials (for example cluster
degeneracy at high noise) become rows flagged ``failed`` and are excluded
from the aggregate means, with a failure-rate footnote row per cell.
"""

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import ClusterOptions, estimate_combinations
from .em import EMConfig, em_fit
from .exceptions import DegenerateClusters, InvalidConfig, ScfmError
from .generate import GeneratorConfig, IID, generate_dataset
from .metrics import dictionary_error
from .recovery import RecoveryOptions, learn_emissions
from .types import ModelShape

SWEEP_VARIABLES = ("sigma2", "L", "T")
METHODS = ("proposed", "em")
RESULT_COLUMNS = (
    "method", "sweep_var", "sweep_value", "trial",
    "dict_error", "dict_error_norm", "runtime_s", "failed", "diag_json",
)


@dataclass
class BenchmarkConfig:
    """Sweep definition; see docs/bench-config.md for the JSON schema."""

    sweep_variable: str
    sweep_values: list
    output_dir: str
    fixed: dict = field(default_factory=dict)
    trials: int = 50
    methods: tuple = METHODS
    seed_base: int = 0
    M: int = 3
    K: int = 2
    dictionary_variance: float = 10.0
    chain_type: str = IID
    cluster_restarts: int = 20
    em_restarts: int = 10
    em_max_iters: int = 200
    generator_max_retries: int = 5000
    plot: bool = True

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise InvalidConfig(
                f"sweep_variable must be one of {SWEEP_VARIABLES}, "
                f"got {self.sweep_variable!r}"
            )
        if not self.sweep_values:
            raise InvalidConfig("sweep_values must be nonempty")
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise InvalidConfig(f"methods must be a nonempty subset of {METHODS}")
        defaults = {"L": 50, "T": 200, "sigma2": 0.5}
        unknown_fixed = set(self.fixed) - set(defaults)
        if unknown_fixed:
            raise InvalidConfig(f"unknown fixed keys: {sorted(unknown_fixed)}")
        self.fixed = {**defaults, **self.fixed}

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise InvalidConfig(f"unknown benchmark config keys: {sorted(unknown)}")
        return cls(**raw)

    def settings_for(self, sweep_value):
        values = dict(self.fixed)
        values[self.sweep_variable] = sweep_value
        return values


@dataclass
class TrialResult:
    method: str
    sweep_value: float
    trial: int
    dictionary_error: float
    dictionary_error_norm: float
    runtime_seconds: float
    failed: bool
    diagnostics: dict


def trial_seed(seed_base, sweep_value, trial, method):
    """Stable 63-bit seed mixing the trial coordinates into the base seed."""
    key = f"{sweep_value!r}|{trial}|{method}".encode()
    digest = hashlib.sha256(key).digest()
    mixed = int.from_bytes(digest[:8], "big") ^ int(seed_base)
    return mixed & ((1 << 63) - 1)


def _run_proposed(data, shape, config):
    t0 = time.perf_counter()
    clusters = estimate_combinations(
        data.X, shape, ClusterOptions(restarts=config.cluster_restarts, seed=0)
    )
    if clusters.quality.missing_combinations > 0:
        raise DegenerateClusters(
            f"{clusters.quality.missing_combinations} combinations missing"
        )
    recovered = learn_emissions(clusters.centers, shape, RecoveryOptions())
    runtime = time.perf_counter() - t0
    diag = {
        "cluster_separation_ratio": clusters.quality.separation_ratio,
        "cluster_missing": clusters.quality.missing_combinations,
        "tie_margin": recovered.provenance["tie_margin"],
        "generator_retries": data.retries,
    }
    return recovered.O_hat, runtime, diag


def _run_em(data, shape, config, seed):
    em_config = EMConfig(
        restarts=config.em_restarts, max_iters=config.em_max_iters, seed=seed
    )
    t0 = time.perf_counter()
    result = em_fit(data.X, shape, em_config)
    runtime = time.perf_counter() - t0
    violations = 0
    for trace in result.restart_traces:
        arr = np.asarray(trace)
        slack = 1e-9 * np.maximum(1.0, np.abs(arr[:-1]))
        violations += int(np.sum(arr[1:] < arr[:-1] - slack))
    diag = {
        "em_best_restart": result.best_restart,
        "em_iterations": len(result.loglik_trace),
        "em_monotone_violations": violations,
        "em_ridge_used": result.ridge_used,
        "generator_retries": data.retries,
    }
    return result.emission, runtime, diag


def run_trial(config, sweep_value, trial, method):
    """One seeded generation plus one method execution."""
    settings = config.settings_for(sweep_value)
    seed = trial_seed(config.seed_base, sweep_value, trial, method)
    shape = ModelShape(L=int(settings["L"]), M=config.M, K=config.K)
    gen = GeneratorConfig(
        shape=shape,
        dictionary_variance=config.dictionary_variance,
        noise_variance=float(settings["sigma2"]),
        T=int(settings["T"]),
        chain_type=config.chain_type,
        seed=seed,
        max_retries=config.generator_max_retries,
    )
    try:
        data = generate_dataset(gen)
        if method == "proposed":
            emission, runtime, diag = _run_proposed(data, shape, config)
        else:
            emission, runtime, diag = _run_em(data, shape, config, seed)
        err = dictionary_error(emission, data.emission)
        scale = float(np.linalg.norm(data.emission.full))
        return TrialResult(
            method=method, sweep_value=sweep_value, trial=trial,
            dictionary_error=err, dictionary_error_norm=err / scale,
            runtime_seconds=runtime, failed=False, diagnostics=diag,
        )
    except ScfmError as exc:
        return TrialResult(
            method=method, sweep_value=sweep_value, trial=trial,
            dictionary_error=float("nan"), dictionary_error_norm=float("nan"),
            runtime_seconds=float("nan"), failed=True,
            diagnostics={"error": type(exc).__name__, "message": str(exc)},
        )


def _worker_count():
    raw = os.environ.get("SCFM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_benchmark(config):
    """Run the sweep and write results.csv, plot data and (optionally) an SVG.

    Returns the list of :class:`TrialResult` rows in deterministic order.
    """
    jobs = [
        (value, trial, method)
        for value in config.sweep_values
        for trial in range(config.trials)
        for method in config.methods
    ]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: run_trial(config, *j), jobs))
    else:
        results = [run_trial(config, *job) for job in jobs]
    order = {job: i for i, job in enumerate(jobs)}
    results.sort(key=lambda r: order[(r.sweep_value, r.trial, r.method)])

    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_results_csv(outdir / "results.csv", config, results)
    summary = aggregate(config, results)
    write_plot_csv(outdir / f"plot_{config.sweep_variable}.csv", config, summary)
    if config.plot:
        write_plot_svg(outdir / f"plot_{config.sweep_variable}.svg", config, summary)
    return results


def aggregate(config, results):
    """Mean/stderr of the error metrics per (method, sweep value), failures excluded."""
    summary = {}
    for method in config.methods:
        for value in config.sweep_values:
            rows = [r for r in results if r.method == method and r.sweep_value == value]
            ok = [r for r in rows if not r.failed]
            cell = {"n_trials": len(rows), "n_failed": len(rows) - len(ok)}
            cell["failure_rate"] = (len(rows) - len(ok)) / len(rows) if rows else 0.0
            for key, attr in (
                ("dict_error", "dictionary_error"),
                ("dict_error_norm", "dictionary_error_norm"),
                ("runtime_s", "runtime_seconds"),
            ):
                vals = np.array([getattr(r, attr) for r in ok])
                if vals.size:
                    cell[f"{key}_mean"] = float(vals.mean())
                    cell[f"{key}_stderr"] = (
                        float(vals.std(ddof=1) / np.sqrt(vals.size))
                        if vals.size > 1 else 0.0
                    )
                else:
                    cell[f"{key}_mean"] = float("nan")
                    cell[f"{key}_stderr"] = float("nan")
            summary[(method, value)] = cell
    return summary


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_results_csv(path, config, results):
    """Trial rows plus one ``aggregate`` row per (method, sweep value).

    Aggregate rows carry the failure-excluded means in the metric columns,
    the failure rate in the ``failed`` column, and standard errors plus
    counts in ``diag_json`` (runtime statistics stay out of ``diag_json``
    so that everything except the ``runtime_s`` column is reproducible).
    """
    summary = aggregate(config, results)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow([
                r.method, config.sweep_variable, _fmt(r.sweep_value), r.trial,
                _fmt(r.dictionary_error), _fmt(r.dictionary_error_norm),
                _fmt(r.runtime_seconds), int(r.failed),
                json.dumps(r.diagnostics, sort_keys=True),
            ])
        def finite_or_none(x):
            return x if np.isfinite(x) else None

        for (method, value), cell in summary.items():
            writer.writerow([
                method, config.sweep_variable, _fmt(value), "aggregate",
                _fmt(cell["dict_error_mean"]), _fmt(cell["dict_error_norm_mean"]),
                _fmt(cell["runtime_s_mean"]), _fmt(cell["failure_rate"]),
                json.dumps({
                    "dict_error_stderr": finite_or_none(cell["dict_error_stderr"]),
                    "dict_error_norm_stderr": finite_or_none(
                        cell["dict_error_norm_stderr"]
                    ),
                    "n_trials": cell["n_trials"],
                    "n_failed": cell["n_failed"],
                }, sort_keys=True),
            ])


def write_plot_csv(path, config, summary):
    header = ["sweep_value"]
    for method in config.methods:
        header += [f"{method}_mean", f"{method}_stderr"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for value in config.sweep_values:
            row = [_fmt(value)]
            for method in config.methods:
                cell = summary[(method, value)]
                row += [_fmt(cell["dict_error_mean"]), _fmt(cell["dict_error_stderr"])]
            writer.writerow(row)


_SVG_COLORS = {"proposed": "#1f77b4", "em": "#d62728"}


def write_plot_svg(path, config, summary, width=640, height=420):
    """Minimal line plot with error bars; no plotting dependency."""
    margin = 60
    xs = [float(v) for v in config.sweep_values]
    series = {}
    for method in config.methods:
        pts = []
        for value in config.sweep_values:
            cell = summary[(method, value)]
            if np.isfinite(cell["dict_error_mean"]):
                pts.append((float(value), cell["dict_error_mean"],
                            cell["dict_error_stderr"]))
        series[method] = pts
    ys = [p[1] + p[2] for pts in series.values() for p in pts]
    ys += [max(p[1] - p[2], 0.0) for pts in series.values() for p in pts]
    if not ys:
        ys = [0.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys + [0.0]), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 15}" text-anchor="middle" '
        f'font-size="13">{config.sweep_variable}</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {height / 2:.1f})">dictionary error</text>',
    ]
    for x in xs:
        parts.append(
            f'<text x="{sx(x):.1f}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-size="11">{x:g}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        y = y_lo + frac * (y_hi - y_lo)
        parts.append(
            f'<text x="{margin - 8}" y="{sy(y) + 4:.1f}" text-anchor="end" '
            f'font-size="11">{y:.3g}</text>'
        )
    legend_y = margin
    for method, pts in series.items():
        color = _SVG_COLORS.get(method, "#555555")
        if pts:
            path_d = " ".join(f"{sx(x):.1f},{sy(m):.1f}" for x, m, _ in pts)
            parts.append(
                f'<polyline points="{path_d}" fill="none" stroke="{color}" '
                'stroke-width="2"/>'
            )
            for x, m, se in pts:
                parts.append(
                    f'<line x1="{sx(x):.1f}" y1="{sy(m - se):.1f}" x2="{sx(x):.1f}" '
                    f'y2="{sy(m + se):.1f}" stroke="{color}" stroke-width="1"/>'
                )
                parts.append(
                    f'<circle cx="{sx(x):.1f}" cy="{sy(m):.1f}" r="3" fill="{color}"/>'
                )
        parts.append(
            f'<rect x="{width - margin - 110}" y="{legend_y}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{width - margin - 92}" y="{legend_y + 11}" '
            f'font-size="12">{method}</text>'
        )
        legend_y += 20
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
