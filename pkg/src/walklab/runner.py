"""Replica scheduling, presets, deterministic aggregation, and output.

Every replica is a pure function of (config, replica index): replica r of
every (epsilon, n) group draws from the stream (master_seed, r).  Workers
return per-replica summaries only; the final aggregate is an ordered fold
over group and replica index, so outputs are byte-identical regardless of
worker count.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction

from .config import ConfigError, ExperimentConfig
from .lattice import InitialRegion
from .rng import RngSpec
from .stats import (EnsembleSummary, ExponentFit, RunSummary,
                    bernoulli_tail_bound, envelope_violations, exact_binomial_tail,
                    exponent_fit, gap_audit, windowed_progress)
from .tanpoints import count_tan_points
from .util import ARTIFACT_NAME, ARTIFACT_VERSION, ceil_pow, clamped_log, fmt_float
from .walks import (WalkParams, dyadic_epsilon, run_coupled, run_erw_detailed,
                    run_srw)

PER_REPLICA_HEADER = ("replica,epsilon,n,final_x,final_y,fresh_visits,"
                      "gap_final,tan_count,envelope_max_ratio,progress_min")
AGGREGATE_HEADER = "metric,count,mean,stderr,ci_low,ci_high,min,max"
EXPONENT_HEADER = "metric,slope,intercept,r_squared,points"

# aggregate CI half-width in standard errors
CI_SIGMA = 3.0

_LEMMA_B_KS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ReplicaResult:
    group: int
    replica: int
    summary: RunSummary
    metrics: dict[str, float]


@dataclass(frozen=True)
class ExperimentResult:
    version: str
    timestamp: str
    config: dict
    rows: list[RunSummary]
    aggregate: EnsembleSummary
    fits: dict[str, ExponentFit]


def _distinct_vertices(path) -> int:
    import numpy as np
    xs = path[:, 0]
    ys = path[:, 1]
    span = 2 * (int(np.abs(ys).max()) + 1)
    return int(len(np.unique(xs * span + ys)))


def _run_replica(task) -> ReplicaResult:
    (preset, group, eps, n, replica, seed, variant, cookies, half, m) = task
    rng = RngSpec(seed, replica)
    region = InitialRegion(half_plane_threshold=half)
    tag = f"[eps={eps},n={n}]"

    if preset == "speed":
        # theorem setup: start at (n+1, 0), then translate back by the start
        start = (n + 1, 0)
        params = WalkParams(epsilon=eps, drift_variant=variant,
                            cookies_per_site=cookies, initial_region=region,
                            start=start)
        run = run_erw_detailed(params, n, rng)
        fx = int(run.path[-1, 0]) - start[0]
        fy = int(run.path[-1, 1]) - start[1]
        summary = RunSummary(replica_index=replica, epsilon=params.epsilon, n=n,
                             final_x=fx, final_y=fy,
                             fresh_visit_count=run.fresh_visit_count)
        metrics = {
            f"speed{tag}": fx / n,
            f"nonpositive_final_x{tag}": float(fx <= 0),
            f"fresh_fraction{tag}": run.fresh_visit_count / (n + 1),
        }

    elif preset == "tan-exponent":
        path = run_srw(n, rng)
        total = count_tan_points(path, 0).total
        summary = RunSummary(replica_index=replica, epsilon=0.0, n=n,
                             final_x=int(path[-1, 0]), final_y=int(path[-1, 1]),
                             fresh_visit_count=_distinct_vertices(path),
                             tan_count_total=total)
        metrics = {f"tan_count{tag}": float(total)}

    elif preset == "coupling-audit":
        params = WalkParams(epsilon=eps, drift_variant=variant,
                            cookies_per_site=cookies, initial_region=region)
        traj = run_coupled(params, n, rng)
        audit = gap_audit(traj, eps)
        summary = RunSummary(replica_index=replica, epsilon=params.epsilon, n=n,
                             final_x=int(traj.erw_path[-1, 0]),
                             final_y=int(traj.erw_path[-1, 1]),
                             fresh_visit_count=len(traj.fresh_times),
                             gap_final=int(traj.gap[-1]))
        metrics = {
            f"coupling_violations{tag}": 0.0 if audit.ok else 1.0,
            f"xi_activations{tag}": float(audit.activations),
            f"xi_draws{tag}": float(audit.fresh_departures),
            f"gap_final{tag}": float(traj.gap[-1]),
        }

    elif preset == "envelope":
        path = run_srw(n, rng)
        rep = envelope_violations(path)
        summary = RunSummary(replica_index=replica, epsilon=0.0, n=n,
                             final_x=int(path[-1, 0]), final_y=int(path[-1, 1]),
                             fresh_visit_count=_distinct_vertices(path),
                             max_envelope_ratio=rep.max_ratio)
        metrics = {
            f"envelope_any_violation{tag}": float(rep.violation_count > 0),
            f"envelope_violations{tag}": float(rep.violation_count),
            f"envelope_max_ratio{tag}": rep.max_ratio,
        }

    elif preset == "windowed-progress":
        m_eff = m if m is not None else ceil_pow(n, 15, 16)
        params = WalkParams(epsilon=eps, drift_variant=variant,
                            cookies_per_site=cookies, initial_region=region)
        run = run_erw_detailed(params, 2 * n, rng)
        w_full = math.floor(m_eff * clamped_log(2 * n) ** 6)
        w = min(w_full, n)  # the full horizon never fits a desk-scale path
        wp = windowed_progress(run.path, n, m_eff, window=w)
        summary = RunSummary(replica_index=replica, epsilon=params.epsilon,
                             n=n, final_x=int(run.path[-1, 0]),
                             final_y=int(run.path[-1, 1]),
                             fresh_visit_count=run.fresh_visit_count,
                             windowed_progress_min=float(wp.min_progress))
        metrics = {
            f"progress_min{tag}": float(wp.min_progress),
            f"progress_min_norm{tag}": wp.min_progress / m_eff ** 0.75,
            f"window{tag}": float(w),
            f"window_capped{tag}": float(w < w_full),
        }

    else:
        raise ConfigError(f"preset {preset!r} has no replica runner")

    return ReplicaResult(group=group, replica=replica, summary=summary,
                         metrics=metrics)


def _lemma_b_aggregate(config: ExperimentConfig) -> EnsembleSummary:
    """Exact tail vs the 2(n*eps)^k bound over the configured grid.

    The epsilon list holds n*eps products; each is divided by every n."""
    ens = EnsembleSummary()
    for n in config.ns:
        for ne_str in config.epsilons:
            eps = Fraction(ne_str) / n
            if eps > 1:
                raise ConfigError(f"n*eps value {ne_str} exceeds n={n}")
            for k in _LEMMA_B_KS:
                exact = exact_binomial_tail(n, eps, k, exact=True)
                bound = bernoulli_tail_bound(n, eps, k, exact=True)
                point = f"[n={n},neps={ne_str},k={k}]"
                ens.add(f"exact_tail{point}", float(exact))
                ens.add(f"bound{point}", float(bound))
                ens.add("domination_violations", 1.0 if exact > bound else 0.0)
    return ens


def effective_workers(config: ExperimentConfig) -> int:
    """WALKLAB_WORKERS overrides the flag; the flag overrides cpu count."""
    env = os.environ.get("WALKLAB_WORKERS")
    if env is not None and env != "":
        try:
            w = int(env)
        except ValueError as exc:
            raise ConfigError(f"WALKLAB_WORKERS must be an integer: {env!r}") from exc
        if w < 1:
            raise ConfigError("WALKLAB_WORKERS must be >= 1")
        return w
    if config.workers is not None:
        return config.workers
    return os.cpu_count() or 1


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all replicas, fold deterministically, and write any output file."""
    timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    rows: list[RunSummary] = []
    fits: dict[str, ExponentFit] = {}

    if config.preset == "lemma-b":
        aggregate = _lemma_b_aggregate(config)
    else:
        tasks = []
        group = 0
        for eps in config.epsilons:
            for n in config.ns:
                for r in range(config.replicas):
                    tasks.append((config.preset, group, eps, n, r,
                                  config.master_seed, config.drift_variant.value,
                                  config.cookies_per_site, config.halfplane_x,
                                  config.m))
                group += 1
        workers = min(effective_workers(config), len(tasks))
        if workers > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(workers) as pool:
                results = pool.map(_run_replica, tasks, chunksize=1)
        else:
            results = [_run_replica(t) for t in tasks]
        results.sort(key=lambda rr: (rr.group, rr.replica))
        aggregate = EnsembleSummary()
        for rr in results:
            rows.append(rr.summary)
            for name in rr.metrics:
                aggregate.add(name, rr.metrics[name])
        _add_pooled_metrics(config, aggregate)
        if config.preset == "tan-exponent":
            points = []
            for n in config.ns:
                key = f"tan_count[eps={config.epsilons[0]},n={n}]"
                mean = aggregate[key].mean
                if mean > 0:
                    points.append((float(n), mean))
            if len(points) >= 3:
                fits["tan_count"] = exponent_fit(points)

    result = ExperimentResult(version=ARTIFACT_VERSION, timestamp=timestamp,
                              config=config.resolved(), rows=rows,
                              aggregate=aggregate, fits=fits)
    if config.out_path is not None:
        with open(config.out_path, "w", encoding="utf-8", newline="") as fh:
            write_result(result, fh, config.output_format)
    return result


def _add_pooled_metrics(config: ExperimentConfig, ens: EnsembleSummary) -> None:
    if config.preset != "coupling-audit":
        return
    for eps in config.epsilons:
        p2 = 2 * dyadic_epsilon(eps) / (1 << 40)
        for n in config.ns:
            tag = f"[eps={eps},n={n}]"
            acts = ens[f"xi_activations{tag}"]
            draws = ens[f"xi_draws{tag}"]
            total_draws = draws.mean * draws.count
            total_acts = acts.mean * acts.count
            var = total_draws * p2 * (1 - p2)
            z = (total_acts - total_draws * p2) / math.sqrt(var) if var > 0 else 0.0
            ens.add(f"pooled_activation_z{tag}", z)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _replica_cells(s: RunSummary) -> list:
    return [s.replica_index, s.epsilon, s.n, s.final_x, s.final_y,
            s.fresh_visit_count, s.gap_final, s.tan_count_total,
            s.max_envelope_ratio, s.windowed_progress_min]


def write_csv(result: ExperimentResult, fh) -> None:
    w = fh.write
    w(f"# {ARTIFACT_NAME} {result.version}\n")
    w(f"# timestamp = {result.timestamp}\n")
    w(f"# config = {json.dumps(result.config, sort_keys=True)}\n")
    w(PER_REPLICA_HEADER + "\n")
    for s in result.rows:
        w(",".join(_cell(v) for v in _replica_cells(s)) + "\n")
    w("\n" + AGGREGATE_HEADER + "\n")
    for name in sorted(result.aggregate.metrics):
        acc = result.aggregate.metrics[name]
        half = CI_SIGMA * acc.stderr
        cells = [name, acc.count, acc.mean, acc.stderr,
                 acc.mean - half, acc.mean + half, acc.min, acc.max]
        w(",".join(_cell(v) for v in cells) + "\n")
    if result.fits:
        w("\n" + EXPONENT_HEADER + "\n")
        for name in sorted(result.fits):
            fit = result.fits[name]
            cells = [name, fit.slope, fit.intercept, fit.r_squared,
                     len(fit.points)]
            w(",".join(_cell(v) for v in cells) + "\n")


def write_json(result: ExperimentResult, fh) -> None:
    replica_fields = PER_REPLICA_HEADER.split(",")
    payload = {
        "artifact": f"{ARTIFACT_NAME} {result.version}",
        "timestamp": result.timestamp,
        "config": result.config,
        "replicas": [dict(zip(replica_fields, _replica_cells(s)))
                     for s in result.rows],
        "aggregate": {
            name: {
                "count": acc.count, "mean": acc.mean, "stderr": acc.stderr,
                "ci_low": acc.mean - CI_SIGMA * acc.stderr,
                "ci_high": acc.mean + CI_SIGMA * acc.stderr,
                "min": acc.min, "max": acc.max,
            }
            for name, acc in result.aggregate.metrics.items()
        },
        "fit": {
            name: {
                "slope": fit.slope, "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "points": [list(p) for p in fit.points],
            }
            for name, fit in result.fits.items()
        },
    }
    json.dump(payload, fh, sort_keys=True, indent=2)
    fh.write("\n")


def write_result(result: ExperimentResult, fh=None, fmt: str = "csv") -> None:
    if fh is None:
        fh = sys.stdout
    if fmt == "json":
        write_json(result, fh)
    else:
        write_csv(result, fh)
