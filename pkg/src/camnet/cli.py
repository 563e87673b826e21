"""Command-line interface.

Every artifact a command writes embeds the scenario's configuration hash,
so results stay traceable to their inputs. Solution files are
deterministic byte for byte; timing data goes to separate report files.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import click
import numpy as np

from .bench import linear_r2, run_latency_bench, save_bench_csv
from .config import ConfigError, load_config
from .evaluation import (
    MemoryBudgetError,
    cross_evaluate,
    dense_coverage_audit,
    evaluate_external_solution,
)
from .objective import QualityFunction, coverage as coverage_of, sample_quality_weights
from .scenario import Scenario, camera_spec_from_config
from .session import solution_viewpoints


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_scenario(config_path: str) -> tuple[Scenario, str]:
    try:
        cfg, base = load_config(config_path)
        return Scenario.from_config(cfg, base), cfg.config_hash()
    except (ConfigError, ValueError) as err:
        raise click.ClickException(str(err)) from err


def _camera_records(candidates, ids) -> list[dict]:
    records = []
    for i in ids:
        vp = candidates[i]
        records.append(
            {
                "id": int(vp.id),
                "spec": {
                    "perspective_angle": vp.spec.perspective_angle,
                    "resolution": list(vp.spec.resolution),
                    "min_range": vp.spec.min_range,
                    "max_range": vp.spec.max_range,
                },
                "pose": {
                    "position": vp.pose.position.tolist(),
                    "quaternion": vp.pose.orientation.tolist(),
                },
            }
        )
    return records


@click.group()
def main():
    """Camera-network design over triangle-mesh scenes."""


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Scenario YAML.")
@click.option("--out", "-o", "out_dir", default=".", type=click.Path(file_okay=False),
              help="Output directory.")
@click.option("--method", type=click.Choice(["greedy", "lazy_greedy", "brute_force",
                                             "random"]), default=None,
              help="Override the configured optimizer.")
@click.option("--k", type=int, default=None, help="Override the camera budget.")
@click.option("--seed", type=int, default=None, help="Override the optimizer seed.")
@click.option("--jobs", type=int, default=None, help="Visibility build threads.")
def optimize(config_path, out_dir, method, k, seed, jobs):
    """Select cameras for a scenario; writes solution.json and report.json."""
    scenario, cfg_hash = _load_scenario(config_path)
    if scenario.candidates is None:
        raise click.ClickException("scenario configures no candidates to optimize over")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    matrix = scenario.build_matrix(n_jobs=jobs)
    t_matrix = time.perf_counter() - t0
    try:
        report = scenario.optimize(matrix, method=method, k=k, seed=seed)
    except ValueError as err:
        raise click.ClickException(str(err)) from err
    cov = coverage_of(matrix, scenario.points, report.solution)

    solution_doc = {
        "format": "camnet-solution",
        "version": 1,
        "config_hash": cfg_hash,
        "method": report.method,
        "k": report.solution.k,
        "camera_ids": list(report.solution.ids),
        "gains": list(report.gains),
        "value": report.value,
        "coverage": cov,
        "cameras": _camera_records(scenario.candidates, report.solution.ids),
    }
    _write_json(out / "solution.json", solution_doc)
    _write_json(
        out / "report.json",
        {
            "config_hash": cfg_hash,
            "method": report.method,
            "n_points": len(scenario.points),
            "m_candidates": len(scenario.candidates),
            "evaluations": report.evaluations,
            "notes": list(report.notes),
            "timings_s": {"visibility_matrix": t_matrix, "solve": report.wall_time_s},
        },
    )
    click.echo(
        f"selected {len(report.solution.ids)} of {len(scenario.candidates)} cameras: "
        f"value={report.value:.6g} coverage={cov:.4f} "
        f"evaluations={report.evaluations} ({report.method})"
    )
    click.echo(f"wrote {out / 'solution.json'} and {out / 'report.json'}")


def _load_functions(path) -> list[QualityFunction]:
    doc = json.loads(Path(path).read_text())
    return [QualityFunction.from_config(f) for f in doc["functions"]]


@main.command("sample-functions")
@click.option("--seed", type=int, default=0, help="Base seed; function i uses seed+i.")
@click.option("--n", "count", type=int, default=60, help="Number of functions.")
@click.option("--length", type=int, default=6, help="Redundancy profile length.")
@click.option("--out", "-o", "out_path", default="functions.json",
              type=click.Path(dir_okay=False))
def sample_functions(seed, count, length, out_path):
    """Draw a reusable set of random redundancy quality functions."""
    functions = [
        QualityFunction.redundancy(sample_quality_weights(seed + i, length))
        for i in range(count)
    ]
    _write_json(
        Path(out_path),
        {"seed": seed, "length": length, "functions": [q.to_config() for q in functions]},
    )
    click.echo(f"wrote {count} quality functions to {out_path}")


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", "out_dir", default=".", type=click.Path(file_okay=False))
@click.option("--n-functions", type=int, default=60, help="Random functions to sample.")
@click.option("--seed", type=int, default=0, help="Base seed for sampling.")
@click.option("--length", type=int, default=6, help="Redundancy profile length.")
@click.option("--functions", "functions_path", type=click.Path(exists=True,
              dir_okay=False), default=None,
              help="Reuse functions from sample-functions output.")
@click.option("--k", type=int, default=None, help="Override the camera budget.")
@click.option("--solution", "solution_path", type=click.Path(exists=True,
              dir_okay=False), default=None,
              help="Also score this exported solution against every function.")
@click.option("--jobs", type=int, default=1, help="Parallel solves.")
def crosseval(config_path, out_dir, n_functions, seed, length, functions_path, k,
              solution_path, jobs):
    """Cross-evaluate per-function optima; writes crosseval.json and ratios.csv."""
    scenario, cfg_hash = _load_scenario(config_path)
    if scenario.candidates is None:
        raise click.ClickException("scenario configures no candidates to optimize over")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if functions_path:
        functions = _load_functions(functions_path)
    else:
        functions = [
            QualityFunction.redundancy(sample_quality_weights(seed + i, length))
            for i in range(n_functions)
        ]
    k = k if k is not None else scenario.config.optimizer.k
    matrix = scenario.build_matrix()
    try:
        table = cross_evaluate(
            matrix, scenario.points, functions, k,
            regularizer=scenario.regularizer, n_jobs=jobs,
        )
    except ValueError as err:
        raise click.ClickException(str(err)) from err

    extra = {"config_hash": cfg_hash, "k": k, "seed": seed}
    if solution_path:
        doc = json.loads(Path(solution_path).read_text())
        views = solution_viewpoints(doc)
        ext = evaluate_external_solution(
            matrix, scenario.points, views, functions, table=table,
            mesh=scenario.mesh, visibility_method=scenario.config.visibility.method,
            bias=scenario.config.visibility.depth_bias,
        )
        extra["external"] = {
            "solution": str(solution_path),
            "ratios": ext.ratios.tolist(),
            "coverage": ext.coverage,
            "mean_ratio": ext.mean_ratio,
        }
        click.echo(
            f"external solution: mean ratio {ext.mean_ratio:.4f}, "
            f"coverage {ext.coverage:.4f}"
        )
    table.save_json(out / "crosseval.json", extra=extra)
    table.save_csv(out / "ratios.csv", comment=f"config_hash={cfg_hash}")
    worst = float(table.mean_ratios.min())
    click.echo(
        f"{table.n_functions} functions, k={k}: mean ratio range "
        f"[{worst:.4f}, {float(table.mean_ratios.max()):.4f}]"
    )
    click.echo(f"wrote {out / 'crosseval.json'} and {out / 'ratios.csv'}")


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--solution", "solution_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Solution record to audit (optimize or session export).")
@click.option("--resolution", type=float, default=0.5, help="Grid step in meters.")
@click.option("--method", type=click.Choice(["zbuffer", "raycast"]), default="zbuffer")
@click.option("--budget-mb", type=int, default=512, help="Streaming memory budget.")
@click.option("--uncovered", "uncovered_path", type=click.Path(dir_okay=False),
              default=None, help="Write uncovered grid points here (binary).")
@click.option("--out", "-o", "out_path", default="audit.json",
              type=click.Path(dir_okay=False))
def audit(config_path, solution_path, resolution, method, budget_mb, uncovered_path,
          out_path):
    """Dense coverage audit of a finished design on a fine grid."""
    scenario, cfg_hash = _load_scenario(config_path)
    doc = json.loads(Path(solution_path).read_text())
    try:
        views = solution_viewpoints(doc)
        report = dense_coverage_audit(
            scenario.mesh, views, resolution, method=method,
            memory_budget_bytes=budget_mb << 20, uncovered_path=uncovered_path,
        )
    except MemoryBudgetError as err:
        raise click.ClickException(
            f"{err} (rerun with --budget-mb {-(-err.required_bytes // (1 << 20))} "
            "or a coarser --resolution)"
        ) from err
    except ValueError as err:
        raise click.ClickException(str(err)) from err
    out_doc = {"config_hash": cfg_hash, "solution": str(solution_path),
               "method": method, **report.to_json_dict()}
    _write_json(Path(out_path), out_doc)
    click.echo(
        f"audited {report.total_points} grid points at {resolution} m in "
        f"{report.n_slabs} slabs: coverage {report.coverage:.4f}"
    )
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--points", "points_list", default="1000,10000,50000",
              help="Comma-separated point counts.")
@click.option("--cameras", "cameras_list", default="1,5,10",
              help="Comma-separated camera counts.")
@click.option("--moves", type=int, default=5, help="Timed moves per case.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "-o", "out_dir", default=".", type=click.Path(file_okay=False))
def bench(config_path, points_list, cameras_list, moves, seed, out_dir):
    """Move-latency sweep over point and camera counts."""
    scenario, cfg_hash = _load_scenario(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    point_counts = [int(s) for s in points_list.split(",") if s]
    camera_counts = [int(s) for s in cameras_list.split(",") if s]
    spec = camera_spec_from_config(scenario.config.camera)
    rows = run_latency_bench(
        scenario.mesh, spec, point_counts, camera_counts, moves=moves, seed=seed,
        method=scenario.config.visibility.method,
    )
    save_bench_csv(rows, out / "bench.csv", comment=f"config_hash={cfg_hash}")
    fits = {}
    for m in camera_counts:
        sub = [r for r in rows if r.n_cameras == m]
        if len(sub) >= 2:
            fits[str(m)] = linear_r2([r.n_points for r in sub],
                                     [r.move_ms_mean for r in sub])
    _write_json(
        out / "bench.json",
        {"config_hash": cfg_hash, "rows": [r.as_dict() for r in rows],
         "move_latency_r2_vs_points": fits},
    )
    for row in rows:
        click.echo(
            f"points={row.n_points:>8} cameras={row.n_cameras:>3} "
            f"move={row.move_ms_mean:8.2f} ms  full={row.full_recompute_ms:8.2f} ms"
        )
    click.echo(f"wrote {out / 'bench.csv'} and {out / 'bench.json'}")


@main.command()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None, help="Override configured host.")
@click.option("--port", type=int, default=None, help="Override configured port.")
@click.option("--export-dir", type=click.Path(file_okay=False), default=None,
              help="Flush the session here on shutdown.")
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False, exists=True),
              default=None, help="Serve this static directory at /.")
def serve(config_path, host, port, export_dir, ui_dir):
    """Run the interactive websocket service for a scenario."""
    from .server import serve as run_server

    scenario, cfg_hash = _load_scenario(config_path)
    session = scenario.make_session()
    host = host or scenario.config.server.host
    port = port if port is not None else scenario.config.server.port
    click.echo(
        f"serving scenario {cfg_hash[:12]} on ws://{host}:{port}/ws "
        f"({len(session.points)} points, {len(session.camera_ids())} cameras)"
    )
    run_server(
        session, host, port,
        default_spec=camera_spec_from_config(scenario.config.camera),
        export_dir=export_dir, ui_dir=ui_dir,
    )


if __name__ == "__main__":
    main()
