"""Command line entry point.

Subcommands cover batch simulation, ensemble design, planning, serving the
HTTP API, pipeline validation and event-log replay. Exit codes are stable:
0 success, 1 validation failure, 2 I/O or configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, fire
from .config import ConfigError, RunConfig, load_config
from .ensemble import DesignSizeError, enumerate_factorial, sample_lhs
from .eventlog import EventLogError
from .fusion import uniform_belief
from .pipeline import CompositionError, compose, graph_from_document
from .planner import PlanningSession
from .raster import write_ascii_grid

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def provenance(config: RunConfig) -> dict:
    return {"config_digest": config.digest(), "seed": config.seed,
            "version": __version__}


def _load(config_path: str, overrides: tuple[str, ...]) -> RunConfig:
    try:
        return load_config(config_path, list(overrides))
    except ConfigError as exc:
        raise click.exceptions.Exit(_fail(EXIT_CONFIG, str(exc)))


def _fail(code: int, message: str) -> int:
    click.echo(f"error: {message}", err=True)
    return code


config_opt = click.option("--config", "config_path", required=True,
                          type=click.Path(), help="Run configuration (JSON).")
set_opt = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                       help="Override a config value (dotted keys, JSON values).")


@click.group()
@click.version_option(__version__)
def main():
    """Wildfire emergency planning toolkit."""


@main.command()
@config_opt
@set_opt
@click.option("--member", "member_id", default=None,
              help="Forecast member to simulate (default: first).")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Output directory for state rasters.")
def simulate(config_path, overrides, member_id, out_dir):
    """Run one fire spread simulation and write per-step state rasters."""
    cfg = _load(config_path, overrides)
    members = cfg.forcing_members()
    member_id = member_id or cfg.members[0].member_id
    if member_id not in members:
        raise click.exceptions.Exit(
            _fail(EXIT_CONFIG, f"unknown forecast member {member_id!r}"))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    state0 = cfg.initial_fire_state()
    params = cfg.context().params_for(cfg.design().scenarios[0])
    traj = fire.simulate(state0=state0, forcing=members[member_id],
                         params=params, variant=cfg.variant,
                         horizon=cfg.horizon.t_end - cfg.horizon.t_begin,
                         seed=cfg.seed)
    for state in traj.states:
        write_ascii_grid(fire.state_raster(state),
                         out / f"state_{state.t:04d}.asc", fmt="%d")
    summary = {
        "provenance": provenance(cfg),
        "member": member_id,
        "variant": cfg.variant.value,
        "burned_series": [int(n) for n in traj.burned_series],
        "trajectory_digest": traj.digest(),
        "steps": len(traj.states),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    click.echo(f"wrote {len(traj.states)} state rasters to {out}")
    click.echo(f"trajectory digest {traj.digest()}")


@main.command()
@config_opt
@set_opt
@click.option("--method", type=click.Choice(["factorial", "lhs"]),
              default="factorial", show_default=True)
@click.option("--levels", default=3, show_default=True,
              help="Quantile levels per continuous dimension (factorial).")
@click.option("--n", "n_samples", default=16, show_default=True,
              help="Sample count (lhs).")
@click.option("--out", "out_file", required=True, type=click.Path())
def ensemble(config_path, overrides, method, levels, n_samples, out_file):
    """Enumerate or sample a scenario ensemble design."""
    cfg = _load(config_path, overrides)
    space = cfg.uncertainty_space()
    try:
        if method == "factorial":
            design = enumerate_factorial(space, levels=levels, seed=cfg.seed)
        else:
            design = sample_lhs(space, n_samples, seed=cfg.seed)
    except DesignSizeError as exc:
        raise click.exceptions.Exit(_fail(EXIT_VALIDATION, str(exc)))
    doc = {"provenance": provenance(cfg), "design": design.to_document()}
    Path(out_file).write_text(json.dumps(doc, indent=2) + "\n")
    click.echo(f"{len(design)} scenarios ({design.method}) -> {out_file}")


@main.command()
@config_opt
@set_opt
@click.option("--out", "out_file", required=True, type=click.Path())
def plan(config_path, overrides, out_file):
    """Run one generate / evaluate / filter / select planning cycle."""
    cfg = _load(config_path, overrides)
    from .fusion import ReviewQueue

    session = PlanningSession(
        session_id="batch",
        context=cfg.context(),
        horizon=cfg.horizon,
        design=cfg.design(),
        observed=cfg.initial_fire_state(),
        belief=uniform_belief(cfg.geom, cfg.burnable),
        queue=ReviewQueue(),
        templates=cfg.templates,
        budget_eur=cfg.budget_eur,
        policy=cfg.policy(),
        compute_budget=cfg.compute_budget(),
    )
    outcome = session.plan()
    doc = {"provenance": provenance(cfg), "outcome": outcome.to_document()}
    Path(out_file).write_text(json.dumps(doc, indent=2) + "\n")
    status = outcome.result.progress.status.value
    click.echo(f"selected strategy {outcome.selected.strategy_id} "
               f"(front {list(outcome.front.members)})")
    if status != "COMPLETED":
        click.echo(f"warning: evaluation status {status}, estimates are "
                   f"partial", err=True)
    click.echo(f"status {status} -> {out_file}")


@main.command()
@config_opt
@set_opt
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", "data_dir", required=True, type=click.Path(),
              help="Directory holding the event log.")
def serve(config_path, overrides, port, data_dir):
    """Serve the planning HTTP API."""
    import uvicorn

    from .server import ServiceState, create_app

    cfg = _load(config_path, overrides)
    app = create_app(ServiceState(cfg, data_dir))
    uvicorn.run(app, host="127.0.0.1", port=port)


@main.command()
@click.argument("pipeline_path", type=click.Path())
def validate(pipeline_path):
    """Compose-time validation of a processing pipeline document."""
    try:
        doc = json.loads(Path(pipeline_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.exceptions.Exit(_fail(EXIT_CONFIG, str(exc)))
    try:
        graph = graph_from_document(doc)
        pipeline = compose(graph)
    except (CompositionError, ValueError) as exc:
        raise click.exceptions.Exit(_fail(EXIT_VALIDATION, str(exc)))
    click.echo(f"pipeline valid: {len(pipeline.order)} modules in order "
               f"{list(pipeline.order)}")


@main.command()
@config_opt
@set_opt
@click.option("--data-dir", "data_dir", required=True, type=click.Path(),
              help="Directory holding the event log to replay.")
def replay(config_path, overrides, data_dir):
    """Rebuild service state from an event log and print digests."""
    from .server import replay_state

    cfg = _load(config_path, overrides)
    try:
        state = replay_state(cfg, data_dir)
    except EventLogError as exc:
        raise click.exceptions.Exit(_fail(EXIT_VALIDATION, str(exc)))
    click.echo(f"events: {state.log.last_seq}")
    click.echo(f"reports: {len(state.queue.reports)} "
               f"(pending {len(state.queue.pending())})")
    click.echo(f"belief generation: {state.belief.generation}")
    for sid in sorted(state.sessions):
        doc = state.session_doc(sid)
        click.echo(f"session {sid}: committed={doc['committed']} "
                   f"runs={doc['runs']}")
    click.echo(f"state digest {state.digest()}")


if __name__ == "__main__":
    sys.exit(main())
