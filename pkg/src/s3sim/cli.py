"""``sim <kind> --config <path> [--seed N] [--trials N] [--backend B] [--out DIR]``.

Exit status: 0 on success, 1 when an invariant check fails, 2 for a bad config.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import BACKENDS, KINDS, ConfigError, parse_config
from .harness import run_experiment


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("kind", type=click.Choice(KINDS))
@click.option("--config", "config_path", required=True,
              type=click.Path(dir_okay=False, path_type=Path), help="JSON experiment config.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--backend", type=click.Choice(BACKENDS), default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory (default: sim-out/<kind>).")
def main(kind, config_path, seed, trials, backend, out_dir):
    """Run one experiment and write results.jsonl, summary.csv and manifest.json."""
    try:
        text = config_path.read_text()
    except OSError as exc:
        click.echo(f"config error: cannot read {config_path}: {exc.strerror}", err=True)
        sys.exit(2)
    try:
        cfg = parse_config(text, {"seed": seed, "trials": trials, "backend": backend})
    except ConfigError as exc:
        for e in exc.errors:
            click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    if cfg.kind != kind:
        click.echo(f"config error: config is for {cfg.kind!r}, not {kind!r}", err=True)
        sys.exit(2)
    out = out_dir or (Path(cfg.out) if cfg.out else Path("sim-out") / kind)
    sink = run_experiment(cfg, out)
    click.echo(sink.csv_text(), nl=False)
    for name in sink.failures:
        click.echo(f"invariant failed: {name}", err=True)
    click.echo(f"wrote {out} ({len(sink.records)} records, {sink.wall_time:.2f}s)", err=True)
    sys.exit(sink.status)


if __name__ == "__main__":
    main()
