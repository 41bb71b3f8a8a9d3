"""Command-line entry points.

    fieldmon serve        run the API server
    fieldmon bench-geo    compare the compiled and numpy geodesy kernels
    fieldmon make-scenario  synthesize a fleet campaign file
    fleet run             drive a simulated device fleet (also available
                          as `fieldmon fleet run`)
"""

import json
import sys
import time
from pathlib import Path

import click

from .sim.scenario import Scenario, build_campaign


@click.group()
def main():
    """Remote-monitoring telemetry platform."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8430, show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("./data"),
              show_default=True)
@click.option("--admin-key", envvar="FIELDMON_ADMIN_KEY", default="admin",
              help="admin credential (or FIELDMON_ADMIN_KEY)")
@click.option("--allow-sim-time", is_flag=True,
              help="honor X-Sim-Time headers (simulation deployments only)")
def serve(host, port, data_dir, admin_key, allow_sim_time):
    """Run the study-management and ingestion server."""
    import uvicorn

    from .api import create_app, sim_aware_clock
    from .server import ServerCore, utc_now

    clock = sim_aware_clock(utc_now) if allow_sim_time else utc_now
    core = ServerCore(data_dir, admin_key=admin_key, clock=clock,
                      server_address=f"http://{host}:{port}")
    uvicorn.run(create_app(core, allow_sim_time=allow_sim_time), host=host, port=port)


@main.command("bench-geo")
@click.option("-n", default=200_000, show_default=True, help="points per pass")
@click.option("--repeat", default=3, show_default=True)
def bench_geo(n, repeat):
    """Benchmark the geodesy kernels: compiled extension vs numpy."""
    import numpy as np

    from . import geo

    rng = np.random.default_rng(0)
    lat = np.degrees(np.arcsin(rng.uniform(-1, 1, n)))
    lon = rng.uniform(-179.9, 180.0, n)
    alt = rng.uniform(-1000.0, 3000.0, n)

    click.echo(f"active kernel: {geo.ACTIVE_IMPL}; {n} points, best of {repeat}")
    results = {}
    for name, impl in geo.available.items():
        x = np.empty(n); y = np.empty(n); z = np.empty(n)
        la = np.empty(n); lo = np.empty(n); al = np.empty(n)
        fwd = inv = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            impl.forward(lat, lon, alt, x, y, z)
            fwd = min(fwd, time.perf_counter() - t0)
            t0 = time.perf_counter()
            impl.inverse(x, y, z, la, lo, al)
            inv = min(inv, time.perf_counter() - t0)
        results[name] = (fwd, inv)
        click.echo(
            f"  {name:9s} forward {n/fwd/1e6:7.2f} Mpts/s ({fwd*1e3:7.2f} ms)  "
            f"inverse {n/inv/1e6:7.2f} Mpts/s ({inv*1e3:7.2f} ms)"
        )
    if len(results) == 2:
        f_ratio = results["python"][0] / results["compiled"][0]
        i_ratio = results["python"][1] / results["compiled"][1]
        click.echo(f"  compiled speedup: forward {f_ratio:.2f}x, inverse {i_ratio:.2f}x")


@main.command("make-scenario")
@click.argument("out", type=click.Path(path_type=Path))
@click.option("--devices", default=10, show_default=True)
@click.option("--days", default=14.0, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--crashes", default=4.0, show_default=True, help="mean crashes per device")
def make_scenario(out, devices, days, seed, crashes):
    """Write a randomized (but reproducible) campaign file."""
    sc = build_campaign(devices, days, seed=seed, crashes_per_device=crashes)
    sc.save(out)
    click.echo(f"wrote {out}: {devices} devices x {days} days, seed {seed}")


@click.group()
def fleet():
    """Simulated device fleet."""


@fleet.command("run")
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--server", "server_url", default=None,
              help="drive a remote sim-enabled server instead of in-process")
@click.option("--seed", type=int, default=None, help="override the scenario seed")
@click.option("--speedup", type=float, default=None,
              help="pace events at SIM/WALL ratio (default: run unpaced)")
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="datastore root for in-process runs")
@click.option("--admin-key", envvar="FIELDMON_ADMIN_KEY", default="admin")
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=None,
              help="write the event log here (JSONL)")
def fleet_run(scenario_path, server_url, seed, speedup, data_dir, admin_key, log_path):
    """Run a fleet scenario to completion and report the outcome."""
    from .sim.fleet import run_fleet

    scenario = Scenario.load(scenario_path)
    if seed is not None:
        scenario.seed = seed
    if server_url is None and data_dir is None:
        import tempfile

        data_dir = Path(tempfile.mkdtemp(prefix="fieldmon-fleet-"))
        click.echo(f"datastore: {data_dir}")
    result = run_fleet(
        scenario,
        data_dir=data_dir,
        server_url=server_url,
        admin_key=admin_key,
        log_path=log_path,
        pace_speedup=speedup,
    )
    generated = len(set().union(*result.generated_oids.values()))
    click.echo(
        f"done: {len(result.actors)} devices, {result.sim_duration_s/86400:.1f} sim-days "
        f"in {result.wall_s:.1f} s wall (speedup {result.speedup:,.0f}x)"
    )
    click.echo(
        f"batches generated {generated}, stored "
        f"{len(result.stored_oids) if result.stored_oids is not None else 'n/a (remote)'}; "
        f"duplicates {result.duplicates}, crashes {result.crashes}"
    )
    if log_path:
        click.echo(f"event log: {log_path} ({len(result.event_log)} records)")


main.add_command(fleet)


if __name__ == "__main__":
    sys.exit(main())
