"""Command-line front end.

Subcommands: verify, integrate, flow, spectrum, frequency, catalog, asd.
Exit codes: 0 success, 1 tolerance failure, 2 usage error.  Trajectories and
tables are CSV, verdicts and metadata JSON; floats are emitted with 17
significant digits so every run round-trips losslessly.  A flat KEY=VALUE
config file can seed any subcommand's options (flags override the file);
HKTRIPLES_OUTDIR sets the default output directory.
"""

from __future__ import annotations

import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import asd as asd_mod
from . import flow as flow_mod
from . import profiles, spectrum as spectrum_mod

FAMILIES = ("flat-fixed", "flat-rotating", "eguchi-hanson", "taub-nut")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _outdir(ctx_value) -> Path:
    out = ctx_value or os.environ.get("HKTRIPLES_OUTDIR", ".")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_config(path):
    out = {}
    if path is None:
        return out
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_config(ctx, config_path):
    """Fill defaults from a flat key-value file; explicit flags win."""
    cfg = _read_config(config_path)
    for key, val in cfg.items():
        if key in ctx.params and ctx.get_parameter_source(key).name == "DEFAULT":
            param = next(p for p in ctx.command.params if p.name == key)
            ctx.params[key] = param.type.convert(val, param, ctx)
    return ctx.params


def _entry(family, c, m):
    family = family.replace("-", "_")
    if family == "eguchi_hanson":
        return profiles.catalog(family, c=c)
    if family == "taub_nut":
        return profiles.catalog(family, m=m)
    return profiles.catalog(family)


def _default_radii(entry, n):
    lo = entry.r_min
    if math.isinf(lo) or lo <= 0:
        return np.linspace(0.5, 5.0, n)
    return np.linspace(1.05 * lo, 5.0 * lo, n)


def _write_run_config(outdir: Path, name: str, params: dict):
    payload = {k: (v if not isinstance(v, float) else float(_fmt(v)))
               for k, v in params.items() if v is not None}
    (outdir / f"{name}_config.json").write_text(json.dumps(payload, indent=1, default=str))


@click.group()
def main():
    """Hyperkahler triples on cohomogeneity-one 4-manifolds."""


@main.command()
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--c", type=float, default=1.0, show_default=True, help="bolt parameter")
@click.option("--m", type=float, default=1.0, show_default=True, help="mass parameter")
@click.option("--grid", type=int, default=200, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None, help="output directory")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.pass_context
def verify(ctx, family, c, m, grid, tol, config, out, jobs):
    """Constraint residuals (|Q| and |d omega|) of a catalog family on a radius grid."""
    p = _apply_config(ctx, config)
    family, c, m = p["family"], p["c"], p["m"]
    grid, tol = p["grid"], p["tol"]
    entry = _entry(family, c, m)
    radii = _default_radii(entry, grid)
    chunks = np.array_split(radii, max(1, p["jobs"]))
    results = [profiles.hk_residual(profiles.catalog_states(entry, ch), entry.mode)
               for ch in chunks if len(ch)]
    max_q = max(r[0] for r in results)
    max_d = max(r[1] for r in results)
    ode_res = entry.ode_residual(radii)
    click.echo(f"family={family} max|Q|={_fmt(max_q)} max|d omega|={_fmt(max_d)} "
               f"ode_residual={_fmt(ode_res)}")
    outdir = _outdir(p["out"])
    report = {"family": family, "params": entry.params, "grid": int(grid),
              "max_q": max_q, "max_d_omega": max_d, "ode_residual": ode_res,
              "tolerance": tol, "pass": bool(max_q < tol and max_d < tol)}
    (outdir / "verify_report.json").write_text(json.dumps(report, indent=1))
    _write_run_config(outdir, "verify", {k: p[k] for k in ("family", "c", "m", "grid", "tol")})
    sys.exit(0 if report["pass"] else 1)


@main.command()
@click.option("--family", type=click.Choice(FAMILIES), default=None)
@click.option("--c", type=float, default=1.0, show_default=True)
@click.option("--m", type=float, default=1.0, show_default=True)
@click.option("--r0", type=float, default=None, help="starting radius (catalog start)")
@click.option("--f0", default=None, help="comma-separated f1,f2,f3 (raw start)")
@click.option("--mode", type=click.Choice(["fixed", "rotating"]), default="fixed")
@click.option("--t-span", type=float, default=5.0, show_default=True)
@click.option("--rtol", type=float, default=profiles.DEFAULT_RTOL, show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def integrate(ctx, family, c, m, r0, f0, mode, t_span, rtol, config, out):
    """Integrate the profile ODEs from a catalog state or a raw f-vector."""
    p = _apply_config(ctx, config)
    if p["family"] is not None:
        entry = _entry(p["family"], p["c"], p["m"])
        r_start = p["r0"] if p["r0"] is not None else _default_radii(entry, 3)[0]
        state = entry.state_at(r_start)
    elif p["f0"] is not None:
        f = tuple(float(x) for x in p["f0"].split(","))
        state = profiles.ProfileState(f, 0.0, f"{p['mode']}_frame")
    else:
        raise click.UsageError("provide --family or --f0")
    traj = profiles.integrate(state, state.t + p["t_span"], rtol=p["rtol"])
    outdir = _outdir(p["out"])
    traj.to_csv(outdir / "trajectory.csv")
    traj.to_json(outdir / "trajectory.json")
    click.echo(f"terminal={traj.terminal.kind} component={traj.terminal.component} "
               f"samples={len(traj.t)} -> {outdir / 'trajectory.csv'}")
    sys.exit(0)


@main.command()
@click.option("--g", "g0", required=True, help="comma-separated g1,g2,g3")
@click.option("--mode", type=click.Choice(["fixed", "rotating"]), default="fixed", show_default=True)
@click.option("--orientation", type=click.Choice(["standard", "reversed", "auto"]),
              default="auto", show_default=True,
              help="'auto': standard for fixed, reversed for rotating")
@click.option("--inward/--outward", "inward", default=True)
@click.option("--span", type=float, default=10.0, show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def flow(ctx, g0, mode, orientation, inward, span, config, out):
    """Evolve a boundary framing and classify its terminal behaviour."""
    p = _apply_config(ctx, config)
    g = tuple(float(x) for x in p["g0"].split(","))
    orient = p["orientation"]
    if orient == "auto":
        orient = "standard" if p["mode"] == "fixed" else "reversed"
    state = flow_mod.FramingState(g, f"{p['mode']}_frame", orient)
    traj, terminal = flow_mod.flow_integrate(
        state, "inward" if p["inward"] else "outward", span=p["span"])
    outdir = _outdir(p["out"])
    traj.to_csv(outdir / "flow_trajectory.csv")
    (outdir / "flow_terminal.json").write_text(json.dumps(terminal.to_dict(), indent=1))
    click.echo(f"terminal={terminal.kind}"
               + (f" bolt_index={terminal.bolt_index}" if terminal.bolt_index else "")
               + f" -> {outdir / 'flow_terminal.json'}")
    sys.exit(0)


@main.command()
@click.option("--op", type=click.Choice(["curl", "dy"]), default="curl", show_default=True)
@click.option("--maxj", type=float, required=True)
@click.option("--orientation", type=click.Choice(["standard", "reversed"]), default="standard")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def spectrum(ctx, op, maxj, orientation, config, out):
    """Spectral table of the curl or boundary Dirac operator on the round sphere."""
    p = _apply_config(ctx, config)
    if p["maxj"] < 0:
        raise click.UsageError("--maxj must be >= 0")
    lines = spectrum_mod.spectrum(p["op"], p["maxj"], p["orientation"])
    outdir = _outdir(p["out"])
    spectrum_mod.spectrum_to_csv(lines, outdir / "spectrum.csv")
    spectrum_mod.spectrum_to_json(lines, outdir / "spectrum.json")
    for ln in lines:
        click.echo(f"lambda={_fmt(ln.eigenvalue)} mult={ln.multiplicity} "
                   f"coclosed={ln.coclosed_multiplicity} complete={int(ln.complete)}")
    sys.exit(0)


@main.command()
@click.option("--preset", type=click.Choice(["eguchi-hanson-delta", "taub-nut-delta"]),
              default=None)
@click.option("--c", type=float, default=1.0, show_default=True)
@click.option("--m", type=float, default=1.0, show_default=True)
@click.option("--zero", is_flag=True, default=False, help="classify the zero perturbation")
@click.option("--orientation", type=click.Choice(["standard", "reversed", "auto"]),
              default="auto", show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def frequency(ctx, preset, c, m, zero, orientation, config, out):
    """Frequency classification of a boundary framing perturbation."""
    p = _apply_config(ctx, config)
    orient = p["orientation"]
    if p["zero"]:
        data = spectrum_mod.invariant_coords(np.zeros((3, 3)))
        if orient == "auto":
            orient = "standard"
    elif p["preset"] == "eguchi-hanson-delta":
        if not 0 < p["c"] < 1:
            raise click.UsageError("eguchi-hanson-delta requires 0 < c < 1")
        d = math.sqrt(1.0 - p["c"] ** 4) - 1.0
        data = spectrum_mod.invariant_coords(np.diag([0.0, d, d]))
        if orient == "auto":
            orient = "standard"
    elif p["preset"] == "taub-nut-delta":
        data = spectrum_mod.rotated_perturbation_coords([1.0 / (4.0 * p["m"] ** 2), 0.0, 0.0])
        if orient == "auto":
            orient = "reversed"
    else:
        raise click.UsageError("provide --preset or --zero")
    verdict = spectrum_mod.classify_frequency(data, orient)
    outdir = _outdir(p["out"])
    payload = verdict.to_dict()
    payload["orientation"] = orient
    (outdir / "frequency_verdict.json").write_text(json.dumps(payload, indent=1))
    click.echo(f"classification={verdict.classification} orientation={orient}")
    sys.exit(0)


@main.command()
@click.option("--family", type=click.Choice(FAMILIES), required=True)
@click.option("--c", type=float, default=1.0, show_default=True)
@click.option("--m", type=float, default=1.0, show_default=True)
@click.option("--grid", type=int, default=50, show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def catalog(ctx, family, c, m, grid, config, out):
    """Closed-form profile table of a catalog family."""
    p = _apply_config(ctx, config)
    entry = _entry(p["family"], p["c"], p["m"])
    radii = _default_radii(entry, p["grid"])
    outdir = _outdir(p["out"])
    path = outdir / "catalog.csv"
    with open(path, "w") as fh:
        fh.write("r,t,f1,f2,f3,df1,df2,df3\n")
        ts = entry.time_grid(radii)
        for r, t in zip(radii, ts):
            f = entry.f(r)
            df = entry.dfdt(r)
            fh.write(",".join(_fmt(x) for x in (r, t, *f, *df)) + "\n")
    click.echo(f"family={p['family']} mode={entry.mode} time_sign={entry.time_sign:+g} -> {path}")
    sys.exit(0)


@main.command()
@click.option("--kmax", type=int, default=3, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--out", default=None)
@click.pass_context
def asd(ctx, kmax, tol, config, out):
    """Generate closed anti-self-dual 2-forms on the flat ball and check them."""
    p = _apply_config(ctx, config)
    gens = asd_mod.generators(tuple(range(2, p["kmax"] + 1)))
    outdir = _outdir(p["out"])
    payload = asd_mod.inventory_json(gens, outdir / "asd_inventory.json")
    worst = max(max(g["closed_residual"], g["asd_residual"]) for g in payload)
    click.echo(f"generators={len(payload)} worst_residual={_fmt(worst)}")
    sys.exit(0 if worst < p["tol"] else 1)


if __name__ == "__main__":
    main()
