"""
Command-line interface for dmkit.

Usage:
    dmkit classical  models/example1.json
    dmkit diskmargin models/example1.json --skew 0 --worst-case
    dmkit diskmargin models/example1.json --variation 0.7 1.4
    dmkit trace      models/example5.json --grid 0.1:1000:400 --out trace.csv
    dmkit mimo       models/satellite.json --points io
    dmkit exclusion  models/example1.json --skew -1 --skew 0 --skew 1

Exit status: 0 success, 1 bad input, 2 unstable nominal loop (or another
domain error), 3 numerical failure.
"""
from __future__ import annotations
import functools
import logging
import math
import sys

import click
import numpy as np

from dmkit import config
from dmkit.cli.documents import ResultDocument, db_fields, table_csv, write_text
from dmkit.cli.modelfile import ModelFile, load_model_file
from dmkit.exceptions import DimensionError, DmkitError
from dmkit.lti import LtiModel, TransferFunction, closed_loop, freq_response, poles
from dmkit.margins import (ClassicalMargins, DiskMarginResult, DiskSpec, classical_margins,
                           disk_from_phase, disk_from_variation, disk_geometry, disk_margin,
                           freq_margin_trace, nyquist_exclusion, safe_region_curve,
                           skewed_sensitivity, tolerates_variation, verify_destabilizing,
                           worst_perturbation_lti)
from dmkit.multiloop import (MultiLoopResult, Points, as_points, build_m,
                             loop_at_a_time, multiloop_margin)
from dmkit.specnorm import FrequencyGrid, default_grid, sigma_max

log = logging.getLogger(__name__)

LOG_FORMAT = "[%(name)s] %(levelname)s: %(message)s"
_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

__all__ = ["cli", "main"]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def reports_errors(fn):
    """Turn a DmkitError into 'error: ...' on stderr and its exit code."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DmkitError as e:
            click.echo(f"error: {e}", err=True)
            click.get_current_context().exit(e.exit_code)
    return wrapper


def _siso_loop(mf: ModelFile) -> LtiModel:
    L = mf.loop()
    if not L.is_siso:
        raise DimensionError(f"this command needs a SISO loop, got {L.shape}")
    return L


def _grid(text: str | None, model: LtiModel) -> FrequencyGrid:
    if text is None:
        return default_grid(model, config.DEFAULT_GRID_POINTS, include_sentinels=False)
    return FrequencyGrid.parse(text, model)


def _tf_record(tf: TransferFunction) -> dict:
    return {"num": list(tf.num.coeffs), "den": list(tf.den.coeffs)}


def _deg(rad: float) -> float:
    return math.degrees(rad) if math.isfinite(rad) else rad


def _emit(doc: ResultDocument, out: str | None) -> None:
    write_text(doc.to_json(), out, click.echo)


def _classical_record(m: ClassicalMargins) -> dict:
    gain = {"lower": m.g_lower, "upper": m.g_upper,
            "freq_lower": m.critical_lower_gain_freq, "freq_upper": m.critical_gain_freq}
    gain.update(db_fields("lower", m.g_lower))
    gain.update(db_fields("upper", m.g_upper))
    return {
        "gain_margin": gain,
        "phase_margin": {"rad": m.phi_upper, "deg": _deg(m.phi_upper),
                         "freq": m.critical_phase_freq},
        "gain_crossover_freqs": list(m.gain_crossover_freqs),
        "phase_crossover_freqs": list(m.phase_crossover_freqs),
        "stable_gain_intervals": [list(iv) for iv in m.stable_intervals],
    }


def _disk_record(res: DiskMarginResult) -> dict:
    g = res.geometry
    (gmin, gmax), pm = res.guaranteed_gm, res.guaranteed_pm
    guaranteed = {"gamma_min": gmin, "gamma_max": gmax, "gamma_m": res.gamma_m,
                  "phi_m_rad": pm, "phi_m_deg": _deg(pm)}
    guaranteed.update(db_fields("gamma_min", gmin))
    guaranteed.update(db_fields("gamma_max", gmax))
    return {
        "sigma": res.spec.sigma,
        "alpha": res.alpha,
        "peak_gain": res.peak_gain,
        "omega_crit": res.omega_crit,
        "delta0": res.delta0,
        "f0": res.f0,
        "f0_infinite": res.f0_is_infinite,
        "geometry": {"kind": g.kind, "gamma_min": g.gamma_min, "gamma_max": g.gamma_max,
                     "center": g.center, "radius": g.radius,
                     "phi_max_rad": g.phi_max, "phi_max_deg": _deg(g.phi_max)},
        "guaranteed": guaranteed,
    }


def _multiloop_record(res: MultiLoopResult, label: str) -> dict:
    (gmin, gmax), pm = res.guaranteed_gm, res.guaranteed_pm
    guaranteed = {"gamma_min": gmin, "gamma_max": gmax, "gamma_m": res.geometry.gamma_m,
                  "phi_m_rad": pm, "phi_m_deg": _deg(pm)}
    guaranteed.update(db_fields("gamma_min", gmin))
    guaranteed.update(db_fields("gamma_max", gmax))
    return {
        "points": label,
        "sigma": res.sigma,
        "n_channels": res.n_channels,
        "alpha": res.alpha_lower,
        "alpha_lower": res.alpha_lower,
        "alpha_upper": res.alpha_upper,
        "peak_upper": res.peak_upper,
        "peak_lower": res.peak_lower,
        "gap": res.gap,
        "inconclusive": res.inconclusive,
        "omega_crit": res.omega_crit,
        "omega_upper": res.omega_upper,
        "delta_worst": list(res.delta_worst),
        "f_worst": list(res.f_worst),
        "guaranteed": guaranteed,
    }


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(version=config.TOOL_VERSION, prog_name="dmkit")
@click.option("-v", "--verbose", count=True, help="More log output (-v info, -vv debug)")
def cli(verbose: int):
    """
    Classical, disk and multi-loop margins of LTI feedback loops.

    Every command reads a JSON model file and writes a JSON result document
    (or a CSV trace) to stdout or to --out.
    """
    logging.basicConfig(level=_LEVELS[min(verbose, len(_LEVELS) - 1)],
                        format=LOG_FORMAT, stream=sys.stderr)


@cli.command()
@click.argument("model")
@click.option("--out", "-o", default=None, help="Write the document to this path")
@reports_errors
def classical(model: str, out: str | None):
    """
    Gain-only and phase-only margins of a SISO loop.

    Examples:

        dmkit classical models/example1.json
    """
    mf = load_model_file(model)
    L = _siso_loop(mf)
    m = classical_margins(L)
    results = _classical_record(m)
    results["closed_loop_poles"] = sorted(poles(closed_loop(L)), key=lambda p: (p.real, p.imag))
    _emit(ResultDocument("classical", {"model": model}, mf.digest, results,
                         list(m.diagnostics)), out)


@cli.command()
@click.argument("model")
@click.option("--skew", "-s", type=float, default=0.0, show_default=True,
              help="Disk skew sigma")
@click.option("--worst-case", is_flag=True, help="Add the first-order destabilizing perturbation")
@click.option("--curve", type=int, default=None,
              help="Add N samples of the safe gain/phase boundary")
@click.option("--variation", type=float, nargs=2, default=None, metavar="GMIN GMAX",
              help="Check a gain variation [GMIN, GMAX]; sets the skew to match it")
@click.option("--phase-variation", type=float, default=None, metavar="DEG",
              help="Check a phase variation of +-DEG degrees (skew 0)")
@click.option("--out", "-o", default=None, help="Write the document to this path")
@reports_errors
def diskmargin(model: str, skew: float, worst_case: bool, curve: int | None,
               variation: tuple[float, float] | None, phase_variation: float | None,
               out: str | None):
    """
    Disk margin of a SISO loop for the disk skew sigma.

    Examples:

        dmkit diskmargin models/example1.json --skew 0 --worst-case

        dmkit diskmargin models/example1.json --variation 0.6 1.8
    """
    if variation is not None and phase_variation is not None:
        raise click.UsageError("--variation and --phase-variation are exclusive")
    wanted = None
    if variation is not None:
        wanted = disk_from_variation(*variation)
    elif phase_variation is not None:
        wanted = disk_from_phase(math.radians(phase_variation))
    if wanted is not None:
        skew = wanted.sigma
    mf = load_model_file(model)
    L = _siso_loop(mf)
    if wanted is not None:
        ok, res = tolerates_variation(L, wanted)
    else:
        res = disk_margin(L, skew)
    results = _disk_record(res)
    diagnostics: list[str] = []

    # independent grid check of the norm
    grid = default_grid(L, config.DEFAULT_GRID_POINTS * 10, include_sentinels=True)
    peak = float(np.nanmax(sigma_max(skewed_sensitivity(L, skew), grid.array, on_pole="nan")))
    results["alpha_grid"] = 1.0 / peak if peak > 0 else math.inf

    if worst_case and res.f0_is_infinite:
        diagnostics.append("f0 is infinite: L(j*omega_crit) = 0, no finite perturbation exists")
    elif worst_case:
        pert = worst_perturbation_lti(res.delta0, res.omega_crit, skew)
        report = verify_destabilizing(L, pert, res.omega_crit)
        results["worst_case"] = {
            "delta_hat": _tf_record(pert.delta_hat),
            "f_hat": _tf_record(pert.f_hat),
            "beta": pert.beta,
            "verification": {
                "verdict": report.verdict, "passed": report.passed,
                "nearest_pole": report.nearest_pole, "distance": report.distance,
                "tolerance": report.tolerance, "closed_loop_stable": report.closed_loop_stable,
            },
        }
        diagnostics.extend(report.diagnostics)
    if wanted is not None:
        wg = disk_geometry(wanted)
        results["variation"] = {"alpha": wanted.alpha, "sigma": wanted.sigma,
                                "gamma_min": wg.gamma_min, "gamma_max": wg.gamma_max,
                                "phi_max_deg": _deg(wg.phi_max), "tolerated": ok}
        if not ok:
            diagnostics.append(f"variation disk alpha={wanted.alpha:.6g} exceeds the disk margin "
                               f"{res.alpha:.6g}")
    if curve is not None:
        results["curve"] = [list(p) for p in safe_region_curve(res.spec, curve)]
    args = {"model": model, "skew": skew, "worst_case": worst_case, "curve": curve}
    if wanted is not None:
        args["variation"] = list(variation) if variation is not None else None
        args["phase_variation"] = phase_variation
    _emit(ResultDocument("diskmargin", args, mf.digest, results, diagnostics), out)


@cli.command()
@click.argument("model")
@click.option("--skew", "-s", type=float, default=0.0, show_default=True)
@click.option("--grid", "-g", default=None, help="N or lo:hi:N (rad/s)")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--out", "-o", default=None, help="Write the trace to this path")
@reports_errors
def trace(model: str, skew: float, grid: str | None, fmt: str, out: str | None):
    """
    Frequency-dependent disk margins, one row per frequency.

    Columns: omega, alpha, gamma_min, gamma_max, gamma_m, phi_m_deg.
    """
    mf = load_model_file(model)
    L = _siso_loop(mf)
    tr = freq_margin_trace(L, skew, _grid(grid, L))
    columns = {
        "omega": tr.grid.array,
        "alpha": tr.alpha_of_omega,
        "gamma_min": [g[0] for g in tr.gm_of_omega],
        "gamma_max": [g[1] for g in tr.gm_of_omega],
        "gamma_m": tr.gamma_m_of_omega,
        "phi_m_deg": [_deg(p) for p in tr.pm_of_omega],
    }
    if fmt == "csv":
        write_text(table_csv(columns), out, lambda t: click.echo(t, nl=False))
        return
    diagnostics = [f"grid point {tr.grid.points[i]:g} rad/s hit a pole" for i in tr.flags]
    results = {k: list(v) for k, v in columns.items()}
    args = {"model": model, "skew": skew, "grid": grid}
    _emit(ResultDocument("trace", args, mf.digest, results, diagnostics), out)


@cli.command()
@click.argument("model")
@click.option("--points", "-p", default="input", show_default=True,
              help="input, output, io, or a comma-separated channel list")
@click.option("--skew", "-s", type=float, default=0.0, show_default=True)
@click.option("--grid", "-g", default=None, help="N or lo:hi:N (rad/s)")
@click.option("--out", "-o", default=None, help="Write the document to this path")
@reports_errors
def mimo(model: str, points: str, skew: float, grid: str | None, out: str | None):
    """
    Multi-loop disk margin plus loop-at-a-time margins of every channel.

    Examples:

        dmkit mimo models/satellite.json --points io
    """
    mf = load_model_file(model)
    where = as_points(points)
    sys_m = build_m(mf.model, mf.controller, where, skew)
    res = multiloop_margin(sys_m, None if grid is None else FrequencyGrid.parse(grid, sys_m.M))
    results = _multiloop_record(res, sys_m.points)
    diagnostics: list[str] = []
    if res.inconclusive:
        diagnostics.append(f"inconclusive-gap: mu bounds differ by {100 * res.gap:.1f}%")

    locations = [Points.INPUT, Points.OUTPUT] if mf.has_controller else [Points.INPUT]
    table = []
    p, m = mf.model.shape
    for loc in locations:
        count = m if loc is Points.INPUT or not mf.has_controller else p
        for ch in range(count):
            try:
                cm, dm = loop_at_a_time(mf.model, mf.controller, ch, loc, skew)
            except DmkitError as e:
                diagnostics.append(f"loop-at-a-time {loc.value} {ch}: {e}")
                continue
            table.append({"location": loc, "channel": ch,
                          "g_lower": cm.g_lower, "g_upper": cm.g_upper,
                          "phi_upper_deg": _deg(cm.phi_upper), "disk_alpha": dm.alpha})
    results["loop_at_a_time"] = table
    args = {"model": model, "points": points, "skew": skew, "grid": grid}
    _emit(ResultDocument("mimo", args, mf.digest, results, diagnostics), out)


@cli.command()
@click.argument("model")
@click.option("--skew", "-s", "skews", type=float, multiple=True,
              help="Disk skew sigma; repeat for several disks (default 0)")
@click.option("--grid", "-g", default=None, help="N or lo:hi:N (rad/s) for the Nyquist samples")
@click.option("--out", "-o", default=None, help="Write the Nyquist samples CSV to this path")
@reports_errors
def exclusion(model: str, skews: tuple[float, ...], grid: str | None, out: str | None):
    """
    Nyquist exclusion disks at the disk margin, plus Nyquist samples of L.

    Examples:

        dmkit exclusion models/example1.json -s -1 -s 0 -s 1 --out nyquist.csv
    """
    mf = load_model_file(model)
    L = _siso_loop(mf)
    skews = skews or (0.0,)
    g = _grid(grid, L)
    values = freq_response(L, g.array, on_pole="nan")[:, 0, 0]
    finite = values[np.isfinite(values)]

    disks = []
    for sigma in skews:
        res = disk_margin(L, sigma)
        ex = nyquist_exclusion(DiskSpec(res.alpha, sigma))
        f0 = res.f0
        tangency = 0j if res.f0_is_infinite else (-1.0 / f0 if f0 != 0 else complex(math.inf, 0))
        disks.append({
            "sigma": sigma, "alpha": res.alpha, "center": ex.center, "radius": ex.radius,
            "left": ex.left, "right": ex.right, "omega_crit": res.omega_crit,
            "tangency": tangency,
            "tangency_gap": float(np.min(np.abs(finite - ex.center)) - ex.radius),
        })
    results = {"disks": disks,
               "min_return_difference": float(np.min(np.abs(1.0 + finite))),
               "nyquist_samples": len(g)}
    if out is None:
        results["nyquist"] = [{"omega": w, "L": v} for w, v in zip(g.points, values)]
    else:
        write_text(table_csv({"omega": g.array, "re": values.real, "im": values.imag}),
                   out, click.echo)
    args = {"model": model, "skew": list(skews), "grid": grid, "out": out}
    _emit(ResultDocument("exclusion", args, mf.digest, results), None)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit status."""
    try:
        rv = cli.main(args=argv, prog_name="dmkit", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except DmkitError as e:
        click.echo(f"error: {e}", err=True)
        return e.exit_code
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
