import csv
import io
import json
import logging
import math
import sys
from functools import wraps

import click
import numpy as np

from analysis import photon_statistics
from config import get_settings, use_settings
from deformation import e_values, f_values, radius_of_convergence
from errors import NLCSError, UsageError, error_payload
from families import CATALOG, TABLE_ID, dual_of, family_ids, make_family, rho_log, table_family
from states import (
    METHODS,
    canonical_state,
    cs_displacement,
    cs_series,
    evolve,
    gk_state,
    route_fidelity,
    t_apply,
)
from suites import SUITES, run_suite, suite_passed


log = logging.getLogger("nlcs.cli")

MAX_TABLE_LEVEL = 10_000


class NLCSGroup(click.Group):
    """Turns every error into a JSON object on stderr with the documented exit code."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.exceptions.Exit:
            raise
        except click.UsageError as e:
            _fail(ctx, {"error": "UsageError", "message": e.format_message(), "exit_code": 2})
        except NLCSError as e:
            _fail(ctx, error_payload(e))


def _fail(ctx, payload: dict):
    click.echo(json.dumps(payload), err=True)
    ctx.exit(payload["exit_code"])


def _parse_complex(ctx, param, value):
    if value is None:
        return None
    parts = value.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise click.BadParameter(f"expected 're,im', got '{value}'")


def _parse_overrides(ctx, param, values):
    overrides = {}
    for item in values:
        name, sep, raw = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected name=value, got '{item}'")
        overrides[name.strip()] = raw.strip()
    return overrides


def family_options(fn):
    """Family selection flags shared by every command that works on one family."""
    options = [
        click.option("--family", "family_id", required=True, help="Family id (see `catalog`)."),
        click.option("--p", type=float, default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--q", type=float, default=None),
        click.option("--kappa", type=float, default=None),
        click.option("--m", type=float, default=None),
        click.option("--dual", is_flag=True, help="Use the dual family (f -> 1/f)."),
        click.option("--rho", default=None, help="Comma-separated rho(0..N) for --family table."),
    ]
    for option in reversed(options):
        fn = option(fn)

    @wraps(fn)
    def wrapper(family_id, p, alpha, beta, q, kappa, m, dual, rho, **kwargs):
        params = {"p": p, "alpha": alpha, "beta": beta, "q": q, "kappa": kappa, "m": m}
        kwargs["family"] = _resolve_family(family_id, {k: v for k, v in params.items() if v is not None}, dual, rho)
        return fn(**kwargs)

    return wrapper


def _resolve_family(family_id: str, params: dict, dual: bool, rho):
    if family_id == TABLE_ID:
        if rho is None:
            raise UsageError("--family table needs --rho")
        try:
            values = [float(v) for v in rho.split(",")]
        except ValueError:
            raise UsageError(f"--rho must be comma-separated numbers, got '{rho}'")
        return table_family(values, dual)
    if family_id not in family_ids():
        raise UsageError(f"Unknown family id '{family_id}'")
    return make_family(family_id, dual=dual, **params)


def common_options(fn):
    fn = click.option("--tol", "overrides", multiple=True, callback=_parse_overrides,
                      help="Setting override name=value, repeatable.")(fn)
    fn = click.option("--output", type=click.Path(dir_okay=False), default=None,
                      help="Write to a file instead of stdout.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)(fn)
    return fn


def _apply_overrides(overrides: dict):
    if not overrides:
        return
    try:
        use_settings(get_settings().with_overrides(overrides))
    except KeyError as e:
        raise UsageError(str(e.args[0]))
    except ValueError as e:
        raise UsageError(str(e))


def _finite(value):
    value = float(value)
    return value if math.isfinite(value) else None


def _emit(data, fmt: str, output, columns=None):
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns or list(data[0]), extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in data:
            writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        text = buffer.getvalue().rstrip("\n")
    else:
        text = json.dumps(data, indent=2)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
        log.info(f"Wrote {output}")
    else:
        click.echo(text)


def _csv_cell(value):
    if isinstance(value, (dict, list)):
        return json.dumps(value)
    if value is None:
        return ""
    return value


@click.group(cls=NLCSGroup)
@click.option("--verbose", is_flag=True, help="Debug logging on stderr.")
def cli(verbose):
    """Nonlinear coherent-state toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


@cli.command()
@common_options
def catalog(fmt, output, overrides):
    """List every catalogued family."""
    _apply_overrides(overrides)
    rows = []
    for entry in CATALOG.values():
        rows.append({
            "id": entry.id,
            "title": entry.title,
            "params": [{"name": s.name, "default": s.default, "domain": s.domain} for s in entry.params],
            "region": entry.region,
            "rho": entry.rho_text,
            "f": entry.f_text,
            "H": entry.h_text,
        })
    _emit(rows, fmt or get_settings().output_format, output)


@cli.command()
@family_options
@click.option("--n-max", type=int, default=10, show_default=True)
@common_options
def table(family, n_max, fmt, output, overrides):
    """Rows of n, rho(n), f(n), e(n) and f_dual(n)."""
    _apply_overrides(overrides)
    if not 0 <= n_max <= MAX_TABLE_LEVEL:
        raise UsageError(f"--n-max must lie in 0..{MAX_TABLE_LEVEL}")
    dim = n_max + 1
    levels = np.arange(dim, dtype=float)
    log_rho = rho_log(family, levels)
    with np.errstate(over="ignore"):
        rho = np.exp(log_rho)
    f = f_values(family, dim)
    f_dual = f_values(dual_of(family), dim)
    e = e_values(family, dim)
    rows = []
    for n in range(dim):
        rows.append({
            "n": n,
            "rho": _finite(rho[n]),
            "log_rho": float(log_rho[n]),
            "f": _finite(f[n]) if n else None,
            "e": _finite(e[n]),
            "f_dual": _finite(f_dual[n]) if n else None,
        })
    _emit(rows, fmt or get_settings().output_format, output)


@cli.command()
@family_options
@click.option("--z", callback=_parse_complex, default=None, help="Complex label 're,im'.")
@click.option("--J", "J", type=float, default=None, help="GK action label.")
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--t", type=float, default=0.0, show_default=True, help="Evolve by exp(-iHt).")
@click.option("--method", default="series", show_default=True)
@click.option("--dim", type=int, default=None, help="Fixed dim (default: automatic).")
@click.option("--force", is_flag=True, help="Bypass the tail-mass and radius guards.")
@common_options
def state(family, z, J, gamma, t, method, dim, force, fmt, output, overrides):
    """Build one coherent state and emit its amplitudes."""
    _apply_overrides(overrides)
    if method not in METHODS:
        raise UsageError(f"Unknown method '{method}'; choose from {', '.join(METHODS)}")
    if (z is None) == (J is None):
        raise UsageError("Give exactly one of --z or --J")

    if J is not None:
        if method != "series":
            raise UsageError("GK states are only built by series")
        result = gk_state(family, J, gamma, dim, force)
        series = result
    else:
        series = cs_series(family, z, dim, force)
        if method == "displacement":
            result = cs_displacement(family, z, dim, force)
        elif method == "t-operator":
            result = t_apply(family, series.dim, "forward", canonical_state(z, series.dim, force=True))
        else:
            result = series
    if t:
        result = evolve(result, t)
        series = evolve(series, t)

    payload = result.to_dict()
    payload["log_normalization"] = _finite(result.log_normalization)
    if result.method != "series":
        payload["fidelity_vs_series"] = route_fidelity(result, series)
    if (fmt or get_settings().output_format) == "csv":
        rows = [{"n": n, "re": a[0], "im": a[1], "probability": a[0] ** 2 + a[1] ** 2}
                for n, a in enumerate(payload["amplitudes"])]
        _emit(rows, "csv", output)
    else:
        _emit(payload, "json", output)


@cli.command()
@family_options
@click.option("--suite", default="all", show_default=True, help=f"One of {', '.join(SUITES)}.")
@common_options
@click.pass_context
def verify(ctx, family, suite, fmt, output, overrides):
    """Run a verification suite; exit 0 iff every check passed or was inconclusive."""
    _apply_overrides(overrides)
    if suite not in SUITES:
        raise UsageError(f"Unknown suite '{suite}'; choose from {', '.join(SUITES)}")
    reports = run_suite(suite, family)
    rows = [r.to_dict() for r in reports]
    columns = ["check_id", "family", "params", "inputs", "residual", "tolerance", "passed", "inconclusive", "notes"]
    _emit(rows, fmt or get_settings().output_format, output, columns)
    if not suite_passed(reports):
        ctx.exit(1)


@cli.command()
@family_options
@click.option("--zmax", type=float, required=True)
@click.option("--steps", type=int, default=10, show_default=True)
@click.option("--dim", type=int, default=None)
@common_options
def sweep(family, zmax, steps, dim, fmt, output, overrides):
    """Photon statistics along real z from zmax/steps to zmax."""
    _apply_overrides(overrides)
    if steps < 1 or not zmax > 0:
        raise UsageError("--steps must be >= 1 and --zmax > 0")
    estimate = radius_of_convergence(family)
    log.debug(f"Sweep on {family.label} (radius {estimate.value}, {estimate.status})")
    rows = []
    for abs_z in np.linspace(zmax / steps, zmax, steps):
        result = cs_series(family, float(abs_z), dim)
        stats = photon_statistics(result)
        rows.append({
            "abs_z": float(abs_z),
            "mandel_q": stats.q,
            "mean_n": stats.mean,
            "normalization": _finite(np.exp(result.log_normalization)) if result.log_normalization < 709 else None,
            "log_normalization": _finite(result.log_normalization),
            "dim": result.dim,
        })
    _emit(rows, fmt or "csv", output)


def main(argv=None) -> int:
    try:
        # without standalone mode click hands back ctx.exit codes as the return value
        rv = cli.main(args=argv, prog_name="nlcs", standalone_mode=False)
    except click.ClickException as e:
        click.echo(json.dumps({"error": "UsageError", "message": e.format_message(), "exit_code": 2}), err=True)
        return 2
    except click.exceptions.Abort:
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
