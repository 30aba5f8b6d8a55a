import csv
import io
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Sequence

import click
from pydantic import ValidationError

from .config import Settings, settings
from .utils import FocalPointError, InvalidParameterError, SolverFailureError

logger = logging.getLogger("fkmcone")

FORMATS = ["json", "csv", "text"]
PROFILE_COLUMNS = ["t", "beta", "frob_sq", "trace", "det_min"]
_HANDLER_NAME = "fkmcone-cli"


def _setup_logging(level: str) -> None:
    for h in list(logger.handlers):
        if h.get_name() == _HANDLER_NAME:
            logger.removeHandler(h)
    h = logging.StreamHandler()
    h.set_name(_HANDLER_NAME)
    h.setFormatter(
        logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%dT:%H:%M:%S",
        )
    )
    logger.addHandler(h)
    logger.setLevel(level)


class IntRange(click.ParamType):
    """Inclusive integer range ``a:b``, a list ``a,b,c`` or a single value."""

    name = "range"

    def convert(self, value: Any, param, ctx) -> list[int]:
        if isinstance(value, list):
            return value
        try:
            if ":" in value:
                lo, hi = (int(v) for v in value.split(":", 1))
                return list(range(lo, hi + 1))
            return [int(v) for v in value.split(",") if v.strip()]
        except ValueError:
            self.fail(f"{value!r} is not like 2:12 or 3,3,3", param, ctx)


@contextmanager
def _translate_errors() -> Iterator[None]:
    try:
        yield
    except (InvalidParameterError, FocalPointError, ValidationError) as e:
        raise click.UsageError(str(e)) from e
    except SolverFailureError as e:
        raise click.ClickException(str(e)) from e


def _config(ctx: click.Context, **overrides: Any) -> Settings:
    config: Settings = ctx.obj["config"]
    update = {k: v for k, v in overrides.items() if v is not None}
    return config.model_copy(update=update) if update else config


def _flatten(record: dict[str, Any]) -> dict[str, Any]:
    return {
        k: json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v
        for k, v in record.items()
    }


def _render(
    records: list[dict[str, Any]],
    fmt: str,
    columns: Sequence[str] | None = None,
    title: str | None = None,
    single: bool = True,
) -> str:
    """Format ``records`` as JSON, CSV or a plain-text table."""
    if fmt == "json":
        payload: Any = records[0] if single and len(records) == 1 else records
        return json.dumps(payload, indent=2) + "\n"

    rows = [_flatten(r) for r in records]
    if columns is None:
        columns = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    from rich.console import Console
    from rich.table import Table

    table = Table(title=title)
    if single and len(rows) == 1:
        table.add_column("field")
        table.add_column("value")
        for key in columns:
            table.add_row(key, str(rows[0].get(key)))
    else:
        for key in columns:
            table.add_column(key)
        for r in rows:
            table.add_row(*(str(r.get(key)) for key in columns))
    buf = io.StringIO()
    console = Console(
        file=buf, width=160, color_system=None, force_terminal=False, highlight=False
    )
    console.print(table)
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text)


def _system(m: int | None, k: int | None, system_file: Path | None):
    from .clifford import build_system, load_system

    if system_file is not None:
        return load_system(system_file)
    if m is None or k is None:
        raise click.UsageError("give either --m and --k or --system")
    return build_system(m, k)


def _output_options(func):
    func = click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Write the report to this file instead of stdout.",
    )(func)
    func = click.option(
        "--format",
        "fmt",
        type=click.Choice(FORMATS),
        default="json",
        help="Report format.",
        show_default=True,
    )(func)
    return func


def _system_options(func):
    func = click.option(
        "--system",
        "system_file",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Clifford system JSON written by `fkmcone construct`.",
    )(func)
    func = click.option(
        "--k",
        type=int,
        default=None,
        help="Multiplicity k >= 1.",
    )(func)
    func = click.option(
        "--m",
        type=int,
        default=None,
        help="Generator count plus one, m >= 2.",
    )(func)
    return func


def _sampling_options(samples: int, samples_help: str):
    def decorate(func):
        func = click.option(
            "--seed",
            default=0,
            type=int,
            help="Seed of the sampling run.",
            show_default=True,
        )(func)
        func = click.option(
            "--samples",
            default=samples,
            type=int,
            help=samples_help,
            show_default=True,
        )(func)
        return func

    return decorate


@click.group()
@click.option(
    "--log-level",
    default=None,
    type=click.Choice(["ERROR", "WARNING", "INFO", "DEBUG"], case_sensitive=False),
    help="Logging verbosity level (defaults to LOG_LEVEL of fkmcone.toml).",
)
@click.option(
    "-v",
    "--verbose",
    count=True,
    help="Lower the log level (-v INFO, -vv DEBUG).",
)
@click.pass_context
def cli_app(ctx, log_level, verbose):
    """Numerical certificates for cones over FKM isoparametric hypersurfaces."""
    level = (log_level or settings.LOG_LEVEL).upper()
    if verbose:
        level = "DEBUG" if verbose > 1 else "INFO"
    _setup_logging(level)
    ctx.ensure_object(dict)
    ctx.obj["config"] = settings


@cli_app.command()
@click.option("--m", type=int, required=True, help="Generator count plus one, m >= 2.")
@click.option("--k", type=int, required=True, help="Multiplicity k >= 1.")
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the system to this file instead of stdout.",
)
def construct(m, k, out):
    """Build the Clifford system (m, k) and emit it as JSON."""
    from .clifford import build_system, save_system, verify_relations

    with _translate_errors():
        system = build_system(m, k)
        report = verify_relations(system)
    if not report.passed:
        raise click.ClickException(f"relations fail: {report}")
    if out is None:
        click.echo(json.dumps(system.to_dict()))
    else:
        save_system(system, out)


@cli_app.command()
@_system_options
@_sampling_options(1000, "Number of sampled points.")
@click.option(
    "--tol",
    default=None,
    type=float,
    help="Override the identity tolerance.",
)
@click.option(
    "--level",
    default=None,
    type=float,
    help="Sample every point on this level instead of random levels.",
)
@click.option(
    "--workers",
    default=1,
    type=int,
    help="Sampling threads.",
    show_default=True,
)
@_output_options
@click.pass_context
def verify(ctx, m, k, system_file, samples, seed, tol, level, workers, fmt, out):
    """Check the isoparametric and isonormal identities on sampled points."""
    from .foliation import verify_samples
    from .utils import timed

    config = _config(ctx, IDENTITY_TOL=tol)
    with _translate_errors(), timed("verify"):
        system = _system(m, k, system_file)
        summary = verify_samples(
            system, samples, seed, level=level, config=config, workers=workers
        )
    _emit(_render([summary.model_dump(mode="json")], fmt, title="identities"), out)
    ctx.exit(0 if summary.passed else 1)


@cli_app.command()
@_system_options
@_sampling_options(4, "Points on the minimal level.")
@click.option(
    "--t-points",
    default=9,
    type=int,
    help="Points of the determinant profile.",
    show_default=True,
)
@_output_options
@click.pass_context
def curvature(ctx, m, k, system_file, samples, seed, t_points, fmt, out):
    """Estimate alpha^2 and tabulate the determinant profile p(t)."""
    import numpy as np

    from .foliation import foliation_params, sample_level_point
    from .frames import alpha_sq, build_frame, det_profile, slice_curvatures

    config = _config(ctx)
    with _translate_errors():
        system = _system(m, k, system_file)
        params = foliation_params(system)
        estimate = alpha_sq(system, samples, seed=seed, config=config)
        p = sample_level_point(system, params.c, seed, index=0)
        frame = build_frame(system, p, config)
        t_grid = np.linspace(0.0, 1.0 / np.sqrt(estimate.alpha_sq), t_points)
        profile = det_profile(system, frame, t_grid, config=config)
    rows = [
        {"t": t, "beta": b, "frob_sq": f, "trace": tr, "det_min": p}
        for t, b, f, tr, p in zip(
            profile.t.tolist(),
            profile.beta.tolist(),
            profile.frob_sq.tolist(),
            profile.trace.tolist(),
            profile.p.tolist(),
        )
    ]
    if fmt == "json":
        kappas = np.round(slice_curvatures(system.m, params.n), 12)
        record = {
            "m": system.m,
            "k": system.k,
            "n": params.n,
            **estimate.model_dump(mode="json"),
            "slice_curvatures": sorted(set(kappas.tolist())),
            "profile": rows,
        }
        text = _render([record], fmt)
    else:
        text = _render(rows, fmt, columns=PROFILE_COLUMNS, title="p(t)", single=False)
    _emit(text, out)
    ctx.exit(0 if abs(estimate.alpha_sq - estimate.closed_form) <= 1e-4 else 1)


@cli_app.command()
@click.option("--dim", type=int, default=None, help="Cone dimension k >= 3.")
@click.option("--alpha2", type=float, default=None, help="Curvature bound alpha^2.")
@click.option(
    "--profile",
    type=click.Choice(["bound-F", "limit-form", "table-12", "numeric"]),
    default="bound-F",
    help="Lower bound for the determinant profile.",
    show_default=True,
)
@_system_options
@click.option(
    "--seed",
    default=0,
    type=int,
    help="Seed of the minimal-level point (numeric profile).",
    show_default=True,
)
@click.option(
    "--points",
    default=200,
    type=int,
    help="Tabulation points of the numeric profile.",
    show_default=True,
)
@_output_options
@click.pass_context
def vanishing(ctx, dim, alpha2, profile, m, k, system_file, seed, points, fmt, out):
    """Solve for the vanishing angle of a cone of dimension --dim.

    With --profile numeric the determinant profile is tabulated on the
    minimal level of the system (--m --k or --system); --dim and --alpha2
    then default to 2n and the profile's alpha^2.
    """
    import math

    from .lawlor import Profile, VanishingAngleQuery, vanishing_angle

    if alpha2 is not None and alpha2 < 0:
        raise click.BadParameter("must be >= 0", param_hint="--alpha2")
    config = _config(ctx)
    with _translate_errors():
        if profile == Profile.NUMERIC.value:
            from .foliation import foliation_params, sample_level_point
            from .frames import build_frame, numeric_profile

            system = _system(m, k, system_file)
            params = foliation_params(system)
            frame = build_frame(
                system, sample_level_point(system, params.c, seed), config
            )
            profile_fn = numeric_profile(system, frame, points=points, config=config)
            query = VanishingAngleQuery(
                dim=dim or 2 * params.n,
                alpha=math.sqrt(profile_fn.alpha_sq if alpha2 is None else alpha2),
                profile=Profile.NUMERIC,
                profile_fn=profile_fn,
            )
        else:
            if dim is None or alpha2 is None:
                raise click.UsageError(f"--profile {profile} needs --dim and --alpha2")
            query = VanishingAngleQuery(
                dim=dim, alpha=math.sqrt(alpha2), profile=Profile(profile)
            )
        result = vanishing_angle(query, config)
    _emit(_render([result.model_dump(mode="json")], fmt, title="vanishing"), out)
    ctx.exit(0 if result.exists else 1)


@cli_app.command()
@_system_options
@click.option(
    "--n",
    type=int,
    default=None,
    help="Sphere dimension; with --m gives the closed form only.",
)
@_sampling_options(20, "Points for the geodesic scan.")
@_output_options
@click.pass_context
def radius(ctx, m, k, system_file, n, samples, seed, fmt, out):
    """Normal radius in closed form, cross-checked by a geodesic scan."""
    from .foliation import foliation_params, sample_level_point
    from .radius import first_return, normal_radius

    config = _config(ctx)
    if n is not None:
        if m is None:
            raise click.UsageError("--n needs --m")
        with _translate_errors():
            closed = normal_radius(m, n)
        _emit(_render([closed.model_dump(mode="json")], fmt, title="radius"), out)
        return

    with _translate_errors():
        system = _system(m, k, system_file)
        params = foliation_params(system)
        closed = normal_radius(params.m, params.n)
        scans = [
            first_return(
                system, sample_level_point(system, params.c, seed, index=i), config
            )
            for i in range(samples)
        ]
    thetas = [s.theta_first for s in scans]
    deviation = max((abs(t - closed.N_rad) for t in thetas), default=0.0)
    first = min(scans, key=lambda s: s.theta_first, default=None)
    record = {
        **closed.model_dump(mode="json"),
        "k": system.k,
        "samples": samples,
        "seed": seed,
        "theta_first": None if first is None else first.theta_first,
        "residuals": None if first is None else first.residuals,
        "scan_max": max(thetas, default=None),
        "max_deviation": deviation,
        "scans": [s.model_dump(mode="json") for s in scans],
    }
    _emit(_render([record], fmt, title="radius"), out)
    ctx.exit(0 if deviation <= 1e-6 else 1)


@cli_app.command()
@click.option("--m", type=int, default=None, help="Generator count plus one, m >= 2.")
@click.option("--k", type=int, default=None, help="Multiplicity k >= 1.")
@click.option(
    "--factors",
    type=IntRange(),
    default=None,
    help="Product factors n_i, e.g. 3,3,3,3.",
)
@_output_options
@click.pass_context
def certify(ctx, m, k, factors, fmt, out):
    """Certify an FKM cone (--m --k) or a minimal product cone (--factors)."""
    from .certify import (
        FKM_COLUMNS,
        PRODUCT_COLUMNS,
        Verdict,
        certify_fkm,
        certify_product,
    )

    config = _config(ctx)
    with _translate_errors():
        if factors is not None:
            cert = certify_product(factors, config)
            columns = PRODUCT_COLUMNS
        elif m is not None and k is not None:
            cert = certify_fkm(m, k, config)
            columns = FKM_COLUMNS
        else:
            raise click.UsageError("give either --m and --k or --factors")
    if fmt == "json":
        text = _render([cert.model_dump(mode="json")], fmt)
    else:
        text = _render([cert.csv_row()], fmt, columns=columns, title="certificate")
    _emit(text, out)
    codes = {Verdict.CERTIFIED: 0, Verdict.INCONCLUSIVE: 1, Verdict.INVALID: 2}
    ctx.exit(codes[cert.verdict])


@cli_app.command()
@click.option(
    "--m",
    "m_values",
    type=IntRange(),
    default=None,
    help="Range of m, e.g. 2:12.",
)
@click.option(
    "--k",
    "k_values",
    type=IntRange(),
    default=None,
    help="Range of k, e.g. 1:8.",
)
@click.option(
    "--dim",
    "dims",
    type=IntRange(),
    default=None,
    help="Product cone dimensions, e.g. 21:100.",
)
@click.option(
    "--workers",
    default=1,
    type=int,
    help="Worker threads.",
    show_default=True,
)
@_output_options
@click.pass_context
def sweep(ctx, m_values, k_values, dims, workers, fmt, out):
    """Certificate table over an (m, k) grid or over product cone dimensions."""
    from .certify import FKM_COLUMNS, PRODUCT_COLUMNS, sweep_products
    from .certify import sweep as sweep_fkm
    from .utils import timed

    config = _config(ctx)
    with _translate_errors(), timed("sweep"):
        if dims is not None:
            certs = sweep_products(dims, workers=workers, config=config)
            columns = PRODUCT_COLUMNS
        elif m_values is not None and k_values is not None:
            certs = sweep_fkm(m_values, k_values, workers=workers, config=config)
            columns = FKM_COLUMNS
        else:
            raise click.UsageError("give either --m and --k ranges or --dim")
    if fmt == "json":
        text = _render([c.model_dump(mode="json") for c in certs], fmt, single=False)
    else:
        rows = [c.csv_row() for c in certs]
        text = _render(rows, fmt, columns=columns, title="sweep", single=False)
    _emit(text, out)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the command line with ``argv`` and return its exit code."""
    try:
        cli_app.main(
            args=list(argv) if argv is not None else None, prog_name="fkmcone"
        )
    except SystemExit as e:
        if isinstance(e.code, int):
            return e.code
        return 0 if e.code is None else 1
    return 0
