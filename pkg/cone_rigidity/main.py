"""
Cone rigidity toolkit - command-line entry point

Commands:
- modes: enumerate the mode blocks of the cross-section
- indicial: indicial roots and leading vectors per block
- classify: weighted-L² classification of every Frobenius branch
- audit: per-block rigidity audit (witness mode when beta < 1)
- solve: radial solves of L u = φ with the norm bound
- verify: finite-difference identity suite on the exact chart

Reports go to stdout (or --output); logs go to stderr.
Exit codes: 0 success, 2 validation error, 3 witness outcome, 4 internal check failure.
"""

import logging
import sys
from typing import Any, Dict, Optional

import click

from cone_rigidity.schemas import RunConfig
from cone_rigidity.services.rigidity_pipeline import RigidityPipeline
from cone_rigidity.utils.errors import EXIT_INTERNAL, ConeRigidityError, error_payload, exit_code_for
from cone_rigidity.utils.logging_config import setup_logging
from cone_rigidity.utils.report_writer import render_json, write_report

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run config"),
    click.option("--n", type=int, help="Dimension of the cone-manifold"),
    click.option("--alpha", type=float, help="Cone angle in radians"),
    click.option("--beta", type=float, help="Frequency normalization 2pi/alpha"),
    click.option("--tube-radius", type=float, help="Radius a of the model tube"),
    click.option("--length", type=float, help="Circle length for n = 3"),
    click.option("--eigendata", type=str, help="Cross-section eigendata (JSON lines)"),
    click.option("--pmax", type=int, help="Largest |p| of generated circle blocks"),
    click.option("--qmax", type=int, help="Largest |q| of generated circle blocks"),
    click.option("--block", "block_kind", type=click.Choice(["coupled3", "coupled2", "scalar"])),
    click.option("--p", type=int, help="Angular index of the selected block"),
    click.option("--lambda-prime", type=float, help="Cross-section eigenvalue for coupled3"),
    click.option("--mu-prime", type=float, help="Cross-section eigenvalue for scalar"),
    click.option("--order", type=int, help="Frobenius truncation order"),
    click.option("--mesh-points", type=int, help="Radial mesh points"),
    click.option("--grading", type=float, help="Radial mesh grading power"),
    click.option("--rhs", type=click.Choice(["bump", "manufactured", "zero"])),
    click.option("--seed", type=int, help="Seed of the verification samples"),
    click.option("--samples", type=int, help="Random samples per identity"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"])),
    click.option("--output", type=str, help="Write the report to this path"),
    click.option("--timings", is_flag=True, default=False, help="Include stage timings"),
    click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False)),
]


def run_options(func):
    for option in reversed(_OPTIONS):
        func = option(func)
    return func


def _overrides(options: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    return {
        "geometry": {
            "n": options["n"],
            "alpha": options["alpha"],
            "beta": options["beta"],
            "tube_radius": options["tube_radius"],
            "length": options["length"],
            "eigendata": options["eigendata"],
        },
        "modes": {"p_max": options["pmax"], "q_max": options["qmax"]},
        "block": {
            "kind": options["block_kind"],
            "p": options["p"],
            "lambda_prime": options["lambda_prime"],
            "mu_prime": options["mu_prime"],
        },
        "solver": {
            "order": options["order"],
            "mesh_points": options["mesh_points"],
            "grading": options["grading"],
            "rhs": options["rhs"],
        },
        "verify": {"seed": options["seed"], "samples": options["samples"]},
        "output": {
            "format": options["fmt"],
            "path": options["output"],
            "timings": True if options["timings"] else None,
        },
    }


def execute(command: str, options: Dict[str, Any]) -> int:
    """Run one command and emit its report; returns the exit status"""
    setup_logging(options.get("log_level"))
    fmt: Optional[str] = options.get("fmt") or "json"
    try:
        config = RunConfig.load(options.get("config_path"), _overrides(options))
        fmt = config.output.format
        report, code = RigidityPipeline(config).run(command)
        text = write_report(report, fmt, config.output.path)
        if not config.output.path:
            click.echo(text, nl=False)
        return code
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_INTERNAL and not isinstance(e, ConeRigidityError):
            logger.exception(f"{command} failed unexpectedly: {e}")
        else:
            logger.error(f"{command} failed: {type(e).__name__}: {e}")
        if fmt == "json":
            click.echo(render_json(error_payload(e)), nl=False)
        return code


@click.group()
def cli():
    """Numerical rigidity analysis of hyperbolic cone-manifolds"""


def _command(name: str, doc: str):
    @run_options
    def command(**options):
        sys.exit(execute(name, options))

    command.__doc__ = doc
    return cli.command(name=name)(command)


_command("modes", "Enumerate the mode blocks of the cross-section")
_command("indicial", "Indicial roots with leading vectors and families")
_command("classify", "Weighted-L2 classification of every Frobenius branch")
_command("audit", "Per-block rigidity audit; witness mode when beta < 1")
_command("solve", "Radial solves of L u = phi with the (n-1) norm bound")
_command("verify", "Finite-difference identity suite on the exact chart")


if __name__ == "__main__":
    cli()
