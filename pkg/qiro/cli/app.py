"""`qiro` command line: run pass pipelines, estimate resources, compare against the trace oracle."""

import json
import logging
import sys
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, Tuple

import click

from .. import __version__
from ..core.config import RunConfig, Settings, parse_program_arg
from ..core.constants import DEFAULT_ENTRY, LOG_LEVELS, QUANTUM_GATE_OPT_PARTS
from ..core.errors import PipelineError, QiroError, Trap
from ..core.logger import setup_logging
from ..models.verifier import verify
from ..services.oracle import parity
from ..services.parser import parse_file
from ..services.pipeline import PassContext, PassPipeline, emit, expand_flags
from ..services.printer import print_module
from ..services.resources import CostModel

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_TRAP = 3


def _fail(exc: Exception, code: int) -> None:
    for line in getattr(exc, "diagnostics", None) or [exc]:
        click.echo(f"error: {line}", err=True)
    sys.exit(code)


@contextmanager
def _reported_errors() -> Iterator[None]:
    """Map toolkit errors to exit codes: 1 for compile errors, 3 for interpreter traps."""
    try:
        yield
    except PipelineError as exc:
        raise click.UsageError(str(exc)) from exc
    except Trap as exc:
        _fail(exc, EXIT_TRAP)
    except (QiroError, OSError) as exc:
        _fail(exc, EXIT_ERROR)


def _configure(settings: Settings, log_level: Optional[str], log_json: bool) -> None:
    setup_logging(level=log_level or settings.log_level, json_format=log_json)


def _timing_lines(timings: Dict[str, float]) -> List[str]:
    lines = [f"time {name}: {seconds * 1000:.3f} ms" for name, seconds in timings.items()]
    lines.append(f"time total: {sum(timings.values()) * 1000:.3f} ms")
    return lines


@click.group()
@click.version_option(__version__, prog_name="qiro")
def cli():
    """QIRO quantum-classical compiler toolkit."""


@cli.command(context_settings={"ignore_unknown_options": True})
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("passes", nargs=-1, type=click.UNPROCESSED)
@click.option("--entry", default=DEFAULT_ENTRY, show_default=True, help="Entry symbol to interpret")
@click.option("--arg", "raw_args", multiple=True, metavar="NAME=VALUE", help="Entry input, bound by name")
@click.option("--emit", "emit_path", type=click.Path(dir_okay=False), help="Write the final module here")
@click.option("--print-ir", is_flag=True, help="Print the module after the last pass")
@click.option("--metric", type=click.Choice(["ops", "decomposed"]), default="ops", show_default=True)
@click.option("--cost-model", "cost_model_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON cost model; overrides --metric")
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON")
@click.option("--time", "time_stages", is_flag=True, help="Print per-stage wall time")
@click.option("--time-compile-only", is_flag=True, help="Like --time, leaving interpretation out")
@click.option("--verify-only", is_flag=True, help="Run the passes, then only report diagnostics")
@click.option("--disable", multiple=True, type=click.Choice(QUANTUM_GATE_OPT_PARTS),
              help="Leave a part of --quantum-gate-opt out")
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default=None)
@click.option("--log-json", is_flag=True, help="Log one JSON object per record")
def run(input_path: str, passes: Tuple[str, ...], entry: str, raw_args: Tuple[str, ...],
        emit_path: Optional[str], print_ir: bool, metric: str, cost_model_path: Optional[str],
        as_json: bool, time_stages: bool, time_compile_only: bool, verify_only: bool,
        disable: Tuple[str, ...], log_level: Optional[str], log_json: bool):
    """Run pass flags (e.g. --convert-mem-to-val --canonicalize or --default-pipeline) on INPUT_PATH."""
    settings = Settings.from_env()
    _configure(settings, log_level, log_json)
    try:
        config = RunConfig.from_cli(
            input_path, list(raw_args), entry=entry, pipeline=expand_flags(passes),
            cost_model_path=cost_model_path, metric=metric,
            output_mode="json" if as_json else "text", time_stages=time_stages or time_compile_only,
            time_compile_only=time_compile_only, disabled=list(disable), verify_only=verify_only,
            emit_path=emit_path, print_ir=print_ir,
        )
        if config.cost_model_path is not None:
            cost = CostModel.from_json_file(config.cost_model_path)
        else:
            cost = CostModel.named(config.metric)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    logger.debug(f"Pipeline: {' '.join(config.pipeline)}")

    with _reported_errors():
        context = PassContext(entry=config.entry, disabled=tuple(config.disabled),
                              fixpoint_cap=settings.fixpoint_cap, step_limit=settings.step_limit, cost=cost)
        pipeline = PassPipeline(config.pipeline, context)
        timings: Optional[Dict[str, float]] = {} if config.time_stages else None

        module = parse_file(str(config.input_path))
        module = pipeline.run(module, timings)

        if config.verify_only:
            diagnostics = verify(module)
            for diagnostic in diagnostics:
                click.echo(f"error: {diagnostic}", err=True)
            if diagnostics:
                sys.exit(EXIT_ERROR)
            click.echo(f"verified: {len(module.ops)} symbol(s)")
            return

        if config.emit_path is not None:
            emit(module, config.emit_path)
        if config.print_ir or (not pipeline.interprets and config.emit_path is None):
            click.echo(print_module(module), nl=False)

        output: Dict = {}
        if pipeline.interprets:
            interpret_timings = None if config.time_compile_only else timings
            try:
                report = pipeline.interpret(module, config.args, interpret_timings)
            except ValueError as exc:
                raise click.UsageError(str(exc)) from exc
            if config.output_mode == "json":
                output = report.to_dict()
            else:
                for line in report.lines():
                    click.echo(line)

        if timings is not None:
            if config.output_mode == "json":
                output["timings"] = {name: round(seconds, 6) for name, seconds in timings.items()}
            else:
                for line in _timing_lines(timings):
                    click.echo(line, err=True)
        if output:
            click.echo(json.dumps(output, indent=2))


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--entry", default=DEFAULT_ENTRY, show_default=True)
@click.option("--arg", "raw_args", multiple=True, metavar="NAME=VALUE")
@click.option("--disable", multiple=True, type=click.Choice(QUANTUM_GATE_OPT_PARTS),
              help="Leave a part of --quantum-gate-opt out of the static side")
@click.option("--json", "as_json", is_flag=True)
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default=None)
@click.option("--log-json", is_flag=True)
def oracle(input_path: str, entry: str, raw_args: Tuple[str, ...], disable: Tuple[str, ...],
           as_json: bool, log_level: Optional[str], log_json: bool):
    """Compare rotations cancelled by the default pipeline with the gate-trace oracle."""
    settings = Settings.from_env()
    _configure(settings, log_level, log_json)
    try:
        args = dict(parse_program_arg(a) for a in raw_args)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc

    with _reported_errors():
        module = parse_file(input_path)
        try:
            report = parity(module, entry, args, disable, settings.step_limit)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        if as_json:
            click.echo(json.dumps(report.to_dict(), indent=2))
        else:
            for line in report.lines():
                click.echo(line)


def main() -> None:
    cli(prog_name="qiro")


if __name__ == "__main__":
    main()
