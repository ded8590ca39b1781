from typing import Optional

import click

from tca.cli.common import ExitCode, echo, handle_errors
from tca.tasks.fuzz_tasks import SUITES, run_suite


@click.command("fuzz")
@click.option("--suite", type=click.Choice(sorted(SUITES)), required=True)
@click.option("--seed", type=int, default=0, show_default=True, help="First instance seed.")
@click.option("--count", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=None,
              help="Worker processes (default from TCA_FUZZ_WORKERS).")
@click.option("--traces", type=click.IntRange(min=0), default=None,
              help="Traces per automaton for theorem1/soundness.")
@handle_errors
def fuzz_command(suite: str, seed: int, count: int, workers: Optional[int], traces: Optional[int]):
    """按种子运行性质检查套件"""
    result = run_suite(suite, seed=seed, count=count, workers=workers, traces=traces)
    colour = "green" if result.failed == 0 else "red"
    echo(f"{suite}: passed {result.passed}, failed {result.failed}, vacuous {result.vacuous} "
         f"({result.elapsed_seconds:.2f}s)", fg=colour, bold=True)
    for failing in result.failing_seeds:
        echo(f"  seed {failing}: {result.messages.get(failing, 'failed')}", fg="red")
    return ExitCode.OK if result.failed == 0 else ExitCode.CONFLICT
