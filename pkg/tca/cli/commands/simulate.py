import click

from tca.cli.common import ExitCode, echo, handle_errors
from tca.models.contract import norm_ids
from tca.services.documents import load_automaton, load_trace, run_report_to_schema
from tca.services.semantics import run_trace


def _describe(c) -> str:
    valuation = ", ".join(f"{k}={v}" for k, v in c.valuation.to_dict().items())
    return f"{c.state} [{valuation}] P={{{norm_ids(c.persistent)}}} E={{{norm_ids(c.ephemeral)}}}"


@click.command("simulate")
@click.argument("automaton", type=click.Path(dir_okay=False))
@click.argument("trace", type=click.Path(dir_okay=False))
@click.option("--verbose", "-v", is_flag=True, help="Print the configuration after every event.")
@click.option("--json", "as_json", is_flag=True, help="Print the run report as JSON.")
@handle_errors
def simulate_command(automaton: str, trace: str, verbose: bool, as_json: bool):
    """执行轨迹：0 正常，1 出现冲突，4 规范被违反"""
    m = load_automaton(automaton)
    report = run_trace(m, load_trace(trace), run_id=trace)

    if report.violated:
        code = ExitCode.VIOLATION
    elif report.conflicts:
        code = ExitCode.CONFLICT
    else:
        code = ExitCode.OK

    if as_json:
        click.echo(run_report_to_schema(report).model_dump_json(indent=2))
        return code

    if verbose:
        echo(f"initial: {_describe(report.initial)}")
    if report.initial_conflict:
        first, second = report.initial_conflict
        echo(f"  conflict at initial configuration: {first.id} vs {second.id}", fg="yellow")

    for index, outcome in enumerate(report.outcomes):
        if outcome.is_violation:
            echo(f"[{index}] {outcome.event}: violation of "
                 f"{', '.join(n.id for n in outcome.violated)}", fg="red", bold=True)
            break
        if verbose:
            echo(f"[{index}] {outcome.event} -> {_describe(outcome.configuration)}")
        if outcome.conflict is not None:
            first, second = outcome.conflict
            echo(f"[{index}] {outcome.event}: conflict in {outcome.configuration.state} "
                 f"between {first.id} and {second.id}", fg="yellow")

    summary = {ExitCode.OK: "clean", ExitCode.CONFLICT: "conflict flagged",
               ExitCode.VIOLATION: "violated"}[code]
    echo(f"result: {summary} after {len(report.outcomes)} event(s)",
         fg="green" if code == ExitCode.OK else None)
    return code
