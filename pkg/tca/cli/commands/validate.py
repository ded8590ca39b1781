import click

from tca.cli.common import ExitCode, echo, handle_errors, report_invalid
from tca.core.exceptions import WellFormednessError
from tca.services.contract import validate_wellformed
from tca.services.documents import load_automaton


@click.command("validate")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the validation report as JSON.")
@handle_errors
def validate_command(path: str, as_json: bool):
    """检查自动机文件是否良构"""
    m = load_automaton(path)
    report = validate_wellformed(m)
    if as_json:
        click.echo(report.model_dump_json(indent=2))
        return ExitCode.OK if report.valid else ExitCode.INVALID
    if not report.valid:
        report_invalid(WellFormednessError(report.message, report))
        return ExitCode.INVALID
    echo(f"{path}: {report.message}", fg="green")
    echo(f"  states: {len(m.states)}  transitions: {len(m.transitions)}  norms: {len(m.norms)}")
    return ExitCode.OK
