from typing import Optional

import click

from tca.cli.common import ExitCode, handle_errors, prune_option, resolve_prune
from tca.services.documents import export_dot, load_automaton
from tca.services.flatten import flatten, prune_unsat


@click.command("export-dot")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--flattened", is_flag=True, help="Export the flattened automaton instead.")
@prune_option
@click.option("--out", "out", type=click.Path(dir_okay=False), default=None,
              help="Write the DOT text here instead of stdout.")
@handle_errors
def export_dot_command(path: str, flattened: bool, prune: Optional[bool], out: Optional[str]):
    """导出 Graphviz DOT 图"""
    m = load_automaton(path)
    if flattened:
        flat = flatten(m)
        if resolve_prune(prune):
            flat = prune_unsat(flat)
        m = flat.automaton
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.writelines(export_dot(m))
    else:
        click.echo("".join(export_dot(m)), nl=False)
    return ExitCode.OK
