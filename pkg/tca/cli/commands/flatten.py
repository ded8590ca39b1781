from pathlib import Path
from typing import Optional

import click

from tca.cli.common import ExitCode, echo, handle_errors, prune_option, resolve_prune
from tca.services.documents import dump_automaton, load_automaton
from tca.services.flatten import flatten, prune_unsat


@click.command("flatten")
@click.argument("path", type=click.Path(dir_okay=False))
@prune_option
@click.option("--out", "out", type=click.Path(dir_okay=False), default=None,
              help="Write the flattened automaton here instead of stdout.")
@handle_errors
def flatten_command(path: str, prune: Optional[bool], out: Optional[str]):
    """把持久规范展平为瞬时规范并输出 JSON"""
    m = load_automaton(path)
    flat = flatten(m)
    before = (len(flat.flat_states), len(flat.automaton.transitions))
    if resolve_prune(prune):
        flat = prune_unsat(flat)
    after = (len(flat.flat_states), len(flat.automaton.transitions))

    text = dump_automaton(flat.automaton)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)

    # 计数写到 stderr，保证 stdout 是合法 JSON
    to_err = out is None
    echo(f"states: {before[0]} -> {after[0]}", err=to_err)
    echo(f"transitions: {before[1]} -> {after[1]}", err=to_err)
    return ExitCode.OK
