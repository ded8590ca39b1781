from typing import Optional

import click

from tca.cli.common import ExitCode, echo, handle_errors, prune_option, resolve_prune
from tca.services.analysis import analyze, verdict_to_report
from tca.services.documents import load_automaton
from tca.services.zones import render_guard


@click.command("analyze")
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the analysis report as JSON.")
@prune_option
@handle_errors
def analyze_command(path: str, as_json: bool, prune: Optional[bool]):
    """静态冲突分析：0 表示无冲突，1 表示存在潜在冲突"""
    m = load_automaton(path)
    result = analyze(m, prune=resolve_prune(prune))
    code = ExitCode.OK if result.conflict_free else ExitCode.CONFLICT

    if as_json:
        click.echo(verdict_to_report(result).model_dump_json(indent=2))
        return code

    if result.conflict_free:
        echo("verdict: ConflictFree", fg="green", bold=True)
    else:
        echo(f"verdict: PotentialConflicts ({len(result.findings)})", fg="yellow", bold=True)
    for finding in result.findings:
        first, second = finding.pair
        echo(f"  state {finding.state}: {first.modality.value} {first.id} vs "
             f"{second.modality.value} {second.id} on {first.party}:{first.action}", fg="yellow")
        echo(f"    witness: {render_guard(finding.witness)}")
        sample = ", ".join(f"{c}={v}" for c, v in finding.sample.to_dict().items())
        echo(f"    sample:  {sample}")
        echo(f"    flat states: {', '.join(fs.id for fs in finding.flat_states)}")
    stats = result.stats
    echo(f"flat states: {stats['states']} (pruned {stats['pruned_states']}), "
         f"transitions: {stats['transitions']} (pruned {stats['pruned_transitions']}), "
         f"{stats['elapsed_seconds']:.3f}s")
    return code
