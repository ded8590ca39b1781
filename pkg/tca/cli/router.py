import click

from tca.cli.commands import analyze, export_dot, flatten, fuzz, simulate, validate


def register_commands(group: click.Group) -> None:
    # 注册命令
    group.add_command(validate.validate_command)
    group.add_command(flatten.flatten_command)
    group.add_command(analyze.analyze_command)
    group.add_command(simulate.simulate_command)
    group.add_command(export_dot.export_dot_command)
    group.add_command(fuzz.fuzz_command)
