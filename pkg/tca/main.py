from typing import Optional

import click
import structlog

from tca.cli.router import register_commands
from tca.core.config import get_settings
from tca.core.logging import setup_logging

settings = get_settings()


@click.group()
@click.version_option("1.0.0", prog_name=settings.APP_NAME)
@click.option("--log-level", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Override TCA_LOG_LEVEL.")
def cli(log_level: Optional[str]):
    """时间合约自动机：校验、展平、冲突分析与模拟"""
    setup_logging(log_level)
    structlog.get_logger(__name__).debug("Starting command", app=settings.APP_NAME)


register_commands(cli)


def main():
    cli()
