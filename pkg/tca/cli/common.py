import functools
from enum import IntEnum
from typing import Optional

import click
import structlog

from tca.core.config import get_settings
from tca.core.exceptions import DocumentError, TCAError, TraceError, WellFormednessError

logger = structlog.get_logger(__name__)


class ExitCode(IntEnum):
    OK = 0
    CONFLICT = 1
    INVALID = 2
    INTERNAL = 3
    VIOLATION = 4


def _color() -> Optional[bool]:
    mode = get_settings().COLOR
    if mode == "never":
        return False
    if mode == "always":
        return True
    return None


def echo(text: str = "", err: bool = False, **style) -> None:
    """按 TCA_COLOR 输出(auto 时由 click 判断终端)"""
    if style and _color() is not False:
        text = click.style(text, **style)
    click.echo(text, err=err, color=_color())


def report_invalid(e: TCAError) -> None:
    echo(f"error: {e}", err=True, fg="red", bold=True)
    report = getattr(e, "report", None)
    if report is not None:
        for v in report.violations:
            where = f" [{v.location}]" if v.location else ""
            echo(f"  {v.kind}{where}: {v.message}", err=True)


def handle_errors(func):
    """把异常映射为退出码：输入错误为2，其余为3"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            code = func(*args, **kwargs)
        except (DocumentError, WellFormednessError, TraceError) as e:
            report_invalid(e)
            code = ExitCode.INVALID
        except TCAError as e:
            logger.error("Command failed", error=str(e), error_type=type(e).__name__)
            echo(f"internal error: {e}", err=True, fg="red", bold=True)
            code = ExitCode.INTERNAL
        except Exception as e:
            logger.exception("Unexpected failure")
            echo(f"internal error: {type(e).__name__}: {e}", err=True, fg="red", bold=True)
            code = ExitCode.INTERNAL
        click.get_current_context().exit(int(code or ExitCode.OK))

    return wrapper


def resolve_prune(prune: Optional[bool]) -> bool:
    return get_settings().PRUNE_BY_DEFAULT if prune is None else prune


def prune_option(func):
    return click.option(
        "--prune/--no-prune", default=None,
        help="Prune unsatisfiable transitions (default from TCA_PRUNE_BY_DEFAULT).",
    )(func)
