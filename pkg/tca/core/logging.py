import structlog
import logging
import sys
from pathlib import Path
from typing import Optional

from tca.core.config import get_settings


def setup_logging(level_name: Optional[str] = None):
    """配置结构化日志系统"""
    settings = get_settings()
    level = getattr(logging, (level_name or settings.LOG_LEVEL).upper())

    # 标准输出只留给命令结果，日志写到stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=level,
        force=True,
    )

    # 控制台渲染器自行格式化 exc_info，只有 JSON 输出需要先转成字符串
    if settings.LOG_FORMAT == "json":
        exception_processors = [structlog.processors.format_exc_info]
        renderer = structlog.processors.JSONRenderer()
    else:
        exception_processors = []
        renderer = structlog.dev.ConsoleRenderer(
            colors=False, exception_formatter=structlog.dev.plain_traceback,
        )

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            *exception_processors,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    # 可选的文件处理器用于持久化日志
    if settings.LOG_FILE:
        log_path = Path(settings.LOG_FILE)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter("%(message)s"))
        logging.getLogger().addHandler(file_handler)

    return structlog.get_logger()


def get_run_logger(run_id: str):
    """获取特定轨迹运行的日志记录器"""
    return structlog.get_logger("run").bind(run_id=run_id)


def get_suite_logger(suite: str, seed: int):
    """获取特定模糊测试套件的日志记录器"""
    return structlog.get_logger("fuzz").bind(suite=suite, seed=seed)
