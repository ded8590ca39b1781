from typing import Optional
from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator


class Settings(BaseSettings):
    # 应用配置
    APP_NAME: str = "TCA Conflict Analyzer"
    DEBUG: bool = False

    # 报告样式: never / auto / always
    COLOR: str = "auto"

    # 日志配置
    LOG_LEVEL: str = "WARNING"
    LOG_FORMAT: str = "console"
    LOG_FILE: Optional[str] = None

    # 展平与分析
    PRUNE_BY_DEFAULT: bool = True
    MAX_FLAT_STATES: int = 100_000

    # 模糊测试
    FUZZ_WORKERS: int = 1

    # 随机生成参数默认值
    GEN_MAX_STATES: int = 5
    GEN_MAX_CLOCKS: int = 2
    GEN_MAX_NORMS: int = 4
    GEN_MAX_CONSTANT: int = 10
    GEN_ALPHABET_SIZE: int = 4
    GEN_TRACE_LENGTH: int = 8
    GEN_MAX_TIMESTAMP: int = 20

    model_config = SettingsConfigDict(
        env_prefix="TCA_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("COLOR")
    @classmethod
    def validate_color(cls, v):
        if v not in ("never", "auto", "always"):
            raise ValueError(f"COLOR must be never, auto or always, got {v!r}")
        return v

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v):
        if v not in ("console", "json"):
            raise ValueError(f"LOG_FORMAT must be console or json, got {v!r}")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return v

    @field_validator(
        "MAX_FLAT_STATES", "FUZZ_WORKERS", "GEN_MAX_STATES", "GEN_MAX_CLOCKS",
        "GEN_MAX_NORMS", "GEN_MAX_CONSTANT", "GEN_ALPHABET_SIZE",
        "GEN_TRACE_LENGTH", "GEN_MAX_TIMESTAMP",
    )
    @classmethod
    def ensure_positive(cls, v):
        if v < 1:
            raise ValueError("limits must be positive")
        return v


@lru_cache()
def get_settings():
    return Settings()
