from typing import Optional


class TCAError(Exception):
    """所有分析器错误的基类"""


class ZoneError(TCAError):
    """时钟区域构造或运算错误"""


class WellFormednessError(TCAError):
    """自动机不满足良构条件"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DocumentError(TCAError):
    """JSON文档解析错误，带位置信息"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None,
                 column: Optional[int] = None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    def __str__(self):
        # 语法错误带行列；结构与语义错误只能定位到 JSON 路径
        if self.line is not None:
            return f"line {self.line}, column {self.column}: {self.args[0]}"
        if self.path is not None:
            return f"at JSON path {self.path}: {self.args[0]}"
        return str(self.args[0])


class TraceError(TCAError):
    """轨迹格式错误或事件时间倒退"""


class PreconditionError(TCAError):
    """调用前置条件不成立"""


class FlattenLimitError(TCAError):
    """展平状态数超出上限"""


class InternalError(TCAError):
    """内部不变量被破坏"""
