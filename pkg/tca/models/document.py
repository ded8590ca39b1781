from pydantic import BaseModel, ConfigDict, Field, RootModel
from typing import Optional, List, Dict, Tuple, Literal
from enum import Enum

from tca.models.contract import Modality

ConstraintSpec = Tuple[str, str, str]
GuardSpec = List[List[ConstraintSpec]]


class NormSpec(BaseModel):
    """规范的文档模型"""
    model_config = ConfigDict(extra="forbid")

    id: Optional[str] = Field(None, description="规范ID，缺省时自动生成")
    modality: Modality = Field(..., description="模态 O/P/F")
    party: str = Field(..., min_length=1, description="参与方")
    action: str = Field(..., min_length=1, description="动作")
    guard: GuardSpec = Field(default_factory=lambda: [[]], description="时间窗口，区域列表")


class StateSpec(BaseModel):
    """状态的文档模型"""
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1, description="状态ID")
    pers: List[NormSpec] = Field(default_factory=list, description="持久规范")
    eph: List[NormSpec] = Field(default_factory=list, description="瞬时规范")


class TransitionSpec(BaseModel):
    """迁移的文档模型"""
    model_config = ConfigDict(extra="forbid")

    source: str = Field(..., description="源状态")
    party: str = Field(..., min_length=1, description="参与方")
    action: str = Field(..., min_length=1, description="动作")
    attempted: bool = Field(False, description="是否为尝试动作(仅展平自动机)")
    guard: GuardSpec = Field(default_factory=lambda: [[]], description="迁移守卫")
    reset: List[str] = Field(default_factory=list, description="重置为0的时钟")
    target: str = Field(..., description="目标状态")


class AutomatonDocument(BaseModel):
    """时间合约自动机文档"""
    model_config = ConfigDict(extra="forbid")

    version: str = Field("1", description="格式版本")
    kind: Literal["contract", "flattened"] = Field("contract", description="自动机类型")
    clocks: List[str] = Field(default_factory=list, description="时钟(全局时钟gamma隐含)")
    parties: List[str] = Field(..., description="参与方集合")
    actions: List[str] = Field(..., description="动作集合")
    initial: str = Field(..., description="初始状态")
    states: List[StateSpec] = Field(..., min_length=1, description="状态列表")
    transitions: List[TransitionSpec] = Field(default_factory=list, description="迁移列表")


class TraceEventSpec(BaseModel):
    """轨迹事件"""
    model_config = ConfigDict(extra="forbid")

    party: str = Field(..., min_length=1, description="参与方")
    action: str = Field(..., min_length=1, description="动作")
    attempted: bool = Field(False, description="是否为尝试动作")
    at: str = Field(..., description="全局时间戳(十进制字符串)")


class TraceDocument(RootModel[List[TraceEventSpec]]):
    """时间轨迹文档"""


class ViolationEntry(BaseModel):
    """良构性违例"""
    kind: str = Field(..., description="违例类型")
    message: str = Field(..., description="描述")
    location: Optional[str] = Field(None, description="位置")


class ValidationReport(BaseModel):
    """良构性验证报告"""
    valid: bool = Field(..., description="是否良构")
    message: str = Field(..., description="验证消息")
    violations: List[ViolationEntry] = Field(default_factory=list, description="违例列表")


class Verdict(str, Enum):
    CONFLICT_FREE = "ConflictFree"
    POTENTIAL_CONFLICTS = "PotentialConflicts"


class FindingReport(BaseModel):
    """冲突发现"""
    state: str = Field(..., description="原自动机中的状态")
    flat_states: List[str] = Field(..., description="出现冲突的展平状态")
    pair: Tuple[str, str] = Field(..., description="冲突规范ID对")
    modalities: Tuple[str, str] = Field(..., description="冲突规范模态")
    party: str = Field(..., description="参与方")
    action: str = Field(..., description="动作")
    witness: GuardSpec = Field(..., description="见证区域")
    sample: Dict[str, str] = Field(..., description="见证区域中的样本赋值")


class StatsReport(BaseModel):
    """分析统计"""
    states: int = Field(..., description="展平状态数")
    transitions: int = Field(..., description="展平迁移数")
    pruned_states: int = Field(0, description="剪枝移除的状态数")
    pruned_transitions: int = Field(0, description="剪枝移除的迁移数")
    elapsed_seconds: float = Field(..., description="耗时(秒)")
    rss_megabytes: Optional[float] = Field(None, description="常驻内存(MB)")


class AnalysisReport(BaseModel):
    """冲突分析报告"""
    verdict: Verdict = Field(..., description="结论")
    findings: List[FindingReport] = Field(default_factory=list, description="潜在冲突")
    stats: StatsReport = Field(..., description="统计")


class ConfigurationReport(BaseModel):
    """运行时配置快照"""
    state: str = Field(..., description="状态")
    valuation: Dict[str, str] = Field(..., description="时钟赋值")
    persistent: List[str] = Field(..., description="活跃持久规范")
    ephemeral: List[str] = Field(..., description="活跃瞬时规范")


class StepReport(BaseModel):
    """单步结果"""
    index: int = Field(..., description="事件序号")
    event: str = Field(..., description="事件")
    configuration: Optional[ConfigurationReport] = Field(None, description="后继配置")
    violated: Optional[List[str]] = Field(None, description="被违反的规范")
    conflict: Optional[Tuple[str, str]] = Field(None, description="冲突规范对")


class RunReportSchema(BaseModel):
    """轨迹运行报告"""
    initial: ConfigurationReport = Field(..., description="初始配置")
    initial_conflict: Optional[Tuple[str, str]] = Field(None, description="初始配置冲突")
    steps: List[StepReport] = Field(default_factory=list, description="各步结果")
    violated: bool = Field(..., description="是否发生违反")
    conflicts: List[int] = Field(default_factory=list, description="出现冲突的步序号(-1为初始配置)")


class SuiteResult(BaseModel):
    """模糊测试套件结果"""
    suite: str = Field(..., description="套件名")
    passed: int = Field(0, description="通过数")
    failed: int = Field(0, description="失败数")
    vacuous: int = Field(0, description="空真通过数")
    failing_seeds: List[int] = Field(default_factory=list, description="失败种子")
    messages: Dict[int, str] = Field(default_factory=dict, description="失败信息")
    elapsed_seconds: float = Field(0.0, description="耗时(秒)")
