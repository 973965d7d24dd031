"""
异常定义

模拟流水线中各模块抛出的异常类型。CLI 根据异常类型决定退出码：
数值不可行返回 1，配置 / 输入输出错误返回 2。
"""

from typing import Optional


class SESimError(Exception):
    """所有 SESim 异常的基类"""


class ConfigurationError(SESimError, ValueError):
    """配置值非法（范围、缺失字段、步长下溢、空扫描规格等）"""


class DataFormatError(SESimError, ValueError):
    """数据文件格式错误"""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path:
            location += f"{path}"
        if line is not None:
            location += f" 第 {line} 行"
        super().__init__(f"{location}: {message}" if location else message)


class UnitError(SESimError, ValueError):
    """单位标签未知或不兼容"""


class TimeRangeError(SESimError, ValueError):
    """时间或核间距超出数据范围"""


class CapacityError(SESimError, ValueError):
    """量子比特数超过稠密矩阵上限"""


class SingularMatrixElementError(SESimError, ValueError):
    """相位算符矩阵元 φ01 为零"""


class NonNormalizableError(SESimError, ValueError):
    """耦合张量 J_xx + J_yy = 0，无法归一化"""


class DomainError(SESimError, ValueError):
    """λ 非正或 t_qc 映射非单调"""


class GeneratorError(SESimError, ValueError):
    """生成元采样不是厄米矩阵"""


class InputError(SESimError, ValueError):
    """度量 / 截面计算的输入不合法"""


class InfeasibleScheduleError(SESimError, RuntimeError):
    """速率约束迭代未收敛"""

    def __init__(self, message: str, segment: Optional[int] = None, quantity: Optional[str] = None):
        self.segment = segment
        self.quantity = quantity
        super().__init__(message)
