"""
结构化异常

所有异常都继承自内置的 ValueError / RuntimeError，调用方可以按需细分捕获。
"""

from typing import List, Optional

import numpy as np


class GeometryDomainError(ValueError):
    """动作不在几何的定义域内（例如单纯形分量为负）"""


class ProxConvergenceError(RuntimeError):
    """
    近端子问题求解器达到迭代上限

    Attributes:
        best: 目前最好的迭代点
        residual: 该点的投影梯度映射范数
    """

    def __init__(self, message: str, best: np.ndarray, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ScheduleError(ValueError):
    """
    步长策略违反收敛条件

    Attributes:
        rule: 违反的规则名（curvature_step / weighted_step / dual_curvature / ...）
        inequality: 违反的不等式
        iteration: 首次违反的迭代下标
    """

    def __init__(self, rule: str, inequality: str, iteration: Optional[int] = None, detail: str = ""):
        where = f"（k={iteration}）" if iteration is not None else ""
        message = f"步长策略违反条件 [{rule}]: {inequality}{where}"
        if detail:
            message += f"；{detail}"
        super().__init__(message)
        self.rule = rule
        self.inequality = inequality
        self.iteration = iteration


class StationaryDistributionError(RuntimeError):
    """幂迭代未收敛"""


class ConfigError(ValueError):
    """
    实验配置不合法

    Attributes:
        violations: 所有违反的约束
    """

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"配置不合法，共 {len(self.violations)} 处：\n{lines}")


class ResetUnsupportedError(ValueError):
    """环境不支持重置，无法按协议采样"""
