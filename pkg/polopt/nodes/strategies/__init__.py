"""
步长策略包：PMD 与 PDA 共用的步长 / 权重 / 正则化系数规则
- CurvatureSpec (曲率常数)
- PmdSchedule (η_k, β_k)
- PdaSchedule (β_k, λ_k)
"""

from .schedules import CurvatureSpec, PmdSchedule, PdaSchedule

__all__ = ["CurvatureSpec", "PmdSchedule", "PdaSchedule"]
