"""
polopt: 策略镜像下降 (PMD) 与策略对偶平均 (PDA) 求解库

三层架构：
- 顶层：各阶段 Module（geometry / mdp / environments / policy_eval / pmd / pda）
- 中层：步长策略（strategies）
- 底层：Operators（具体的几何、评估与更新技术）
"""

__version__ = "0.1.0"
