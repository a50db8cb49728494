"""
polopt 节点包

- geometry: Bregman 几何、正则项、近端子问题
- mdp: 表格 MDP 上的精确计算
- environments: 环境
- policy_eval: 随机策略评估与函数逼近
- pmd / pda: 两类策略优化方法
- strategies: 步长策略
"""
