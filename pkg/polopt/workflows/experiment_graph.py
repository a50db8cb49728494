"""
使用 LangGraph 编排一次求解运行

    START → initialize → record ─┬─→ improve → record → ...
                                 └─→ END（k 达到 k_max）

节点只调用 operator 的 initialize / iterate / observe，
因此与 operator.run(k_max) 得到的轨迹完全一致。
"""

import operator
from typing import Annotated, Any, List, TypedDict

from langgraph.graph import END, START, StateGraph

from ..nodes.pmd_operators import BaseSolverOperator
from ..nodes.traces import Trace, TraceRecord


class ExperimentState(TypedDict):
    """图状态"""

    solver: Any
    k_max: int
    records: Annotated[List[TraceRecord], operator.add]


def build_experiment_graph(solver: BaseSolverOperator):
    """
    构建并编译实验图

    Args:
        solver: PMD / PDA operator

    Returns:
        编译后的图
    """

    def initialize(state: ExperimentState):
        return {"solver": solver.initialize()}

    def improve(state: ExperimentState):
        return {"solver": solver.iterate(state["solver"])}

    def record(state: ExperimentState):
        return {"records": [solver.observe(state["solver"])]}

    def should_continue(state: ExperimentState) -> str:
        return "improve" if len(state["records"]) <= state["k_max"] else END

    graph = StateGraph(ExperimentState)
    graph.add_node("initialize", initialize)
    graph.add_node("improve", improve)
    graph.add_node("record", record)
    graph.add_edge(START, "initialize")
    graph.add_edge("initialize", "record")
    graph.add_conditional_edges("record", should_continue, {"improve": "improve", END: END})
    graph.add_edge("improve", "record")
    return graph.compile()


def run_graph(solver: BaseSolverOperator, k_max: int, verbose: bool = False) -> Trace:
    """
    用 LangGraph 运行 k_max 次迭代

    Returns:
        Trace（与 solver.run(k_max) 相同）
    """
    if verbose:
        print(f"🚀 LangGraph 运行 {solver.name}: {k_max} 次迭代")
    app = build_experiment_graph(solver)
    app.invoke(
        {"solver": None, "k_max": int(k_max), "records": []},
        config={"recursion_limit": 2 * int(k_max) + 10},
    )
    return solver.finalize()
