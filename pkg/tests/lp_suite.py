"""Fixed LP cases with hand-derived answers, shared by the unit and acceptance tests."""
from dataclasses import dataclass

import numpy as np

from crsmdp.simplex import LpProblem, LpStatus


@dataclass
class LpCase:
    name: str
    problem: LpProblem
    status: LpStatus
    value: float | None = None
    y: tuple | None = None  # only set when the optimum is unique


def _p(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None):
    return LpProblem(np.array(c, float), A_eq, b_eq, A_ub, b_ub)


def lp_cases() -> list[LpCase]:
    return [
        LpCase("single upper bound", _p([-1], A_ub=[[1]], b_ub=[1]), LpStatus.OPTIMAL, -1.0, (1.0,)),
        LpCase("negative equality", _p([0], A_eq=[[1]], b_eq=[-1]), LpStatus.INFEASIBLE),
        LpCase("equality plus covering row",
               _p([1, 1], A_eq=[[1, 2]], b_eq=[4], A_ub=[[-3, -1]], b_ub=[-2]),
               LpStatus.OPTIMAL, 2.0, (0.0, 2.0)),
        LpCase("unbounded ray", _p([-1, 0], A_ub=[[1, -1]], b_ub=[1]), LpStatus.UNBOUNDED),
        # Beale's example cycles under the textbook largest-coefficient rule
        LpCase("Beale cycling",
               _p([-0.75, 150, -0.02, 6],
                  A_ub=[[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]],
                  b_ub=[0, 0, 1]),
               LpStatus.OPTIMAL, -0.05, (0.04, 0.0, 1.0, 0.0)),
        LpCase("Klee-Minty n=3",
               _p([-4, -2, -1], A_ub=[[1, 0, 0], [4, 1, 0], [8, 4, 1]], b_ub=[5, 25, 125]),
               LpStatus.OPTIMAL, -125.0, (0.0, 0.0, 125.0)),
        LpCase("redundant equality rows",
               _p([1, -1], A_eq=[[1, 1], [2, 2]], b_eq=[1, 2]),
               LpStatus.OPTIMAL, -1.0, (0.0, 1.0)),
        LpCase("contradictory inequalities", _p([1], A_ub=[[1], [-1]], b_ub=[1, -2]), LpStatus.INFEASIBLE),
        LpCase("degenerate vertex",
               _p([-1, -1], A_ub=[[1, 0], [0, 1], [1, 1]], b_ub=[1, 1, 2]),
               LpStatus.OPTIMAL, -2.0, (1.0, 1.0)),
        LpCase("balanced transportation",
               _p([8, 6, 10, 9, 12, 13],
                  A_eq=[[1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1],
                        [1, 0, 0, 1, 0, 0], [0, 1, 0, 0, 1, 0], [0, 0, 1, 0, 0, 1]],
                  b_eq=[20, 30, 10, 25, 15]),
               LpStatus.OPTIMAL, 465.0, (0.0, 20.0, 0.0, 10.0, 5.0, 15.0)),
        LpCase("no rows", _p([1, 2]), LpStatus.OPTIMAL, 0.0, (0.0, 0.0)),
        LpCase("unbounded along equality", _p([-1, 0], A_eq=[[1, -1]], b_eq=[0]), LpStatus.UNBOUNDED),
    ]
