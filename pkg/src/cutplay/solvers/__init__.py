"""LP, MILP and LCP kernels."""
from cutplay.solvers.lcp import (
    LcpEnumeration,
    LcpOutcome,
    LcpProblem,
    solve_lcp_enumerate,
    solve_lcp_lemke,
)
from cutplay.solvers.lp import LinearProgram, LpOutcome, solve_lp
from cutplay.solvers.milp import solve_milp

__all__ = [
    "LinearProgram",
    "LpOutcome",
    "solve_lp",
    "solve_milp",
    "LcpProblem",
    "LcpOutcome",
    "LcpEnumeration",
    "solve_lcp_lemke",
    "solve_lcp_enumerate",
]
