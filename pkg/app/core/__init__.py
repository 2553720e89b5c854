# app/core package: Hankel matrices and the Willems least-squares solve
from app.core.hankel import (  # noqa: F401
    HankelMatrix,
    HankelModel,
    MinNormSolution,
    MinNormSolver,
    Signal,
    build_hankel,
    build_model,
    is_persistently_exciting,
    min_norm_solve,
    numeric_rank,
    pinv_norm,
    shift_hankel,
)
