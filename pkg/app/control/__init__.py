# app/control package: Riccati solver and trajectory-space servo design
from app.control.riccati import dlqr_gain, riccati_residual, solve_dare  # noqa: F401
from app.control.traj_lqr import (  # noqa: F401
    ClosedLoopResult,
    LqrDesign,
    ServoController,
    TrajSpaceModel,
    build_traj_model,
    closed_loop_eval,
    design_servo,
    lqr_experiment,
)
