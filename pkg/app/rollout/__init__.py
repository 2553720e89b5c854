# app/rollout package: data-driven rollouts and the self-consistency protocol
from app.rollout.engine import (  # noqa: F401
    DepthSweepRow,
    RolloutResult,
    RolloutState,
    depth_sweep,
    prediction_error_split,
    rollout,
    self_consistency_rmse,
)
