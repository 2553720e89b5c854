# app/plant package: ground-truth LTI systems
from app.plant.lti import (  # noqa: F401
    LtiSystem,
    NoiseSpec,
    benchmark_plant,
    c2d_zoh,
    gaussian_signal,
    second_order_plant,
    simulate,
    tf_to_ss,
)
