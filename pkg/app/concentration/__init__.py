# app/concentration package: random Hankel concentration experiments
from app.concentration.gershgorin import (  # noqa: F401
    GershgorinCertificate,
    epsilon_n,
    gershgorin_certificate,
    inverse_gram_eigenvalues,
    random_hankel,
    scale_bound,
)
from app.concentration.gram import (  # noqa: F401
    GramDecomposition,
    gram_decomposition,
    quadratic_form_moments,
    selection_matrix,
    selection_matrix_check,
)
from app.concentration.sweeps import (  # noqa: F401
    ConcentrationSample,
    EventFrequencies,
    concentration_samples,
    hw_event_frequencies,
    lambda_growth_sweep,
    singular_value_sweep,
)
