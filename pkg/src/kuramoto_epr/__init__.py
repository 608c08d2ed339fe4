"""Mean-field Kuramoto synchronization, its linear stability spectrum, and CHSH evaluation."""

__version__ = "0.1.0"

from .bellchsh import (  # noqa: E402
    ChshScenario,
    McEstimate,
    chsh_value,
    correlation,
    deterministic_bound,
    malus_transmission,
    simulate_twin_photons,
)
from .ensemble import (  # noqa: E402
    FrequencyDistribution,
    OrderParameter,
    OscillatorEnsemble,
    init_phases,
    order_parameter,
    sample_frequencies,
)
from .meanfield import SimConfig, Trajectory, drift_velocity, fit_growth_rate, simulate, step_rk4  # noqa: E402
from .spectrum import (  # noqa: E402
    CoherenceTrajectoryParams,
    SpectrumResult,
    b_coefficient,
    coherence_trajectory,
    incoherent_residual,
    spectrum_delta,
    spectrum_general,
)
from .vectorsync import (  # noqa: E402
    EpsilonChain,
    RotationOperator,
    VectorState,
    chain_angle,
    polarization_direction,
    resultant_vectors,
    rotation,
    vector_order_parameter,
)
