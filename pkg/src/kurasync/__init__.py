"""Consensus-based analysis and simulation of oscillator synchronization.

Core library: network spectra (`graph`), continuous protocols and the
fixed-step integrator (`dynamics`), discrete average consensus (`nodac`),
synchronization metrics and error bounds (`analysis`), pilot-tone
carrier/timing sync (`icas`), and the scenario file format (`scenario`).
A FastAPI service (`kurasync.service`) exposes the runs over HTTP and the
command line (`kurasync.cli`) is a thin client over it.
"""

from .analysis import (
    ConsensusLine,
    DecompositionReport,
    ErrorBoundReport,
    bound_alltoall,
    bound_arbitrary,
    bound_dynamic,
    bound_gamma,
    consensus_frequency,
    decompose_error,
    detect_transient_end,
    fit_consensus,
    max_mutual_difference,
    order_parameter,
    phase_error,
    residual_gamma,
    wrap_phase,
)
from .dynamics import (
    OscillatorBank,
    ProtocolSpec,
    Trajectory,
    dynamic_consensus_rhs,
    extended_kuramoto_rhs,
    integrate,
    kuramoto_rhs,
    rk4_step,
    static_consensus_rhs,
)
from .graph import (
    IncidenceData,
    Network,
    SpectralData,
    build_network,
    incidence,
    is_balanced,
    is_connected,
    laplacian,
    spectral,
)
from .icas import (
    IcasConfig,
    IcasGains,
    IcasResult,
    Transceiver,
    measure_pair,
    run_icas,
)
from .nodac import (
    NodacState,
    nodac_init,
    nodac_run,
    nodac_step,
    nth_difference,
    stable_weights,
)
from .scenario import (
    Scenario,
    bundled_scenario,
    bundled_scenario_names,
    load_scenario,
    parse_scenario,
    with_overrides,
)

__version__ = "0.1.0"
