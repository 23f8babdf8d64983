"""Sampled-data stabilization certificates for diagonal Riesz-spectral systems."""

__version__ = "0.1.0"

from .exceptions import *  # noqa: E402,F401,F403
from .spectral import DeltaOperator, RieszSystem, SpectrumSpec  # noqa: E402
from .assumptions import certify_tail, check_assumptions  # noqa: E402
from .transfer import ScanGrid, find_tau_star, scan_epsilon_c, scan_epsilon_d  # noqa: E402
from .stability import (  # noqa: E402
    PowerBoundProbe,
    decay_test,
    power_bound_integral,
    sampled_trajectory,
    unit_circle_test,
)
from .synthesis import build_example_system, example_input, place_poles, stabilize  # noqa: E402
from .harness import (  # noqa: E402
    SystemDescription,
    emit_csv,
    example_description,
    load_description,
    parse_description,
    run_pipeline,
)

__all__ = [
    "__version__",
    "SpectrumSpec", "RieszSystem", "DeltaOperator",
    "certify_tail", "check_assumptions",
    "ScanGrid", "scan_epsilon_c", "scan_epsilon_d", "find_tau_star",
    "PowerBoundProbe", "unit_circle_test", "power_bound_integral", "decay_test",
    "sampled_trajectory",
    "place_poles", "example_input", "stabilize", "build_example_system",
    "SystemDescription", "parse_description", "load_description", "example_description",
    "run_pipeline", "emit_csv",
]
