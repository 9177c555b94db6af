"""Throughput of a periodically switched bottleneck and its positive-system cascade."""

from .cascade import (
    PositiveLinearSystem,
    cascade_periodic_orbit,
    chain_system,
    dc_gain,
    random_positive_system,
    validate_positive_system,
    verify_average_response,
)
from .core import (
    AffineMap,
    ArcLevel,
    BottleneckParams,
    PeriodicOrbit,
    average_outflow,
    contraction_factor,
    dual_gain,
    decay_inequality_sides,
    periodic_fixed_point,
    periodic_gain,
    scalar_step_exact,
    segment_affine_map,
    segment_integral,
    simulate_transient,
    throughput_upper_bound,
    two_arc_loop,
)
from .exceptions import DomainError, InadmissibleSignalError, NumericalError
from .optimize import search_schedule
from .rfm import RfmParams, compare_reduction, rfm_rhs, simulate_rfm
from .signals import (
    SwitchingSignal,
    build_signal,
    check_admissible,
    constant_signal,
    excursion_signal,
    fast_switching_family,
    random_signal,
)

__version__ = "0.1.0"
