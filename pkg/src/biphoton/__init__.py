"""Polarisation correlations of filtered type-II SPDC photon pairs."""

from biphoton.errors import (
    AmbiguityError,
    BiphotonError,
    DegenerateInputError,
    NumericalConsistencyError,
    OracleResolutionError,
    QuadratureError,
    RegimeError,
    TagFormatError,
)
from biphoton.model import (
    CoincidenceRates,
    FilterSpec,
    HwpAngles,
    OperatingPoint,
    PairIntegrals,
    filter_amplitude,
    sinc_half,
)
from biphoton.physics import (
    asymptotic_integrals,
    correlation,
    diagonal_rates,
    general_rates,
    pair_integrals,
    rate_general_delta,
    single_mode_rates,
)

__version__ = "0.1.0"
