"""Density-evolution, threshold and potential-function analysis of
spatially-coupled MacKay-Neal codes over generalized erasure channels."""

__version__ = "0.1.0"

from .channel import (
    ChannelKind,
    ChannelModel,
    CustomChannelSpec,
    builtin,
    load_custom_channel,
    phi,
    phi_integral,
    resolve_channel,
    sir,
    sir_limit,
)
from .coupled import CouplingConfig, DeProfile, bp_threshold, rate, sc_de_run, sc_de_step
from .de_core import DegreeProfile, DeState, de_run, de_step, f_map, g_map, regular_ldpc_de_step
from .errors import (
    ChannelConfigError,
    DomainError,
    ExcludedPointError,
    NoSolutionError,
    ScmnError,
    ValidationError,
)
from .potential import (
    PotentialSample,
    ThresholdReport,
    energy_gap,
    eps_of_x1,
    phi_bracket_of_x1,
    potential_curve,
    potential_threshold,
    potential_U,
    psi_of_x1,
    trivial_U,
    x2_of_x1,
)
