"""NOMA uplink vehicle selection and federated learning simulator."""
from .allocation import (
    PowerAllocation,
    SelectionResult,
    full_set_allocate,
    oma_select,
    oracle_max_selection,
    select_and_allocate,
)
from .channel import ChannelProcess, ChannelSnapshot, VehicleState, advance_positions, sample_channel_gain, snapshot
from .noma import (
    DecodeOutcome,
    OrderedPowers,
    chain_feasible,
    joining_ratio_upper_bound,
    max_decodable_count,
    min_power_assignment,
    sic_decode,
)

__version__ = "0.1.0"
