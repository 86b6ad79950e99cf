"""Simulation of a linear-optical controlled-SWAP network for direct state estimation."""

__version__ = "0.1.0"

from .network import (  # noqa: E402
    OpticalConfig,
    hom_coincidence,
    ideal_coincidence_rate,
    ideal_visibility,
    optical_postselect,
    swap_operator,
)
from .states import DensityOp, PureState, parse_state  # noqa: E402

__all__ = [
    "DensityOp",
    "OpticalConfig",
    "PureState",
    "hom_coincidence",
    "ideal_coincidence_rate",
    "ideal_visibility",
    "optical_postselect",
    "parse_state",
    "swap_operator",
]
