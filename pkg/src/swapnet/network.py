"""Coincidence statistics of the two-HOM controlled-SWAP interferometer.

Two independent routes to the same numbers:

* the closed form ``r(phi) = 1 + eps * Tr(rho S) * cos(phi)``;
* a mode-level propagation of both photons through BS1..BS4 and the phase
  shifter, followed by post-selection on one photon in ``u3`` and one in ``d4``.

Path and polarization factorize (beam splitters are polarization
insensitive), so each photon carries a vector of path amplitudes and the
two-photon polarization state rides along untouched. A detection event at
output modes (m, n) has the Kraus operator

    K = alpha_a[m] alpha_b[n] * I + alpha_a[n] alpha_b[m] * S

where S swaps the two polarization qubits: if photon a is found in n its
polarization ends up in the second detector slot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmath
from .states import DensityOp

PROBABILITY_FLOOR = 1e-15

# Spatial modes after the first pair of beam splitters and after the second.
MID_MODES = ("u1", "d1", "u2", "d2")
OUT_MODES = ("u3", "d3", "u4", "d4")
DETECTORS = {"u3": "D2", "d3": "D1", "u4": "D3", "d4": "D4"}
ANALYSIS_PAIR = ("u3", "d4")
_U3, _D4 = (OUT_MODES.index(x) for x in ANALYSIS_PAIR)

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)
_SWAP_PERM = np.array([0, 2, 1, 3])
# 50:50 splitter with the reflection sign used throughout: port 0 -> (1, 1)/sqrt2,
# port 1 -> (1, -1)/sqrt2.
_BS = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class SwapWitness:
    matrix: np.ndarray


@dataclass(frozen=True)
class OpticalConfig:
    phase: float = 0.0
    distinguishability: float = 1.0  # weight of the interfering branch (1 = ideal HOM overlap)

    def __post_init__(self):
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        if not 0.0 <= self.distinguishability <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.distinguishability}")

    @property
    def epsilon(self) -> float:
        return self.distinguishability


@dataclass(frozen=True, eq=False)
class PostselectResult:
    conditional_state: DensityOp | None  # None when the event has (numerically) zero probability
    probability: float


def swap_operator() -> SwapWitness:
    return SwapWitness(_SWAP.copy())


def ideal_visibility(rho_ab: DensityOp) -> float:
    """Tr(rho_ab S); equals Tr(rho_a rho_b) for product inputs."""
    if rho_ab.dim != 4:
        raise qmath.DimensionError("visibility needs a two-qubit state")
    return float(np.real(np.trace(rho_ab.matrix @ _SWAP)))


def ideal_coincidence_rate(rho_ab: DensityOp, cfg: OpticalConfig) -> float:
    """Normalized D2-D4 coincidence rate, in [0, 2]."""
    return 1.0 + cfg.epsilon * ideal_visibility(rho_ab) * math.cos(cfg.phase)


# --- mode-level backend -------------------------------------------------------

def _fixed_stages() -> tuple[np.ndarray, np.ndarray]:
    """Transfer matrices of the two beam-splitter stages, phase shifter excluded.

    Stage 1 maps input ports (a, vac1, b, vac2) to (u1, d1, u2, d2): photon a
    enters BS1 through port 1 and photon b enters BS2 through port 0. Stage 2
    maps (u1, d1, u2, d2) to (u3, d3, u4, d4): BS3 mixes (u1, u2), BS4 mixes
    (d1, d2).
    """
    stage1 = np.zeros((4, 4), dtype=np.complex128)
    stage1[0:2, 0:2] = _BS
    stage1[2:4, 2:4] = _BS

    stage2 = np.zeros((4, 4), dtype=np.complex128)
    # rows: u3, d3, u4, d4 ; columns: u1, d1, u2, d2
    stage2[np.ix_([0, 1], [0, 2])] = _BS
    stage2[np.ix_([2, 3], [1, 3])] = _BS
    return stage1, stage2


_STAGE1, _STAGE2 = _fixed_stages()
_A_PORT, _B_PORT = 1, 2


def path_amplitudes(phase: float) -> tuple[np.ndarray, np.ndarray]:
    """Output-mode amplitudes (u3, d3, u4, d4) of photon a and photon b.

    The phase shifter acts on mode u1 between the two stages.
    """
    shifter = np.array([np.exp(1j * phase), 1.0, 1.0, 1.0], dtype=np.complex128)
    transfer = _STAGE2 @ (shifter[:, None] * _STAGE1)
    return transfer[:, _A_PORT], transfer[:, _B_PORT]


def pair_detection(rho_ab: DensityOp, alpha_a, alpha_b, m: int, n: int, epsilon: float):
    """Unnormalized post-selected state for one photon in mode m and one in mode n.

    With weight ``epsilon`` the two photon-to-detector assignments interfere;
    with weight ``1 - epsilon`` they add incoherently.
    """
    rho = rho_ab.matrix
    c_direct = alpha_a[m] * alpha_b[n]
    c_crossed = alpha_a[n] * alpha_b[m]
    # S permutes basis index 1 <-> 2, so S rho, rho S and S rho S are reindexings.
    swapped_both = rho[_SWAP_PERM][:, _SWAP_PERM]
    incoherent = abs(c_direct) ** 2 * rho + abs(c_crossed) ** 2 * swapped_both
    cross = c_direct * np.conj(c_crossed) * rho[:, _SWAP_PERM]
    return incoherent + epsilon * (cross + cross.conj().T)


def _postselect(unnormalized: np.ndarray) -> PostselectResult:
    prob = float(np.real(np.trace(unnormalized)))
    if prob < PROBABILITY_FLOOR:
        return PostselectResult(None, max(prob, 0.0))
    return PostselectResult(DensityOp.from_positive(unnormalized / prob), prob)


def coincidence_probability(rho_ab: DensityOp, cfg: OpticalConfig, pair=ANALYSIS_PAIR) -> float:
    """Probability of a coincidence between two distinct output modes, by name."""
    m, n = (OUT_MODES.index(x) for x in pair)
    if m == n:
        raise ValueError("coincidence needs two distinct output modes")
    alpha_a, alpha_b = path_amplitudes(cfg.phase)
    return float(np.real(np.trace(pair_detection(rho_ab, alpha_a, alpha_b, m, n, cfg.epsilon))))


def optical_postselect(rho_ab: DensityOp, cfg: OpticalConfig) -> PostselectResult:
    """Propagate through the interferometer and keep the (u3, d4) coincidences.

    The kept branch is -(e^{i phi} I + S)/4 applied to the polarization pair,
    so the coincidence probability is (1 + eps * v * cos phi) / 8.
    """
    if rho_ab.dim != 4:
        raise qmath.DimensionError("the network acts on a two-qubit state")
    alpha_a, alpha_b = path_amplitudes(cfg.phase)
    return _postselect(pair_detection(rho_ab, alpha_a, alpha_b, _U3, _D4, cfg.epsilon))


def hom_coincidence(rho_a: DensityOp, rho_b: DensityOp, epsilon: float) -> float:
    """Coincidence probability behind a single 50:50 beam splitter (HOM dip)."""
    if rho_a.dim != 2 or rho_b.dim != 2:
        raise qmath.DimensionError("HOM inputs are single-qubit states")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    joint = DensityOp.from_positive(qmath.kron(rho_a.matrix, rho_b.matrix))
    alpha_a, alpha_b = _BS[:, 0], _BS[:, 1]
    return float(np.real(np.trace(pair_detection(joint, alpha_a, alpha_b, 0, 1, epsilon))))
