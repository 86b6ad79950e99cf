"""Polarization states fed into the network.

Covers the SPDC pair source, waveplate Jones matrices, the quartz dephaser,
Bell/Werner states, the cos2t/sin2t entangled families and a seeded random
density-matrix generator. Everything ends up as a validated :class:`DensityOp`.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import qmath

Sign = Literal["+", "-"]
PairBasis = Literal["HH_VV", "HV_VH"]

NORM_TOL = 1e-12
TRACE_TOL = 1e-10

# Off-diagonal survival that turns HWP(22.5 deg)|H> into [[0.5, 0.29], [0.29, 0.5]].
DEFAULT_QUARTZ_KAPPA = 0.58


class StateError(ValueError):
    """A state could not be built or failed validation."""


class NormalizationError(StateError):
    pass


class DomainError(StateError):
    pass


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size not in (2, 4):
            raise qmath.DimensionError(f"pure state must have 2 or 4 amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise StateError("non-finite amplitude")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"squared norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityOp":
        return DensityOp(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Validated density matrix on one or two qubits.

    Construction checks Hermiticity (1e-10), positivity (min eigenvalue
    >= -1e-10) and unit trace. A trace off by at most 1e-10 is renormalized;
    anything worse is rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _checked_density_matrix(self.matrix))

    @classmethod
    def from_positive(cls, m) -> "DensityOp":
        """Wrap a matrix that is PSD by construction (Kraus image, kron, mixture).

        Hermiticity and trace are still checked; the eigenvalue test is skipped.
        """
        out = object.__new__(cls)
        object.__setattr__(out, "matrix", _checked_density_matrix(m, check_spectrum=False))
        return out

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self) -> str:
        return f"DensityOp(dim={self.dim}, matrix={np.array2string(self.matrix, precision=4)})"


def _checked_density_matrix(m, check_spectrum: bool = True) -> np.ndarray:
    try:
        m = qmath.as_cmatrix(m)
    except ValueError as exc:
        raise StateError(str(exc)) from exc
    if m.shape not in ((2, 2), (4, 4)):
        raise qmath.DimensionError(f"density matrix must be 2x2 or 4x4, got {m.shape}")
    if not qmath.is_hermitian(m):
        raise StateError("density matrix is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    tr = float(np.real(np.trace(m)))
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateError(f"density matrix has trace {tr!r}")
    m = m / tr
    if not check_spectrum:
        return m
    lam_min = qmath.eigvalsh(m)[0]
    if lam_min < -qmath.PSD_TOL:
        raise StateError(f"density matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})")
    return m


def validate_density(m) -> DensityOp:
    """Explicit validator; raises :class:`StateError` on any violated invariant."""
    return DensityOp(m)


# --- kets ---------------------------------------------------------------------

KET_H = np.array([1.0, 0.0], dtype=np.complex128)
KET_V = np.array([0.0, 1.0], dtype=np.complex128)

_S2 = 1.0 / math.sqrt(2.0)
_SINGLE_KETS = {
    "H": KET_H,
    "V": KET_V,
    "D": np.array([_S2, _S2], dtype=np.complex128),
    "A": np.array([_S2, -_S2], dtype=np.complex128),
    "R": np.array([_S2, -1j * _S2], dtype=np.complex128),
    "L": np.array([_S2, 1j * _S2], dtype=np.complex128),
}

_BELL = {
    "phi+": np.array([_S2, 0, 0, _S2], dtype=np.complex128),
    "phi-": np.array([_S2, 0, 0, -_S2], dtype=np.complex128),
    "psi+": np.array([0, _S2, _S2, 0], dtype=np.complex128),
    "psi-": np.array([0, _S2, -_S2, 0], dtype=np.complex128),
}


def bell_state(name: str) -> PureState:
    aliases = {"singlet": "psi-", "triplet": "psi+"}
    key = aliases.get(name, name)
    if key not in _BELL:
        raise StateError(f"unknown Bell state {name!r}")
    return PureState(_BELL[key])


def product(rho_a: DensityOp, rho_b: DensityOp) -> DensityOp:
    return DensityOp.from_positive(qmath.kron(rho_a.matrix, rho_b.matrix))


# --- optical elements ---------------------------------------------------------

def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def hwp_jones(theta: float) -> np.ndarray:
    """Half-wave plate; maps |H> to cos2t|H> + sin2t|V>."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


def qwp_jones(theta: float) -> np.ndarray:
    # fast axis picks up exp(-i pi/4), slow axis exp(+i pi/4)
    retarder = np.diag([np.exp(-1j * math.pi / 4), np.exp(1j * math.pi / 4)])
    return _rotation(theta) @ retarder @ _rotation(-theta)


@dataclass(frozen=True)
class WaveplateSetting:
    kind: Literal["HWP", "QWP"]
    theta: float

    def __post_init__(self):
        if self.kind not in ("HWP", "QWP"):
            raise ValueError(f"unknown waveplate kind {self.kind!r}")
        if not math.isfinite(self.theta):
            raise ValueError("waveplate angle must be finite")

    def jones(self) -> np.ndarray:
        return hwp_jones(self.theta) if self.kind == "HWP" else qwp_jones(self.theta)


@dataclass(frozen=True)
class DephaserSetting:
    kappa: float

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise DomainError(f"kappa must lie in [0, 1], got {self.kappa}")


def apply_jones(jones: np.ndarray, rho: DensityOp) -> DensityOp:
    """Apply a single-qubit Jones matrix (or a 4x4 local product) to ``rho``."""
    j = qmath.as_cmatrix(jones)
    return DensityOp(j @ rho.matrix @ j.conj().T)


def apply_local(rho_ab: DensityOp, jones_a=None, jones_b=None) -> DensityOp:
    ja = np.eye(2) if jones_a is None else jones_a
    jb = np.eye(2) if jones_b is None else jones_b
    return apply_jones(qmath.kron(ja, jb), rho_ab)


def apply_quartz(rho: DensityOp, d: DephaserSetting) -> DensityOp:
    if rho.dim != 2:
        raise qmath.DimensionError("the quartz dephaser acts on a single qubit")
    m = rho.matrix.copy()
    m[0, 1] *= d.kappa
    m[1, 0] *= d.kappa
    return DensityOp(m)


def waveplate_state(theta: float) -> PureState:
    """|H> after a half-wave plate at ``theta``."""
    return PureState(hwp_jones(theta) @ KET_H)


def quartz_mixed_state(theta: float = math.pi / 8, kappa: float = DEFAULT_QUARTZ_KAPPA) -> DensityOp:
    return apply_quartz(waveplate_state(theta).density(), DephaserSetting(kappa))


# --- two-qubit families -------------------------------------------------------

def spdc_source(a: float, b: float) -> PureState:
    if abs(a * a + b * b - 1.0) > NORM_TOL:
        raise NormalizationError(f"a^2 + b^2 = {a * a + b * b!r}, expected 1")
    return PureState(np.array([a, 0.0, 0.0, b], dtype=np.complex128))


def make_werner(p: float) -> DensityOp:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Werner weight p must lie in [0, 1], got {p}")
    singlet = np.outer(_BELL["psi-"], _BELL["psi-"].conj())
    return DensityOp(p * singlet + (1.0 - p) * np.eye(4) / 4.0)


def nonmax_entangled(theta: float, sign: Sign = "+", basis: PairBasis = "HH_VV") -> PureState:
    """cos2t|HH> +/- sin2t|VV>  or  cos2t|HV> +/- sin2t|VH>."""
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    idx = {"HH_VV": (0, 3), "HV_VH": (1, 2)}.get(basis)
    if idx is None:
        raise ValueError(f"basis must be 'HH_VV' or 'HV_VH', got {basis!r}")
    amps = np.zeros(4, dtype=np.complex128)
    amps[idx[0]] = math.cos(2 * theta)
    amps[idx[1]] = math.sin(2 * theta) * (1 if sign == "+" else -1)
    return PureState(amps)


def random_density(seed: int, dim: int = 2, rank: int | None = None) -> DensityOp:
    """Seeded random density matrix of a given rank (Ginibre construction)."""
    rank = dim if rank is None else rank
    if dim not in (2, 4):
        raise qmath.DimensionError(f"dim must be 2 or 4, got {dim}")
    if not 1 <= rank <= dim:
        raise DomainError(f"rank must lie in 1..{dim}, got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityOp(m / np.real(np.trace(m)))


# --- textual state specs ------------------------------------------------------

def parse_angle(text: str) -> float:
    """Radians, or degrees with a ``deg`` suffix (``22.5deg``)."""
    t = text.strip().lower()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3]))
        return float(t)
    except ValueError:
        raise StateError(f"cannot parse angle {text!r}") from None


def _parse_float(text: str, what: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise StateError(f"cannot parse {what} {text!r}") from None
    if not math.isfinite(val):
        raise StateError(f"{what} must be finite")
    return val


def parse_pure(spec: str) -> PureState:
    """Single-qubit pure-state spec: H V D A R L, ``hwp:<angle>`` or ``qwp:<angle>``."""
    s = spec.strip()
    if s in _SINGLE_KETS:
        return PureState(_SINGLE_KETS[s])
    head, _, rest = s.partition(":")
    if head == "hwp" and rest:
        return waveplate_state(parse_angle(rest))
    if head == "qwp" and rest:
        return PureState(qwp_jones(parse_angle(rest)) @ KET_H)
    raise StateError(f"unknown pure-state spec {spec!r}")


def _parse_matrix(text: str) -> DensityOp:
    try:
        raw = ast.literal_eval(text)
        m = np.array(raw, dtype=np.complex128)
    except (ValueError, SyntaxError, TypeError):
        raise StateError(f"cannot parse matrix literal {text!r}") from None
    if m.shape not in ((2, 2), (4, 4)):
        raise StateError(f"explicit matrix must be 2x2 or 4x4, got shape {m.shape}")
    return DensityOp(m)


def parse_state(spec: str) -> DensityOp:
    """Parse a textual state spec into a density operator.

    Single qubit: ``H V D A R L``, ``mixed``, ``hwp:<angle>``, ``qwp:<angle>``,
    ``quartz[:<angle>[:<kappa>]]``.
    Two qubits: ``HH HV VH VV``, ``singlet``, ``triplet``, ``phi+``, ``phi-``,
    ``psi+``, ``psi-``, ``werner:<p>``, ``nonmax:<angle>:<+|->:<HH_VV|HV_VH>``,
    ``spdc:<a>:<b>``, or a product ``<single>*<single>``.
    Either size: an explicit matrix literal such as ``[[0.5, 0.29], [0.29, 0.5]]``.
    Angles are radians unless suffixed with ``deg``.
    """
    s = spec.strip()
    if not s:
        raise StateError("empty state spec")
    if s.startswith("["):
        return _parse_matrix(s)
    if "*" in s:
        left, right = s.split("*", 1)
        a, b = parse_state(left), parse_state(right)
        if a.dim != 2 or b.dim != 2:
            raise StateError(f"product factors must be single-qubit states: {spec!r}")
        return product(a, b)
    if s == "mixed":
        return DensityOp(np.eye(2) / 2.0)
    if s in ("HH", "HV", "VH", "VV"):
        return PureState(np.kron(_SINGLE_KETS[s[0]], _SINGLE_KETS[s[1]])).density()
    if s in ("singlet", "triplet") or s in _BELL:
        return bell_state(s).density()

    head, _, rest = s.partition(":")
    args = rest.split(":") if rest else []
    if head == "quartz":
        theta = parse_angle(args[0]) if args else math.pi / 8
        kappa = _parse_float(args[1], "kappa") if len(args) > 1 else DEFAULT_QUARTZ_KAPPA
        return quartz_mixed_state(theta, kappa)
    if head == "werner" and len(args) == 1:
        return make_werner(_parse_float(args[0], "Werner weight"))
    if head == "nonmax" and len(args) == 3:
        sign, basis = args[1], args[2]
        if sign not in ("+", "-") or basis not in ("HH_VV", "HV_VH"):
            raise StateError(f"bad nonmax spec {spec!r}")
        return nonmax_entangled(parse_angle(args[0]), sign, basis).density()
    if head == "spdc" and len(args) == 2:
        return spdc_source(_parse_float(args[0], "a"), _parse_float(args[1], "b")).density()
    try:
        return parse_pure(s).density()
    except StateError:
        raise StateError(f"unknown state spec {spec!r}") from None
