"""From coincidence counts back to state functionals, plus exact oracles.

Every estimator runs the interferometer on simulated data, extracts the
signed fringe visibility and reports it next to the value computed directly
from the density matrices.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Literal, Sequence

import numpy as np

from . import qmath
from .counting import CountRecord, SweepPlan, derive_seed, simulate_sweep
from .network import ideal_visibility
from .states import DensityOp, PureState, parse_state, product

REFERENCE_MIN_VISIBILITY = 0.1
DEFAULT_THRESHOLD = 5.0
# Eigenvalues of sqrt(rho) rho~ sqrt(rho) below this are numerical zeros; their
# square roots (~1e-8) would otherwise leak into the concurrence.
WOOTTERS_EIG_FLOOR = 1e-14

_SIGMA_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])

Family = Literal["HV_VH_family", "Werner_family"]


class FitError(ValueError):
    """The interference data cannot determine a sinusoid."""


class CalibrationError(ValueError):
    """The reference fringe is too weak to fix the sign of the visibility."""


class ProtocolError(ValueError):
    """A locked run does not follow the three-segment protocol."""


class FunctionalKind(str, Enum):
    OVERLAP = "Overlap"
    PURITY = "Purity"
    FIDELITY = "Fidelity"
    HS_DISTANCE = "HSDistance"
    WITNESS_VALUE = "WitnessValue"
    CONCURRENCE = "Concurrence"


@dataclass(frozen=True)
class FitResult:
    offset_A: float
    cos_B: float
    sin_C: float
    visibility_signed: float  # sign relative to the nominal phase origin (sign of B)
    rms_residual: float

    @property
    def visibility(self) -> float:
        return abs(self.visibility_signed)

    @property
    def fringe_phase(self) -> float:
        return math.atan2(self.sin_C, self.cos_B)


@dataclass(frozen=True)
class WitnessVerdict:
    verdict: Literal["Entangled", "Inconclusive"]
    statistic: float
    threshold: float
    mean_outer: float
    mean_middle: float


@dataclass(frozen=True)
class FunctionalReport:
    kind: FunctionalKind
    estimate: float
    oracle: float
    abs_error: float
    seeds: tuple[int, ...] = ()  # seeds of the sweeps that produced the estimate


def _report(kind: FunctionalKind, estimate: float, oracle: float, seeds=()) -> FunctionalReport:
    return FunctionalReport(kind, float(estimate), float(oracle), abs(float(estimate) - float(oracle)), tuple(seeds))


# --- fitting ------------------------------------------------------------------

def fit_interference(records: Sequence[CountRecord]) -> FitResult:
    """Least-squares fit of counts to A + B cos(phi) + C sin(phi)."""
    if len(records) < 4:
        raise FitError(f"need at least 4 records, got {len(records)}")
    phi = np.array([r.phase_nominal for r in records], dtype=float)
    n = np.array([r.counts for r in records], dtype=float)
    if np.unique(np.round(np.mod(phi, 2 * math.pi), 12)).size < 3:
        raise FitError("need at least 3 distinct phases")
    design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("phases do not determine a sinusoid (all equal mod pi)")
    (a, b, c), *_ = np.linalg.lstsq(design, n, rcond=None)
    if a <= 0:
        raise FitError("fitted mean level is not positive (no counts?)")
    resid = n - design @ np.array([a, b, c])
    vis = math.hypot(b, c) / a
    return FitResult(float(a), float(b), float(c), math.copysign(vis, b), float(np.sqrt(np.mean(resid**2))))


def signed_visibility(target: FitResult, reference: FitResult) -> float:
    """|v| of ``target`` with the sign given by its fringe phase relative to a v=+1 reference."""
    if reference.visibility < REFERENCE_MIN_VISIBILITY:
        raise CalibrationError(
            f"reference visibility {reference.visibility:.3f} below {REFERENCE_MIN_VISIBILITY}"
        )
    if target.visibility == 0.0:
        return 0.0
    dphi = math.remainder(target.fringe_phase - reference.fringe_phase, 2 * math.pi)
    return target.visibility if abs(dphi) <= math.pi / 2 else -target.visibility


@dataclass(frozen=True)
class VisibilityRun:
    value: float
    seeds: tuple[int, int]
    target: list[CountRecord]
    reference: list[CountRecord]
    target_fit: FitResult
    reference_fit: FitResult


def measure_visibility(rho_ab: DensityOp, plan: SweepPlan, runs: list | None = None) -> tuple[float, tuple[int, int]]:
    """Signed visibility from a target sweep and an |HH> reference sweep.

    Returns the estimate and the two derived seeds (target, reference). If
    ``runs`` is given, the raw records and fits are appended to it as a
    :class:`VisibilityRun`.
    """
    seeds = (derive_seed(plan.seed, 0), derive_seed(plan.seed, 1))
    target = simulate_sweep(rho_ab, plan.with_seed(seeds[0]))
    reference = simulate_sweep(parse_state("HH"), plan.with_seed(seeds[1]))
    target_fit, reference_fit = fit_interference(target), fit_interference(reference)
    value = signed_visibility(target_fit, reference_fit)
    if runs is not None:
        runs.append(VisibilityRun(value, seeds, target, reference, target_fit, reference_fit))
    return value, seeds


# --- estimators ---------------------------------------------------------------

def estimate_overlap(rho_a: DensityOp, rho_b: DensityOp, plan: SweepPlan, runs: list | None = None) -> FunctionalReport:
    v, seeds = measure_visibility(product(rho_a, rho_b), plan, runs)
    return _report(FunctionalKind.OVERLAP, v, oracle_overlap(rho_a, rho_b), seeds)


def estimate_purity(rho: DensityOp, plan: SweepPlan, runs: list | None = None) -> FunctionalReport:
    v, seeds = measure_visibility(product(rho, rho), plan, runs)
    return _report(FunctionalKind.PURITY, v, rho.purity(), seeds)


def estimate_fidelity(psi: PureState, rho: DensityOp, plan: SweepPlan, runs: list | None = None) -> FunctionalReport:
    v, seeds = measure_visibility(product(psi.density(), rho), plan, runs)
    oracle = np.real(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes))
    return _report(FunctionalKind.FIDELITY, v, oracle, seeds)


def estimate_hs_distance(rho_a: DensityOp, rho_b: DensityOp, plan: SweepPlan, runs: list | None = None) -> FunctionalReport:
    """Half the squared Hilbert-Schmidt distance from three visibility runs.

    The pair is put in a canonical order before seeds are assigned so that
    swapping the arguments reproduces the same composed estimate.
    """
    first, second = sorted((rho_a, rho_b), key=lambda r: r.matrix.tobytes())
    parts = []
    for k, (x, y) in enumerate(((first, first), (second, second), (first, second))):
        parts.append(measure_visibility(product(x, y), plan.with_seed(derive_seed(plan.seed, 2, k)), runs))
    (v_11, s1), (v_22, s2), (v_12, s3) = parts
    estimate = 0.5 * (v_11 + v_22 - 2.0 * v_12)
    return _report(FunctionalKind.HS_DISTANCE, estimate, oracle_hs_distance(rho_a, rho_b), s1 + s2 + s3)


def estimate_witness(rho_ab: DensityOp, plan: SweepPlan, runs: list | None = None) -> FunctionalReport:
    v, seeds = measure_visibility(rho_ab, plan, runs)
    return _report(FunctionalKind.WITNESS_VALUE, v, ideal_visibility(rho_ab), seeds)


def witness_verdict(run: Sequence[tuple[int, CountRecord]], threshold: float = DEFAULT_THRESHOLD) -> WitnessVerdict:
    """Decide entanglement from a three-segment locked run (entangled / reference / entangled).

    The statistic is the gap between the outer and middle segment means in
    units of the pooled sample standard deviation. At a lock phase with
    cos(phi) > 0 a negative visibility shows up as outer counts *below* the
    reference segment; the direction flips where cos(phi) < 0.
    """
    segments: dict[int, list[int]] = {0: [], 1: [], 2: []}
    for seg, rec in run:
        if seg not in segments:
            raise ProtocolError(f"unexpected segment index {seg}")
        segments[seg].append(rec.counts)
    for seg, counts in segments.items():
        if not counts:
            raise ProtocolError(f"segment {seg} has no dots")
    lock = run[0][1].phase_nominal
    direction = math.cos(lock)
    if abs(direction) < 1e-9:
        raise ProtocolError("lock phase at a fringe zero crossing carries no sign information")

    outer = np.array(segments[0] + segments[2], dtype=float)
    middle = np.array(segments[1], dtype=float)
    dof = outer.size + middle.size - 2
    ss = np.sum((outer - outer.mean()) ** 2) + np.sum((middle - middle.mean()) ** 2)
    pooled_sd = math.sqrt(ss / dof) if dof > 0 else 0.0
    gap = outer.mean() - middle.mean()
    if pooled_sd > 0:
        statistic = abs(gap) / pooled_sd
    else:
        statistic = math.inf if gap != 0 else 0.0
    entangled = statistic > threshold and gap * direction < 0
    return WitnessVerdict(
        "Entangled" if entangled else "Inconclusive",
        float(statistic),
        float(threshold),
        float(outer.mean()),
        float(middle.mean()),
    )


def concurrence_from_visibility(v: float, family: Family) -> float:
    """Concurrence read off the visibility for the two families where they coincide.

    The caller vouches that the state belongs to ``family``.
    """
    if abs(v) > 1.0 + 1e-12:
        raise ValueError(f"|v| must not exceed 1, got {v}")
    if family == "HV_VH_family":
        return min(abs(v), 1.0)
    if family == "Werner_family":
        return max(0.0, -v)
    raise ValueError(f"unknown family {family!r}")


# --- oracles ------------------------------------------------------------------

def oracle_overlap(rho_a: DensityOp, rho_b: DensityOp) -> float:
    return float(np.real(np.trace(rho_a.matrix @ rho_b.matrix)))


def oracle_hs_distance(rho_a: DensityOp, rho_b: DensityOp) -> float:
    d = rho_a.matrix - rho_b.matrix
    return 0.5 * float(np.real(np.trace(d @ d)))


def oracle_ppt_min_eigenvalue(rho_ab: DensityOp) -> float:
    return float(qmath.eigvalsh(qmath.partial_transpose(rho_ab.matrix, "A"))[0])


def oracle_wootters_concurrence(rho_ab: DensityOp) -> float:
    """Two-qubit concurrence through the Hermitian matrix sqrt(rho) rho~ sqrt(rho)."""
    rho = rho_ab.matrix
    if rho.shape != (4, 4):
        raise qmath.DimensionError("concurrence needs a two-qubit state")
    flipped = _SIGMA_YY @ rho.conj() @ _SIGMA_YY
    root = qmath.sqrt_psd(rho)
    r = root @ flipped @ root
    mu = qmath.eigvalsh(0.5 * (r + r.conj().T))
    mu = np.where(mu < WOOTTERS_EIG_FLOOR, 0.0, mu)
    lam = np.sort(np.sqrt(mu))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


# --- serialization ------------------------------------------------------------

def _flat(obj) -> dict:
    out = {}
    for key, val in asdict(obj).items():
        if isinstance(val, Enum):
            val = val.value
        elif isinstance(val, tuple):
            val = " ".join(str(x) for x in val)
        elif isinstance(val, float):
            val = repr(val)
        out[key] = val
    return out


def to_key_value(obj: FunctionalReport | WitnessVerdict) -> str:
    return "".join(f"{k}={v}\n" for k, v in _flat(obj).items())


def to_csv_rows(items: Sequence[FunctionalReport | WitnessVerdict], labels: Sequence[str] | None = None) -> str:
    """CSV with a header derived from the dataclass fields; ``labels`` adds a leading column."""
    if not items:
        return ""
    names = [f.name for f in fields(items[0])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["label"] if labels is not None else []) + names)
    for i, item in enumerate(items):
        flat = _flat(item)
        w.writerow(([labels[i]] if labels is not None else []) + [flat[n] for n in names])
    return buf.getvalue()
