"""Poisson coincidence counting on top of the analytic rate law.

Randomness is derived from a master seed with numpy's ``SeedSequence``:
the counts of point ``i`` come from the substream with spawn key ``(0, i)``
and the drift step before point ``i`` from ``(1, i)``. Points can therefore
be evaluated in any order (or concurrently) without changing the output.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .network import OpticalConfig, ideal_coincidence_rate
from .states import DensityOp

COUNTS_HEADER = ("segment", "phase_nominal_rad", "counts")

_COUNTS_KEY = 0
_DRIFT_KEY = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, *key: int) -> int:
    """Child seed for a named sub-run; stable across platforms and numpy versions."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class CountRecord:
    phase_nominal: float
    counts: int

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class SweepPlan:
    phases: tuple[float, ...]
    mean_counts: float = 1000.0  # expected counts per point where the rate is 1
    seed: int = 0
    drift_sigma: float = 0.0  # radians per dot
    epsilon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if not self.phases:
            raise ValueError("a sweep needs at least one phase")
        _check_common(self.mean_counts, self.seed, self.drift_sigma, self.epsilon)

    def with_seed(self, seed: int) -> "SweepPlan":
        return SweepPlan(self.phases, self.mean_counts, seed, self.drift_sigma, self.epsilon)

    def with_mean_counts(self, mean_counts: float) -> "SweepPlan":
        return SweepPlan(self.phases, mean_counts, self.seed, self.drift_sigma, self.epsilon)


@dataclass(frozen=True, eq=False)
class LockedRunPlan:
    lock_phase: float
    segment_states: tuple[DensityOp, ...]
    dots_per_segment: int = 50
    mean_counts: float = 1000.0
    seed: int = 0
    drift_sigma: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "segment_states", tuple(self.segment_states))
        if len(self.segment_states) != 3:
            raise ValueError(f"a locked run has exactly 3 segments, got {len(self.segment_states)}")
        if any(s.dim != 4 for s in self.segment_states):
            raise ValueError("segment states must be two-qubit states")
        if self.dots_per_segment < 1:
            raise ValueError("dots_per_segment must be at least 1")
        if not math.isfinite(self.lock_phase):
            raise ValueError("lock phase must be finite")
        _check_common(self.mean_counts, self.seed, self.drift_sigma, self.epsilon)


def _check_common(mean_counts, seed, drift_sigma, epsilon):
    if not (mean_counts > 0 and math.isfinite(mean_counts)):
        raise ValueError(f"mean_counts must be positive, got {mean_counts}")
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    if not drift_sigma >= 0:
        raise ValueError(f"drift_sigma must be >= 0, got {drift_sigma}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")


def drift_offsets(seed: int, n: int, sigma: float) -> np.ndarray:
    """Hidden phase offsets of a Gaussian random walk; the first dot is undisturbed."""
    if sigma == 0.0:
        return np.zeros(n)
    steps = [0.0] + [sigma * substream(seed, _DRIFT_KEY, i).standard_normal() for i in range(1, n)]
    return np.cumsum(steps)


def _draw(seed: int, index: int, expected: float) -> int:
    return int(substream(seed, _COUNTS_KEY, index).poisson(max(expected, 0.0)))


def simulate_sweep(rho_ab: DensityOp, plan: SweepPlan, workers: int = 1) -> list[CountRecord]:
    offsets = drift_offsets(plan.seed, len(plan.phases), plan.drift_sigma)
    expected = [
        plan.mean_counts * ideal_coincidence_rate(rho_ab, OpticalConfig(phi + d, plan.epsilon))
        for phi, d in zip(plan.phases, offsets)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_draw, [plan.seed] * len(expected), range(len(expected)), expected))
    else:
        counts = [_draw(plan.seed, i, lam) for i, lam in enumerate(expected)]
    return [CountRecord(phi, n) for phi, n in zip(plan.phases, counts)]


def simulate_locked_run(plan: LockedRunPlan) -> list[tuple[int, CountRecord]]:
    """Fixed nominal phase, three consecutive input states, drift carried across all dots."""
    total = plan.dots_per_segment * len(plan.segment_states)
    offsets = drift_offsets(plan.seed, total, plan.drift_sigma)
    out = []
    for k in range(total):
        segment = k // plan.dots_per_segment
        cfg = OpticalConfig(plan.lock_phase + offsets[k], plan.epsilon)
        lam = plan.mean_counts * ideal_coincidence_rate(plan.segment_states[segment], cfg)
        out.append((segment, CountRecord(plan.lock_phase, _draw(plan.seed, k, lam))))
    return out


# --- CSV ----------------------------------------------------------------------

def _as_segmented(rows) -> Iterable[tuple[int, CountRecord]]:
    for row in rows:
        yield (0, row) if isinstance(row, CountRecord) else row


def counts_to_csv(rows: Iterable[CountRecord] | Iterable[tuple[int, CountRecord]]) -> str:
    """Serialize sweep records (segment 0) or locked-run pairs to CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNTS_HEADER)
    for segment, rec in _as_segmented(rows):
        w.writerow((segment, repr(float(rec.phase_nominal)), int(rec.counts)))
    return buf.getvalue()


def write_counts_csv(path: str | Path, rows) -> None:
    Path(path).write_text(counts_to_csv(rows), encoding="utf-8", newline="")


def read_counts_csv(path: str | Path) -> list[tuple[int, CountRecord]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != COUNTS_HEADER:
            raise ValueError(f"unexpected counts header {header!r}")
        return [(int(s), CountRecord(float(p), int(n))) for s, p, n in reader]


def uniform_phases(count: int, start: float = 0.0, stop: float = 2 * math.pi) -> tuple[float, ...]:
    """``count`` evenly spaced phases in [start, stop)."""
    if count < 1:
        raise ValueError("phase grid needs at least one point")
    step = (stop - start) / count
    return tuple(start + i * step for i in range(count))


def records_only(rows: Sequence[tuple[int, CountRecord]], segment: int | None = None) -> list[CountRecord]:
    return [rec for seg, rec in rows if segment is None or seg == segment]
