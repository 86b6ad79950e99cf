"""End-to-end acceptance gate; each test records one PASS/FAIL summary line."""
import math
import time

import numpy as np
import pytest

from swapnet import cli
from swapnet.counting import LockedRunPlan, SweepPlan, simulate_locked_run, uniform_phases
from swapnet.estimate import (
    estimate_hs_distance,
    estimate_purity,
    oracle_ppt_min_eigenvalue,
    oracle_wootters_concurrence,
    witness_verdict,
)
from swapnet.network import OpticalConfig, ideal_coincidence_rate, ideal_visibility, optical_postselect
from swapnet.states import DensityOp, make_werner, nonmax_entangled, parse_state, product

PHASES32 = uniform_phases(32)
MIXED = DensityOp(np.array([[0.5, 0.29], [0.29, 0.5]]))


def run_preset(tmp_path, name, extra="", out="out"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(f"[DEFAULT]\nseed = 2024\nmean_counts = 1000\nphase_points = 36\n\n[{name}]\n{extra}")
    start = time.perf_counter()
    code = cli.main(["run", str(cfg), "--output", str(tmp_path / out)])
    elapsed = time.perf_counter() - start
    assert code == 0
    lines = (tmp_path / out / name / "curve.csv").read_text().splitlines()[1:]
    rows = [tuple(map(float, line.split(","))) for line in lines]
    return rows, elapsed


def test_c01_backend_equivalence(random_two_qubit_states, acceptance_line):
    start = time.perf_counter()
    worst = 0.0
    for rho in random_two_qubit_states:
        for eps in (0.0, 0.5, 1.0):
            for phi in PHASES32:
                cfg = OpticalConfig(phi, eps)
                worst = max(worst, abs(8 * optical_postselect(rho, cfg).probability - ideal_coincidence_rate(rho, cfg)))
    elapsed = time.perf_counter() - start
    ok = acceptance_line("1 backend equivalence", worst <= 1e-12 and elapsed <= 10, f"max dev {worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_c02_product_visibility(random_qubit_pairs, acceptance_line):
    worst = max(
        abs(ideal_visibility(product(a, b)) - np.real(np.trace(a.matrix @ b.matrix))) for a, b in random_qubit_pairs
    )
    assert acceptance_line("2 product visibility = overlap", worst <= 1e-12, f"max dev {worst:.1e}")


def test_c03_fig3a(tmp_path, acceptance_line):
    rows, elapsed = run_preset(tmp_path, "fig3a")
    oracle_dev = max(abs(o - math.cos(2 * t) ** 2) for t, o, _ in rows)
    est_dev = max(abs(e - o) for _, o, e in rows)
    ok = len(rows) == 19 and oracle_dev <= 1e-12 and est_dev <= 0.03 and elapsed <= 5
    assert acceptance_line("3 fig3a curve", ok, f"max |est-oracle| {est_dev:.4f}, {elapsed:.2f}s")


def test_c04_fig3b(tmp_path, acceptance_line):
    rows, _ = run_preset(tmp_path, "fig3b", "mixed_state = [[0.5,0.29],[0.29,0.5]]\n")
    oracle_dev = max(abs(o - (0.5 + 0.29 * math.sin(4 * t))) for t, o, _ in rows)
    est_dev = max(abs(e - o) for _, o, e in rows)
    ok = len(rows) == 19 and oracle_dev <= 1e-12 and est_dev <= 0.03
    assert acceptance_line("4 fig3b curve", ok, f"max |est-oracle| {est_dev:.4f}")


def test_c05_fig3c(tmp_path, acceptance_line):
    worst = 0.0
    for sign in "+-":
        rows, _ = run_preset(tmp_path, "fig3c", f"sign = {sign}\n", out=f"out{sign}")
        assert all(abs(o - 1.0) <= 1e-12 for _, o, _ in rows)
        worst = max(worst, max(abs(e - 1.0) for *_, e in rows))
    assert acceptance_line("5 fig3c constant visibility", worst <= 0.03, f"max |est-1| {worst:.4f}")


def test_c06_fig3d(tmp_path, acceptance_line):
    rows, _ = run_preset(tmp_path, "fig3d", "sign = +\n")
    oracle_dev = max(abs(o - math.sin(4 * t)) for t, o, _ in rows)
    woot_dev = max(
        abs(abs(o) - oracle_wootters_concurrence(nonmax_entangled(t, "+", "HV_VH").density())) for t, o, _ in rows
    )
    est_dev = max(abs(e - o) for _, o, e in rows)
    ok = oracle_dev <= 1e-12 and woot_dev <= 1e-12 and est_dev <= 0.03
    assert acceptance_line("6 fig3d signed curve", ok, f"concurrence dev {woot_dev:.1e}, max |est-oracle| {est_dev:.4f}")


def test_c07_locked_protocol(acceptance_line):
    hh, singlet, triplet = parse_state("HH"), parse_state("singlet"), parse_state("triplet")
    good = bad = 0
    min_stat = math.inf
    for seed in range(100):
        v = witness_verdict(simulate_locked_run(LockedRunPlan(0.0, (singlet, hh, singlet), 50, 1000, seed)))
        good += v.verdict == "Entangled" and v.statistic > 5
        min_stat = min(min_stat, v.statistic)
        bad += witness_verdict(simulate_locked_run(LockedRunPlan(0.0, (triplet, hh, triplet), 50, 1000, seed))).verdict == "Inconclusive"
    ok = good == 100 and bad == 100
    assert acceptance_line("7 locked-run witness", ok, f"singlet {good}/100 (min stat {min_stat:.1f}), triplet {bad}/100")


def test_c08_witness_soundness(random_two_qubit_states, acceptance_line):
    flagged = [r for r in random_two_qubit_states if ideal_visibility(r) < -1e-9]
    sound = all(oracle_ppt_min_eigenvalue(r) < 0 for r in flagged)
    triplet = parse_state("triplet")
    exists = ideal_visibility(triplet) > 0 and oracle_ppt_min_eigenvalue(triplet) < 0
    ok = sound and exists and len(flagged) > 0
    assert acceptance_line("8 witness soundness", ok, f"{len(flagged)} negative-v states all NPT, triplet v=+1 NPT")


def test_c09_werner(acceptance_line):
    grid = np.linspace(0, 1, 33)
    v_dev = max(abs(ideal_visibility(make_werner(p)) - (1 - 3 * p) / 2) for p in grid)
    c_dev = max(
        abs(-ideal_visibility(make_werner(p)) - oracle_wootters_concurrence(make_werner(p)))
        for p in np.linspace(1 / 3, 1, 33)
    )
    ok = v_dev <= 1e-12 and c_dev <= 1e-12
    assert acceptance_line("9 Werner family", ok, f"v dev {v_dev:.1e}, concurrence dev {c_dev:.1e}")


@pytest.mark.parametrize(
    "label, estimator, oracle",
    [
        ("purity", lambda plan: estimate_purity(MIXED, plan), 0.6682),
        ("HS distance", lambda plan: estimate_hs_distance(parse_state("H"), parse_state("mixed"), plan), 0.25),
    ],
)
def test_c10_functionals(label, estimator, oracle, acceptance_line):
    phases = uniform_phases(36)
    pooled = {}
    worst = {}
    for n0 in (1e3, 1e4, 1e6):
        reports = [estimator(SweepPlan(phases, n0, seed=seed)) for seed in range(20)]
        assert all(abs(r.oracle - oracle) <= 1e-12 for r in reports)
        errors = [abs(r.estimate - oracle) for r in reports]
        pooled[n0] = abs(np.mean([r.estimate for r in reports]) - oracle)
        worst[n0] = max(errors)
    monotone = pooled[1e3] >= pooled[1e4] >= pooled[1e6]
    ok = worst[1e3] <= 0.05 and worst[1e6] <= 0.01 and monotone
    detail = f"worst {worst[1e3]:.4f}/{worst[1e4]:.4f}/{worst[1e6]:.5f}, pooled {pooled[1e3]:.4f}/{pooled[1e4]:.4f}/{pooled[1e6]:.5f}"
    assert acceptance_line(f"10 {label} estimator", ok, detail)


def test_c11_determinism(tmp_path, acceptance_line):
    def csvs(root):
        return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.csv"))}

    cfg = tmp_path / "figs.ini"
    cfg.write_text("[DEFAULT]\nseed = 7\n\n[fig3a]\n[fig3b]\n[fig3c]\n[fig3d]\n[fig4a]\n[fig4c]\n")
    assert cli.main(["run", str(cfg), "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["run", str(cfg), "--output", str(tmp_path / "b")]) == 0
    a, b = csvs(tmp_path / "a"), csvs(tmp_path / "b")
    ok = len(a) > 0 and a == b
    assert acceptance_line("11 byte-identical reruns", ok, f"{len(a)} CSV files compared")
