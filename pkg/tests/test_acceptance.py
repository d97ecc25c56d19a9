"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines
and timings. The stochastic criteria pin their seeds, so outcomes are
reproducible bit for bit.
"""

import json
import os
import time

import numpy as np
import pytest

import fleetcap as fc
from fleetcap.cli import main as cli_main
from helpers import (
    energy_above_by_quadrature,
    random_fleet_arrays,
    random_p_values,
    random_profile,
    random_step_request,
)

WORKERS = min(4, os.cpu_count() or 1)

REFERENCE_MAGNITUDES_KW = {0.5: 1790.0, 0.1: 1660.0, 0.01: 1550.0}
C_LEVELS = (0.5, 0.1, 0.01)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def case_study_run():
    """Shared N=10^4 case-study solve reused by criteria 4 and 5."""
    fleet = fc.generate_case_study(seed=2026)
    model = fc.AvailabilityModel.uniform(0.6, len(fleet))
    shape = fc.trapezoid(2.0, 1.0)
    n_samples, seed = 10_000, 2026
    t0 = time.perf_counter()
    ensemble = fc.draw_availability_ensemble(model, n_samples, seed)
    magnitudes = fc.sample_max_magnitudes(
        fleet, model, shape, n_samples, seed, ensemble=ensemble, workers=WORKERS
    )
    elapsed = time.perf_counter() - t0
    return {
        "fleet": fleet,
        "model": model,
        "shape": shape,
        "n_samples": n_samples,
        "seed": seed,
        "ensemble": ensemble,
        "magnitudes": magnitudes,
        "solve_seconds": elapsed,
    }


def test_criterion_1_oracle_equivalence():
    """Dominance and policy simulation agree on 1000 random instances."""
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    disagreements = 0
    for _ in range(1000):
        p_max, x = random_fleet_arrays(rng, n_max=8)
        profile, steps = random_step_request(rng, float(rng.uniform(0.2, 1.4)) * float(np.sum(p_max)))
        dom = fc.dominated_by(fc.demand_curve(profile), fc.capacity_curve(p_max, x))
        sim = fc.simulate_feasible(p_max, x, steps)
        disagreements += dom != sim
    elapsed = time.perf_counter() - t0
    _report(
        1,
        disagreements == 0 and elapsed < 30.0,
        f"oracle equivalence: {disagreements} disagreements over 1000 instances in {elapsed:.1f} s (< 30 s)",
    )


def test_criterion_2_transform_matches_quadrature():
    """Closed-form curves match adaptive quadrature, 1000 profiles x 50 p."""
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(1000):
        profile = random_profile(rng)
        curve = fc.demand_curve(profile)
        ps = random_p_values(rng, profile, 50)
        got = curve.evaluate(ps)
        for p, g in zip(ps, got):
            ref, err = energy_above_by_quadrature(profile, float(p))
            bound = max(1e-7 * abs(ref), 20.0 * err, 1e-10)
            worst = max(worst, abs(g - ref) - bound)
            assert abs(g - ref) <= bound, (profile.breakpoints, p, g, ref)
    _report(2, worst <= 0.0, "closed-form energy curves match quadrature at 1e-7 relative (1000 profiles x 50 p)")


def test_criterion_3_analytic_magnitudes():
    """Hand-derived maximum magnitudes are reproduced within tolerance."""
    checks = []
    # single device: min(power cap, energy / duration), several parameterisations
    for p_cap, x0, d in [(2.0, 3.0, 4.0), (1.0, 8.0, 2.0), (5.0, 1.0, 0.5)]:
        upper = p_cap
        oracle = fc.dominance_oracle(fc.pulse(d, 1.0), fc.capacity_curve([p_cap], [x0]))
        got = fc.max_magnitude(oracle, upper)
        expected = min(p_cap, p_cap * x0 / d)
        checks.append(abs(got - expected) <= 1e-6 * upper + 1e-12)
    # Fleet A, 4 h pulse -> 1.5 kW
    fleet_a_p, fleet_a_x = np.array([1.0, 2.0]), np.array([4.0, 1.0])
    got = fc.max_magnitude(
        fc.dominance_oracle(fc.pulse(4.0, 1.0), fc.capacity_curve(fleet_a_p, fleet_a_x)), 3.0
    )
    checks.append(abs(got - 1.5) <= 1e-6 * 3.0)
    # single device (2 kW, 3 h), trapezoid T=3 -> power-limited at 2 kW
    got = fc.max_magnitude(fc.dominance_oracle(fc.trapezoid(3.0, 1.0), fc.capacity_curve([2.0], [3.0])), 2.0)
    checks.append(got == 2.0)
    _report(3, all(checks), f"analytic magnitudes reproduced ({len(checks)} cases, bisection tolerance)")


def test_criterion_4_reference_magnitudes(case_study_run):
    """Case-study magnitudes within +-15% of 1.79/1.66/1.55 MW, ordered,
    bootstrap CI narrower than 1% of the magnitude. Runtime is a target.

    Known shortfall, left red on purpose: the CI-width clause at c = 1%
    asks for < 1% of the magnitude, but the configured population cannot
    deliver that at N = 10^4. Per-sample maxima inherit the availability
    noise of the 50-device rapid-charger block (~31 kW per device times a
    binomial count std of 3.46 ~ 110 kW of the observed ~120 kW std), so
    the 1%-quantile estimator's CI is ~18-20 kW ~ 1.1% of the magnitude
    across master seeds. Narrowing it would need a different estimator or
    a larger N than the criterion permits.
    """
    run = case_study_run
    sols = {c: fc.solution_from_magnitudes(run["magnitudes"], c, seed=run["seed"]) for c in C_LEVELS}
    mags = [sols[c].magnitude for c in C_LEVELS]
    ordered = mags[0] >= mags[1] >= mags[2]
    within = all(abs(sols[c].magnitude - REFERENCE_MAGNITUDES_KW[c]) <= 0.15 * REFERENCE_MAGNITUDES_KW[c] for c in C_LEVELS)
    ci_ok = all((sols[c].ci95[1] - sols[c].ci95[0]) < 0.01 * sols[c].magnitude for c in C_LEVELS)
    print(f"\n  solve time for N=10^4: {run['solve_seconds']:.1f} s (target < 60 s)")
    for c in C_LEVELS:
        width = sols[c].ci95[1] - sols[c].ci95[0]
        print(
            f"  c={c:g}: magnitude {sols[c].magnitude / 1000.0:.3f} MW "
            f"(reference {REFERENCE_MAGNITUDES_KW[c] / 1000.0:.2f} MW, diff {100 * (sols[c].magnitude - REFERENCE_MAGNITUDES_KW[c]) / REFERENCE_MAGNITUDES_KW[c]:+.1f}% of +-15%), "
            f"CI width {width:.1f} kW = {100 * width / sols[c].magnitude:.2f}% of magnitude (limit 1%)"
        )
    detail = (
        f"magnitudes within +-15%: {within}; ordered: {ordered}; "
        f"CI width < 1% of magnitude at every c: {ci_ok}"
    )
    _report(4, ordered and within and ci_ok, detail)


def test_criterion_5_quantile_approximation(case_study_run):
    """Quantile solver within 5% of the sampled answer on shared samples,
    and never below it across a 20-seed sweep."""
    run = case_study_run
    fleet, model, shape = run["fleet"], run["model"], run["shape"]
    upper = fc.total_power(fleet)
    rel_errors = {}
    optimistic = True
    for c in C_LEVELS:
        accurate = fc.solution_from_magnitudes(run["magnitudes"], c, seed=run["seed"]).magnitude
        qcurve = fc.quantile_curve(
            fleet, model, c, run["n_samples"], run["seed"], ensemble=run["ensemble"]
        )
        approx = fc.max_magnitude_vs_quantile(qcurve, shape, upper=upper)
        rel_errors[c] = abs(approx - accurate) / accurate
        optimistic &= approx >= accurate
    within = all(e <= 0.05 for e in rel_errors.values())

    sweep_ok = True
    sweep_shape = fc.trapezoid(2.0, 1.0)
    for seed in range(20):
        small = fc.generate(((30, fc.LogNormalSpec(3.3, 1.0), fc.LogNormalSpec(40.0, 10.0)), (4, 50.0, fc.LogNormalSpec(40.0, 10.0))), seed=seed)
        small_model = fc.AvailabilityModel.uniform(0.6, len(small))
        ens = fc.draw_availability_ensemble(small_model, 150, seed)
        mags = fc.sample_max_magnitudes(small, small_model, sweep_shape, 150, seed, ensemble=ens)
        for c in (0.5, 0.1):
            accurate = fc.solution_from_magnitudes(mags, c, seed=seed).magnitude
            q = fc.quantile_curve(small, small_model, c, 150, seed, ensemble=ens)
            approx = fc.max_magnitude_vs_quantile(q, sweep_shape, upper=fc.total_power(small))
            sweep_ok &= approx >= accurate
    detail = (
        "quantile relative errors "
        + ", ".join(f"c={c:g}: {rel_errors[c] * 100:.2f}%" for c in C_LEVELS)
        + f" (<= 5%); optimistic on shared samples: {optimistic}; 20-seed sweep optimistic: {sweep_ok}"
    )
    _report(5, within and optimistic and sweep_ok, detail)


def test_criterion_6_timing(case_study_run):
    """Curve oracle at least 1.5x faster than policy simulation on 10^4
    paired case-study states, with magnitudes agreeing to 1e-3 relative."""
    run = case_study_run
    report = fc.run_bench(
        run["fleet"], run["model"], run["shape"], 10_000, run["seed"], 1.0 / 60.0
    )
    ok = (
        report.curve_mean_ms <= report.policy_mean_ms
        and report.speedup >= 1.5
        and report.max_rel_magnitude_diff <= 1e-3
    )
    _report(
        6,
        ok,
        f"curve {report.curve_mean_ms:.3f} ms vs policy {report.policy_mean_ms:.3f} ms per state, "
        f"speedup {report.speedup:.2f}x (>= 1.5), max magnitude rel diff {report.max_rel_magnitude_diff:.2e}",
    )


def test_criterion_7_determinism(tmp_path):
    """cc-solve emits byte-identical JSON across worker counts."""
    fleet_path = tmp_path / "fleet.csv"
    assert cli_main(["gen-fleet", "--case-study", "--seed", "11", "--out", str(fleet_path)]) == 0
    base_args = [
        "cc-solve", "--fleet", str(fleet_path), "--shape", "trapezoid", "--duration", "2",
        "--seed", "11", "--availability", "0.6", "--samples", "300",
        "--confidence", "0.5", "0.1", "0.01",
    ]
    out1, out2 = tmp_path / "w1.json", tmp_path / "w2.json"
    assert cli_main(base_args + ["--workers", "1", "--out", str(out1)]) == 0
    assert cli_main(base_args + ["--workers", str(max(2, WORKERS)), "--out", str(out2)]) == 0
    identical = out1.read_bytes() == out2.read_bytes()
    json.loads(out1.read_text())  # well-formed
    _report(7, identical, "cc-solve JSON byte-identical for 1 vs multiple workers, same seed")


def test_criterion_8_invariant_suite():
    """>= 10^4 generated cases across construction, scaling, masking and
    dispatch energy-conservation invariants."""
    rng = np.random.default_rng(808)
    cases = 0

    # construction invariants: every curve built here validates itself
    for _ in range(2500):
        profile = random_profile(rng)
        curve = fc.demand_curve(profile)
        assert curve.evaluate(float(curve.powers[-1])) == 0.0
        cases += 1
    for _ in range(2500):
        p_max, x = random_fleet_arrays(rng)
        cap = fc.capacity_curve(p_max, x)
        assert cap.evaluate(float(cap.powers[-1]) + 1.0) == 0.0
        cases += 1

    # scaling identity: curve of the scaled profile == scaled curve
    for _ in range(2500):
        profile = random_profile(rng)
        m = float(rng.uniform(0.01, 10.0))
        p = float(rng.uniform(0.0, max(fc.peak(profile), 1e-6) * m * 1.1))
        direct = fc.demand_curve(fc.scale(profile, m)).evaluate(p)
        via_identity = fc.demand_curve(profile).scaled(m).evaluate(p)
        assert abs(direct - via_identity) <= 1e-9 * max(1.0, abs(direct))
        cases += 1

    # masking monotonicity
    for _ in range(1500):
        p_max, x = random_fleet_arrays(rng)
        a = (rng.random(x.size) < rng.uniform(0.2, 0.9)).astype(int)
        full = fc.capacity_curve(p_max, x)
        masked = fc.capacity_curve(p_max, fc.apply_availability(x, a))
        grid = np.union1d(full.powers, masked.powers)
        assert np.all(masked.evaluate(grid) <= full.evaluate(grid) + 1e-9)
        cases += 1

    # dispatch energy conservation and state nonnegativity
    for _ in range(1500):
        p_max, x = random_fleet_arrays(rng)
        dt = float(rng.uniform(0.02, 1.0))
        deliverable = float(np.dot(p_max, np.minimum(dt, x)))
        request = float(rng.uniform(0.0, 1.0)) * deliverable / dt
        out = fc.policy_step(p_max, x, request, dt)
        assert out is not None
        step, x2 = out
        assert np.all(x2 >= -1e-15)
        assert float(np.dot(p_max, x - x2)) == pytest.approx(request * dt, rel=1e-9, abs=1e-12)
        cases += 1

    _report(8, cases >= 10_000, f"invariant property suite: {cases} generated cases, all passing")
