import json

import numpy as np
import pytest

from fleetcap import AvailabilityModel, Device, Fleet, run_bench, trapezoid


def _fleet(n=30, seed=0):
    rng = np.random.default_rng(seed)
    return Fleet(
        Device(f"d{i}", float(p), float(e))
        for i, (p, e) in enumerate(zip(rng.uniform(0.5, 5.0, n), rng.uniform(2.0, 40.0, n)))
    )


def test_single_state_report():
    fleet = _fleet(8)
    report = run_bench(fleet, AvailabilityModel.uniform(0.7, 8), trapezoid(1.0, 1.0), 1, seed=0)
    assert report.n_states == 1
    assert report.curve_mean_ms > 0.0
    assert report.policy_mean_ms > 0.0
    assert report.speedup == pytest.approx(report.policy_mean_ms / report.curve_mean_ms)


def test_report_smoke_fields_and_consistency():
    fleet = _fleet(30)
    report = run_bench(fleet, AvailabilityModel.uniform(0.6, 30), trapezoid(2.0, 1.0), 20, seed=1)
    assert report.max_rel_magnitude_diff <= 1e-3
    doc = report.to_json_dict()
    json.dumps(doc)  # serialisable
    assert set(doc) == {
        "curve_oracle",
        "policy_oracle",
        "n_states",
        "speedup",
        "max_rel_magnitude_diff",
        "environment",
    }
    assert "tol=" in report.environment and "period=" in report.environment
    table = report.table()
    assert "Policy simulation" in table and "Curve dominance" in table


def test_bench_validation():
    with pytest.raises(ValueError):
        run_bench(_fleet(3), AvailabilityModel.uniform(0.5, 3), trapezoid(1.0, 1.0), 0, seed=0)
