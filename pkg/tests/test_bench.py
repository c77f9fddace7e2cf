import json

import numpy as np
import pytest

from potrecon import bench
from potrecon.potentials import CANONICAL_SUITE
from potrecon.types import FunctionRole, RadialFunction, RadialGrid


def _fn(vals, grid=None):
    grid = grid or RadialGrid.uniform(0.1, 10.0, 100)
    return RadialFunction(grid, np.asarray(vals, float), FunctionRole.POTENTIAL)


def test_rel_l2_zero_for_identical():
    g = RadialGrid.uniform(0.1, 10.0, 100)
    f = _fn(np.exp(-g.points), g)
    assert bench.rel_l2(f, f, (0.5, 8.0)) == 0.0


def test_rel_l2_homogeneity():
    g = RadialGrid.uniform(0.1, 10.0, 100)
    exact = _fn(np.exp(-g.points), g)
    rec = _fn(1.01 * np.exp(-g.points), g)
    assert bench.rel_l2(rec, exact, (0.5, 8.0)) == pytest.approx(0.01)
    # invariant under simultaneous rescaling of both inputs
    a = _fn(7.0 * rec.values, g)
    b = _fn(7.0 * exact.values, g)
    assert bench.rel_l2(a, b, (0.5, 8.0)) == pytest.approx(0.01)


def test_rel_l2_respects_masks_and_window():
    g = RadialGrid.uniform(0.1, 10.0, 100)
    exact = _fn(np.ones(100), g)
    vals = np.ones(100)
    vals[:50] = 100.0                       # huge error below the window
    rec = _fn(vals, g)
    assert bench.rel_l2(rec, exact, (6.0, 9.0)) == 0.0
    with pytest.raises(bench.MetricWindowError):
        bench.rel_l2(rec, exact, (20.0, 30.0))


def test_rel_l2_requires_shared_grid():
    a = _fn(np.ones(100))
    other = RadialGrid.uniform(0.2, 10.0, 100)
    b = RadialFunction(other, np.ones(100), FunctionRole.POTENTIAL)
    with pytest.raises(ValueError):
        bench.rel_l2(a, b, (0.5, 8.0))


def test_exact_reference_window():
    ref = bench.exact_reference(CANONICAL_SUITE["ho"], r_max=20.0,
                                n_points=2000)
    # HO ground density r^2 e^{-r^2} peaks at r = 1
    assert ref.r_peak == pytest.approx(1.0, abs=0.02)
    lo, hi = ref.window
    assert lo == pytest.approx(0.1 * ref.r_peak)
    assert hi == ref.r99
    assert np.trapezoid(ref.r2rho, ref.r) == pytest.approx(1.0, abs=1e-10)
    # single-grid forward solve: O(h^2) eigenvalue bias
    assert ref.e00_scaled == pytest.approx(3.0, abs=1e-4)


def test_metric_report_validation():
    with pytest.raises(ValueError):
        bench.MetricReport(rel_l2_V=-0.5, window=(0.0, 1.0), grid={})


def test_write_csv_deterministic(tmp_path):
    cols = [np.array([1.0, 2.0]), np.array([0.1, 0.2])]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    bench.write_csv(p1, ["r", "v"], cols)
    bench.write_csv(p2, ["r", "v"], cols)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "r,v"
    assert lines[1].startswith("1,")


def test_write_manifest_checksums(tmp_path):
    bench.write_csv(tmp_path / "data.csv", ["x"], [np.array([1.0])])
    m = bench.write_manifest(tmp_path / "manifest.json", {"status": "ok"})
    assert "data.csv" in m["checksums"]
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["checksums"] == m["checksums"]


def test_jsonable_handles_numpy_and_complex():
    out = bench._jsonable({"a": np.float64(1.5), "b": np.arange(3),
                           "c": complex(1.0, -2.0)})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": {"re": 1.0, "im": -2.0}}
    json.dumps(out)


def test_reference_values_are_tagged_reference_only():
    ref = bench.load_reference_values()
    assert ref["_tag"] == "reference-only"
    assert ref["table1"]["lgbm"]["coulomb"] == pytest.approx(1.91e-3)
    assert ref["accounting"]["lsq_constraints"] == 120


def test_run_benchmark_rejects_unknown_mode(tmp_path):
    with pytest.raises(ValueError):
        bench.run_benchmark(mode="p6-hybrid", out_root=tmp_path)


def test_run_benchmark_empty_suite(tmp_path):
    out = bench.run_benchmark(suite=[], out_root=tmp_path, run_id="empty")
    assert out == {}
