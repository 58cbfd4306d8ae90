import json
import math
from dataclasses import asdict

import numpy as np
import pytest

from kblab.collision import VelocityGrid
from kblab.lp import FourierGrid
from kblab.macro import project_values
from kblab.verify import (REGISTRY, InequalityReport, TrialSpec, VerifyGrids, full_suite, run_check,
                          sample_field, sample_scalar)

GRID = FourierGrid(1, 32)
VG = VelocityGrid(4.55, 7)


def test_sampling_deterministic_and_independent():
    spec = TrialSpec(seed=4)
    a = sample_field(spec, GRID, VG, trial=2, role=1)
    assert np.array_equal(a, sample_field(spec, GRID, VG, trial=2, role=1))
    assert not np.allclose(a, sample_field(spec, GRID, VG, trial=3, role=1))
    assert not np.allclose(a, sample_field(spec, GRID, VG, trial=2, role=0))
    assert not np.allclose(a, sample_field(TrialSpec(seed=5), GRID, VG, trial=2, role=1))
    assert np.array_equal(sample_scalar(spec, GRID, 1), sample_scalar(spec, GRID, 1))


def test_sampling_amplitude():
    z = sample_field(TrialSpec(amplitude=0.0), GRID, VG, n_times=3)
    assert np.all(z.values == 0)
    assert np.all(sample_scalar(TrialSpec(amplitude=0.0), GRID) == 0)
    f = sample_field(TrialSpec(amplitude=0.3), GRID, VG)
    assert abs(math.sqrt(np.sum(np.abs(f) ** 2 @ VG.weights)) - 0.3) < 1e-12


def test_sampling_same_field_on_refined_grid():
    spec = TrialSpec(seed=1, amplitude=1.0)
    coarse = GRID.inverse(sample_scalar(spec, GRID))
    fine_grid = FourierGrid(1, 64)
    fine = fine_grid.inverse(sample_scalar(spec, fine_grid))
    assert np.allclose(fine[::2], coarse, atol=1e-12)


def test_field_classes():
    macro = sample_field(TrialSpec(field_class="macroscopic-only"), GRID, VG)
    assert np.abs(project_values(macro, VG)[2]).max() <= 1e-12 * np.abs(macro).max()
    micro = sample_field(TrialSpec(field_class="microscopic-only"), GRID, VG)
    assert np.abs(project_values(micro, VG)[1]).max() <= 1e-12 * np.abs(micro).max()
    with pytest.raises(ValueError):
        sample_field(TrialSpec(field_class="solver"), GRID, VG)


def test_spec_validation():
    for bad in (dict(field_class="bogus"), dict(n_trials=0), dict(horizon=0.1, dt=0.1), dict(amplitude=-1.0)):
        with pytest.raises(ValueError):
            TrialSpec(**bad)


def test_unknown_id():
    with pytest.raises(KeyError):
        run_check("NOPE")
    with pytest.raises(KeyError):
        full_suite(only=["CL_ORDER", "NOPE"])


def test_s_range():
    with pytest.raises(ValueError):
        run_check("TRILINEAR", TrialSpec(n_trials=1), s=2.0, refine=False)


def test_zero_amplitude_skips_every_trial(tables7):
    rep = run_check("TRILINEAR", TrialSpec(amplitude=0.0, n_trials=3), refine=False, tables=tables7)
    assert rep.skipped == 3 and rep.ratio.size == 0 and math.isnan(rep.fitted_C) and rep.passed


@pytest.mark.parametrize("seed", [0, 17])
@pytest.mark.parametrize("cid", ["CL_ORDER", "SERIES_CONV"])
def test_exact_entries_hold(cid, seed):
    rep = run_check(cid, TrialSpec(seed=seed, n_trials=8))
    assert rep.exact and rep.violations == 0 and rep.passed and rep.ratio.size > 0
    assert rep.refinement == {}


def test_trilinear_constant_finite(tables7):
    rep = run_check("TRILINEAR", TrialSpec(n_trials=2), refine=False, tables=tables7)
    assert rep.ratio.size > 0 and 0 < rep.fitted_C < math.inf and rep.passed
    assert set(rep.labels) <= set(rep.label_max())


def test_coercivity_positive(tables12):
    rep = run_check("COERCIVITY", TrialSpec(n_trials=3), refine=False)
    assert rep.direction == "ge" and rep.fitted_C > 0 and rep.passed


def test_refinement_drift_recorded():
    rep = run_check("BLOCK_BOUND", TrialSpec(n_trials=4, refine_trials=2))
    ref = rep.refinement
    assert ref["trials"] == 2 and ref["drift"] >= 1.0
    assert rep.levels["refined"]["points_per_axis"] == 2 * rep.levels["base"]["points_per_axis"]


def _report(ratio, direction="le", exact=False, drift=None):
    ratio = np.asarray(ratio, float)
    n = ratio.size
    refinement = {} if drift is None else {"drift": drift}
    return InequalityReport("X", "", direction, exact, 1.5, np.arange(n), ["a"] * n, ratio, np.ones(n), ratio, 0,
                            n, refinement)


def test_report_pass_logic():
    assert _report([0.5, 2.0]).passed
    assert not _report([0.5, np.inf]).passed
    assert not _report([0.5, 2.0], drift=2.5).passed
    assert _report([0.5, 2.0], drift=1.9).passed
    assert not _report([1.0 + 1e-9], exact=True).passed
    assert _report([1.0 + 1e-13], exact=True).passed
    assert not _report([0.0, 1.0], direction="ge").passed
    assert _report([0.9, 0.99], direction="ge", exact=True).violations == 2


def test_bundle(tmp_path):
    res = full_suite(TrialSpec(n_trials=3), only=["SERIES_CONV", "CL_ORDER", "CL_ORDER"])
    bundle = json.loads(res.to_json())
    assert bundle["ids"] == ["SERIES_CONV", "CL_ORDER"] and bundle["passed"] and res.exit_status == 0
    for cid, rep in bundle["reports"].items():
        assert rep["anchor"] == REGISTRY[cid].anchor
        rows = res.reports[cid].to_csv().splitlines()
        assert rows[0] == "trial,label,lhs,rhs,ratio" and len(rows) - 1 == rep["n_rows"]
    assert bundle["spec"]["n_trials"] == 3 and bundle["grids"] == json.loads(
        json.dumps(asdict(VerifyGrids())))


def test_seed_change_keeps_exact_entries():
    a = full_suite(TrialSpec(seed=1, n_trials=4), only=["CL_ORDER"])
    b = full_suite(TrialSpec(seed=2, n_trials=4), only=["CL_ORDER"])
    assert a.passed and b.passed
    assert not np.array_equal(a.reports["CL_ORDER"].lhs, b.reports["CL_ORDER"].lhs)
