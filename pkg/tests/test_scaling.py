import json
from pathlib import Path

import numpy as np
import pytest

from modules import config
from modules.codes import CodeSpec
from modules.commands import cmd_threshold
from modules.errors import FitError, InvalidSpecError
from modules.noise import NoiseParams
from modules.scaling import (
    DECREASING,
    FLAT,
    INCREASING,
    CurvePoint,
    ansatz,
    bootstrap_uncertainty,
    crossing,
    curve_point,
    fit_report,
    fit_threshold,
    normalise_curves,
    stability_scan,
    trend,
)
from modules.simulator import BatchConfig, sweep

TRUE_PARAMS = dict(p_th=0.18, nu=1.5, A=0.1, B=2.0, C=5.0)
SIZES = (9, 11, 13, 15)
ERROR_RATES = np.linspace(0.16, 0.20, 9)


def synthetic_curves(noise=0.0, sigma=0.01, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for L in SIZES:
        for p in ERROR_RATES:
            rate = float(ansatz(p, L, **TRUE_PARAMS))
            if noise:
                rate += float(rng.normal(0.0, noise))
            rows.append((L, float(p), rate, sigma))
    return rows


def test_fit_recovers_noiseless_ansatz():
    fit = fit_threshold(synthetic_curves())
    assert abs(fit.p_th - 0.18) < 1e-4
    assert fit.nu == pytest.approx(1.5, rel=1e-2)
    assert fit.sizes == SIZES
    assert fit.num_points == len(SIZES) * len(ERROR_RATES)


def test_fit_tolerates_noise():
    fit = fit_threshold(synthetic_curves(noise=0.002, sigma=0.002, seed=3))
    assert abs(fit.p_th - 0.18) < 1e-3


def test_fit_ignores_row_order():
    rows = synthetic_curves(noise=0.002, sigma=0.002, seed=8)
    shuffled = [rows[i] for i in np.random.default_rng(1).permutation(len(rows))]
    assert fit_threshold(shuffled).p_th == fit_threshold(rows).p_th


def test_fit_window_restricts_points():
    fit = fit_threshold(synthetic_curves(), window=(0.163, 0.197))
    assert fit.num_points == len(SIZES) * 7
    assert abs(fit.p_th - 0.18) < 1e-4


def test_single_size_rejected():
    rows = [r for r in synthetic_curves() if r[0] == 9]
    with pytest.raises(FitError) as excinfo:
        fit_threshold(rows)
    assert excinfo.value.exit_code == 4


def test_too_few_points_per_size_rejected():
    rows = [r for r in synthetic_curves() if r[1] < 0.172]
    with pytest.raises(FitError):
        fit_threshold(rows)


def test_curve_point_accepts_sweep_rows():
    point = curve_point({"L": 9, "p": 0.1, "rate_any": 0.02, "ci_low": 0.01, "ci_high": 0.03, "shots": 500})
    assert point == CurvePoint(9, 0.1, 0.02, pytest.approx(0.01), 500)
    with pytest.raises(InvalidSpecError):
        curve_point({"L": 9, "p": 0.1, "rate": 0.02})


def test_crossing_interpolates():
    a = [CurvePoint(5, p, r, 0.01) for p, r in ((0.1, 0.1), (0.2, 0.3))]
    b = [CurvePoint(7, p, r, 0.01) for p, r in ((0.1, 0.05), (0.2, 0.35))]
    assert crossing(a, b) == pytest.approx(0.15)
    c = [CurvePoint(7, p, r, 0.01) for p, r in ((0.1, 0.5), (0.2, 0.6))]
    assert crossing(a, c) is None


def test_crossing_prefers_the_largest_sign_change():
    ps = (0.10, 0.12, 0.14, 0.16, 0.18, 0.20, 0.22)
    small = (0.0008, 0.0050, 0.03, 0.08, 0.13, 0.26, 0.40)
    large = (0.0010, 0.0040, 0.02, 0.06, 0.15, 0.30, 0.45)
    a = [CurvePoint(9, p, r, 0.01) for p, r in zip(ps, small)]
    b = [CurvePoint(11, p, r, 0.01) for p, r in zip(ps, large)]
    # the flip between 0.10 and 0.12 is tail noise
    assert crossing(a, b) == pytest.approx(0.17)

    silent = [CurvePoint(L, p, 0.0, 0.01) for L in (9, 11) for p in (0.06, 0.08)]
    assert crossing(silent[:2] + a, silent[2:] + b) == pytest.approx(0.17)
    assert crossing(silent[:2], silent[2:]) is None


def test_noiseless_fit_sits_inside_crossing_bracket():
    fit = fit_threshold(synthetic_curves())
    low, high = fit.crossing_bracket
    assert abs(low - 0.18) < 1e-3 and abs(high - 0.18) < 1e-3
    assert fit.within_crossings is True
    assert fit.to_dict()["within_crossings"] is True


@pytest.mark.parametrize("seed", range(10))
def test_noisy_crossings_stay_near_threshold(seed):
    curves = synthetic_curves(noise=0.002, sigma=0.002, seed=seed)
    fit = fit_threshold(curves)
    report = fit_report(fit, curves)
    assert len(report["crossings"]) == len(SIZES) - 1
    assert all(abs(c - 0.18) < 0.011 for c in report["crossings"])
    low, high = fit.crossing_bracket
    slack = 0.5 * (ERROR_RATES[1] - ERROR_RATES[0])
    assert fit.within_crossings == (low - slack <= fit.p_th <= high + slack)
    assert report["within_crossings"] == fit.within_crossings


def test_report_flags_fit_outside_crossings():
    fit = fit_threshold(synthetic_curves())
    shifted = [(L, p + 0.01, rate, sigma) for L, p, rate, sigma in synthetic_curves()]
    fit.window = (0.165, 0.215)
    report = fit_report(fit, shifted)
    assert all(abs(c - 0.19) < 1e-3 for c in report["crossings"])
    assert report["within_crossings"] is False


def test_bootstrap_of_exact_data_has_no_spread():
    curves = synthetic_curves()
    fit = fit_threshold(curves)
    result = bootstrap_uncertainty(curves, fit, resamples=100)
    assert result.failures == 0
    assert not result.unreliable
    assert result.std_error < 1e-6
    assert fit.p_th_uncertainty == result.std_error


def test_bootstrap_needs_enough_resamples():
    curves = synthetic_curves()
    fit = fit_threshold(curves)
    with pytest.raises(InvalidSpecError):
        bootstrap_uncertainty(curves, fit, resamples=50)


def test_failed_bootstrap_reports_null_uncertainty(monkeypatch):
    curves = synthetic_curves()
    fit = fit_threshold(curves)

    def always_fails(*args, **kwargs):
        raise FitError("no convergence")

    monkeypatch.setattr("modules.scaling.fit_threshold", always_fails)
    result = bootstrap_uncertainty(curves, fit, resamples=100)
    assert result.std_error is None
    assert result.unreliable
    assert result.failures == 100
    report = fit_report(fit, curves)
    assert report["fit"]["p_th_uncertainty"] is None
    json.dumps(report, allow_nan=False)


def test_fit_report_contents():
    curves = synthetic_curves()
    fit = fit_threshold(curves)
    report = fit_report(fit, curves, reference=18.0, resolved_config={"seed": 0})
    assert report["format_version"] == "1"
    assert report["fit"]["p_th"] == fit.p_th
    assert report["difference_percent"] == pytest.approx(0.0, abs=2e-2)
    assert len(report["crossings"]) == len(SIZES) - 1
    assert all(abs(c - 0.18) < 5e-3 for c in report["crossings"])
    assert len(report["input_digest"]) == 64


@pytest.mark.parametrize(
    "rates, verdict",
    [
        ((0.10, 0.07, 0.05, 0.03), DECREASING),
        ((0.10, 0.10, 0.101, 0.099), FLAT),
        ((0.10, 0.14, 0.18, 0.22), INCREASING),
    ],
)
def test_trend_verdicts(rates, verdict):
    assert trend((9, 11, 13, 15), rates, (0.004,) * 4) == verdict


def test_trend_needs_three_sizes():
    with pytest.raises(InvalidSpecError):
        trend((9, 11), (0.1, 0.2), (0.01, 0.01))


def test_stability_scan_groups_by_error_rate():
    rows = []
    for L, below, above in ((9, 0.05, 0.30), (11, 0.03, 0.34), (13, 0.02, 0.38)):
        rows.append({"L": L, "p": 0.13, "rate": below, "sigma": 0.003})
        rows.append({"L": L, "p": 0.23, "rate": above, "sigma": 0.003})
    assert stability_scan(rows) == {0.13: DECREASING, 0.23: INCREASING}
    assert stability_scan({0.18: [(9, 0.2, 0.01), (11, 0.2, 0.01), (13, 0.2, 0.01)]}) == {0.18: FLAT}


@pytest.mark.slow
def test_biased_stability_scan_below_and_above_threshold():
    pytest.importorskip("pymatching")
    base = BatchConfig(CodeSpec(9, 3, "XZZX_SQ"), NoiseParams(0.13, 10), shots=4000, seed=1, backend="pymatching")
    rows = sweep(base, sizes=[9, 13, 17], error_rates=[0.13, 0.23], threads=4)
    verdicts = stability_scan([s.to_row() for s in rows])
    assert verdicts[0.13] == DECREASING
    assert verdicts[0.23] == INCREASING


CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ANCHOR_THREADS = 4


def _run_threshold_config(name, out_dir):
    resolved = json.loads((CONFIGS / name).read_text())
    resolved.update(out=str(out_dir), threads=ANCHOR_THREADS)
    payload, code = cmd_threshold(resolved)
    assert code == 0, payload
    return json.loads(Path(payload["data"]["files"]["report"]).read_text())


def _fitted_threshold(ell, deformation, eta, error_rates, sizes=(7, 9, 11, 13), shots=10000):
    pytest.importorskip("pymatching")
    base = BatchConfig(CodeSpec(max(sizes), ell, deformation), NoiseParams(error_rates[0], eta),
                       shots, seed=11, backend="pymatching")
    rows = sweep(base, list(sizes), list(error_rates), threads=ANCHOR_THREADS)
    return fit_threshold([r.to_row() for r in rows]).p_th


@pytest.mark.slow
def test_depolarizing_threshold_and_uncertainty(out_dir):
    pytest.importorskip("pymatching")
    report = _run_threshold_config("threshold_depolarizing.json", out_dir)
    assert abs(100 * report["fit"]["p_th"] - 14.8) <= 1.5
    assert report["fit"]["p_th_uncertainty"] is not None
    assert 100 * report["fit"]["p_th_uncertainty"] <= 0.8
    assert not report["fit"]["unreliable"]


@pytest.mark.slow
def test_xzzx_threshold_at_bias_ten(out_dir):
    pytest.importorskip("pymatching")
    report = _run_threshold_config("threshold_xzzx_bias10.json", out_dir)
    assert abs(100 * report["fit"]["p_th"] - 27.0) <= 3.0


@pytest.mark.slow
def test_xzzx_thresholds_grow_with_bias_and_css_falls_past_its_optimum():
    xzzx = [
        _fitted_threshold(3, "XZZX_SQ", 0.5, np.linspace(0.08, 0.16, 9)),
        _fitted_threshold(3, "XZZX_SQ", 10, np.linspace(0.14, 0.22, 9)),
        _fitted_threshold(3, "XZZX_SQ", 25, np.linspace(0.17, 0.26, 10)),
    ]
    assert xzzx[0] < xzzx[1] < xzzx[2]
    css_at_optimum = _fitted_threshold(3, "NONE", config.OPTIMAL_BIASES[3], np.linspace(0.13, 0.22, 10))
    css_high_bias = _fitted_threshold(3, "NONE", 25, np.linspace(0.10, 0.18, 9))
    assert css_high_bias < css_at_optimum


@pytest.mark.slow
def test_small_lattices_cross_above_large_ones_at_high_bias():
    pytest.importorskip("pymatching")
    base = BatchConfig(CodeSpec(17, 5, "ZXXZ_SQ"), NoiseParams(0.13, 10), 20000, seed=5, backend="pymatching")
    rows = sweep(base, [7, 9, 15, 17], np.linspace(0.13, 0.23, 11).tolist(), threads=ANCHOR_THREADS)
    by_size = {}
    for point in normalise_curves([r.to_row() for r in rows]):
        by_size.setdefault(point.L, []).append(point)
    small = crossing(by_size[7], by_size[9])
    large = crossing(by_size[15], by_size[17])
    assert small is not None and large is not None
    assert small > large
