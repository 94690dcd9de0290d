"""Finite-size-scaling threshold fits and stability diagnostics.

Near threshold the logical error rate is modelled as a quadratic in the
rescaled variable x = (p - p_th) * L**(1/nu). The fit runs in two stages: a
simplex search over (p_th, nu) with the quadratic solved by weighted linear
least squares at each step, then a simplex polish over all five parameters.
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from modules import config
from modules.errors import FitError, InvalidSpecError

logger = logging.getLogger(__name__)

DECREASING = "DECREASING"
FLAT = "FLAT"
INCREASING = "INCREASING"

MIN_POINTS_PER_SIZE = 4
MIN_SIZES_FOR_TREND = 3
# A trend is FLAT while its total change over the L range stays within this many CI half-widths
FLAT_TOLERANCE = 2.0
MIN_SIGMA = 1e-6


@dataclass(frozen=True)
class CurvePoint:
    L: int
    p: float
    rate: float
    sigma: float
    shots: int = 0


def curve_point(row):
    """Normalise a sweep row or a (L, p, rate, sigma[, shots]) tuple."""
    if isinstance(row, CurvePoint):
        return row
    if isinstance(row, dict):
        rate = row.get("rate", row.get("rate_any"))
        if "sigma" in row:
            sigma = row["sigma"]
        elif "ci_low" in row and "ci_high" in row:
            sigma = (row["ci_high"] - row["ci_low"]) / 2.0
        else:
            raise InvalidSpecError("curve rows need 'sigma' or 'ci_low'/'ci_high'")
        return CurvePoint(int(row["L"]), float(row["p"]), float(rate), float(sigma), int(row.get("shots", 0)))
    L, p, rate, sigma, *rest = row
    return CurvePoint(int(L), float(p), float(rate), float(sigma), int(rest[0]) if rest else 0)


def normalise_curves(curves, window=None):
    points = sorted((curve_point(r) for r in curves), key=lambda c: (c.L, c.p))
    if window is not None:
        p_min, p_max = window
        points = [c for c in points if p_min <= c.p <= p_max]
    return points


def _arrays(points):
    L = np.array([c.L for c in points], dtype=float)
    p = np.array([c.p for c in points], dtype=float)
    rate = np.array([c.rate for c in points], dtype=float)
    sigma = np.maximum(np.array([c.sigma for c in points], dtype=float), MIN_SIGMA)
    return L, p, rate, sigma


def scaling_variable(p, L, p_th, nu):
    return (np.asarray(p) - p_th) * np.asarray(L, dtype=float) ** (1.0 / nu)


def ansatz(p, L, p_th, nu, A, B, C):
    x = scaling_variable(p, L, p_th, nu)
    return A + B * x + C * x * x


def crossing(points_a, points_b):
    """p where two rate curves cross, or None.

    Interpolates linearly inside the sign change of the rate difference with
    the largest jump, so small flips on noisy tails lose to the real crossing.
    p values where both rates agree exactly (e.g. no failures in either) are
    skipped.
    """
    rates_a = {c.p: c.rate for c in points_a}
    rates_b = {c.p: c.rate for c in points_b}
    shared = sorted(set(rates_a) & set(rates_b))
    diffs = [(p, rates_a[p] - rates_b[p]) for p in shared]
    diffs = [(p, d) for p, d in diffs if d != 0]
    candidates = [
        (abs(d0 - d1), p0 + (p1 - p0) * d0 / (d0 - d1))
        for (p0, d0), (p1, d1) in zip(diffs, diffs[1:])
        if d0 * d1 < 0
    ]
    if not candidates:
        return None
    return max(candidates, key=lambda c: c[0])[1]


def adjacent_crossings(points):
    """Crossings of every pair of consecutive lattice sizes."""
    by_size = _by_size(points)
    sizes = sorted(by_size)
    out = []
    for a, b in zip(sizes, sizes[1:]):
        value = crossing(by_size[a], by_size[b])
        if value is not None:
            out.append(value)
    return out


def crossing_check(p_th, points):
    """(bracket, inside) for p_th against the adjacent-size crossings.

    The bracket is widened by half the smallest p spacing, the resolution of
    the interpolated crossings. Without any crossing the check passes with a
    None bracket.
    """
    crossings = adjacent_crossings(points)
    if not crossings:
        return None, True
    ps = np.unique([c.p for c in points])
    slack = 0.5 * float(np.diff(ps).min()) if ps.size > 1 else 0.0
    bracket = (float(min(crossings)), float(max(crossings)))
    return bracket, bracket[0] - slack <= p_th <= bracket[1] + slack


def _by_size(points):
    by_size = {}
    for c in points:
        by_size.setdefault(c.L, []).append(c)
    return by_size


@dataclass
class ThresholdFit:
    p_th: float
    nu: float
    A: float
    B: float
    C: float
    residual: float
    window: tuple
    sizes: tuple
    num_points: int
    p_th_uncertainty: float = None
    bootstrap_failures: int = 0
    unreliable: bool = False
    crossing_bracket: tuple = None
    within_crossings: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def params(self):
        return np.array([self.p_th, self.nu, self.A, self.B, self.C], dtype=float)

    def to_dict(self):
        return {
            "p_th": self.p_th,
            "nu": self.nu,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "residual": self.residual,
            "window": list(self.window),
            "sizes": list(self.sizes),
            "num_points": self.num_points,
            "p_th_uncertainty": self.p_th_uncertainty,
            "bootstrap_failures": self.bootstrap_failures,
            "unreliable": self.unreliable,
            "crossing_bracket": list(self.crossing_bracket) if self.crossing_bracket else None,
            "within_crossings": self.within_crossings,
        }


def _solve_quadratic(x, rate, sigma):
    design = np.vstack([np.ones_like(x), x, x * x]).T / sigma[:, None]
    coeffs, *_ = np.linalg.lstsq(design, rate / sigma, rcond=None)
    return coeffs


def _chi2(params, L, p, rate, sigma):
    p_th, nu, A, B, C = params
    if nu <= 0:
        return math.inf
    model = ansatz(p, L, p_th, nu, A, B, C)
    return float(np.sum(((rate - model) / sigma) ** 2))


def _profile_chi2(shape, L, p, rate, sigma):
    p_th, nu = shape
    if nu <= 0.05:
        return math.inf
    x = scaling_variable(p, L, p_th, nu)
    A, B, C = _solve_quadratic(x, rate, sigma)
    return _chi2((p_th, nu, A, B, C), L, p, rate, sigma)


def initial_guess(points):
    """p_th from the crossing of the two largest lattices (mid-window if they never cross); nu = 1."""
    by_size = _by_size(points)
    sizes = sorted(by_size)
    p_th = crossing(by_size[sizes[-2]], by_size[sizes[-1]])
    if p_th is None:
        ps = [c.p for c in points]
        p_th = (min(ps) + max(ps)) / 2.0
    return float(p_th), 1.0


def _check_curves(points):
    by_size = _by_size(points)
    if len(by_size) < 2:
        raise FitError(
            "threshold fit needs at least two lattice sizes",
            {"sizes": sorted(by_size)},
        )
    short = {L: len(cs) for L, cs in by_size.items() if len(cs) < MIN_POINTS_PER_SIZE}
    if short:
        raise FitError(
            f"threshold fit needs at least {MIN_POINTS_PER_SIZE} p values per size",
            {"points_per_size": short},
        )


def _simplex(objective, start, args):
    return minimize(
        objective,
        start,
        args=args,
        method="Nelder-Mead",
        options={
            "xatol": 1e-10,
            "fatol": config.FIT_TOLERANCE,
            "maxiter": config.FIT_MAX_ITERATIONS,
            "maxfev": config.FIT_MAX_ITERATIONS,
            "adaptive": True,
        },
    )


def fit_threshold(curves, window=None, restarts=None, seed=0, start=None):
    """Fit p_th, nu and the quadratic coefficients to rate-vs-p curves of several sizes.

    Args:
        curves: rows with L, p, rate (or rate_any) and sigma (or ci_low/ci_high)
        window: optional (p_min, p_max) restricting the points used
        restarts: simplex restarts from jittered starts (default config.FIT_RESTARTS)
        seed: seed of the jitter
        start: optional (p_th, nu) to start from instead of the crossing guess

    Returns:
        ThresholdFit

    Raises:
        FitError: fewer than two sizes, too few points, or no restart converged
    """
    points = normalise_curves(curves, window)
    _check_curves(points)
    L, p, rate, sigma = _arrays(points)
    p_lo, p_hi = float(p.min()), float(p.max())
    restarts = config.FIT_RESTARTS if restarts is None else restarts

    base = np.array(start if start is not None else initial_guess(points), dtype=float)
    rng = np.random.default_rng(seed)
    span = p_hi - p_lo
    starts = [base] + [
        base + np.array([rng.normal(0, 0.1 * span), rng.normal(0, 0.25)])
        for _ in range(max(restarts - 1, 0))
    ]

    best = None
    attempts = []
    for shape in starts:
        shape = np.array([shape[0], abs(shape[1]) or 1.0])
        stage1 = _simplex(_profile_chi2, shape, (L, p, rate, sigma))
        if not np.isfinite(stage1.fun):
            attempts.append({"start": shape.tolist(), "status": "diverged"})
            continue
        p_th, nu = stage1.x
        A, B, C = _solve_quadratic(scaling_variable(p, L, p_th, nu), rate, sigma)
        stage2 = _simplex(_chi2, np.array([p_th, nu, A, B, C]), (L, p, rate, sigma))
        result = stage2 if stage2.fun <= stage1.fun else stage1
        params = stage2.x if stage2.fun <= stage1.fun else np.array([p_th, nu, A, B, C])
        attempts.append({"start": shape.tolist(), "chi2": float(result.fun), "converged": bool(result.success)})
        if params[1] <= 0 or not p_lo <= params[0] <= p_hi:
            continue
        if best is None or result.fun < best[0]:
            best = (float(result.fun), params)

    if best is None:
        raise FitError("threshold fit did not converge inside the p window", {
            "window": [p_lo, p_hi], "attempts": attempts,
        })
    chi2, (p_th, nu, A, B, C) = best
    bracket, inside = crossing_check(float(p_th), points)
    fit = ThresholdFit(
        p_th=float(p_th), nu=float(nu), A=float(A), B=float(B), C=float(C),
        residual=chi2, window=(p_lo, p_hi), sizes=tuple(sorted({c.L for c in points})),
        num_points=len(points), crossing_bracket=bracket, within_crossings=inside,
        diagnostics={"attempts": attempts},
    )
    logger.info("📈 Threshold fit: p_th=%.5f nu=%.4f chi2=%.4g", fit.p_th, fit.nu, chi2)
    if not inside:
        logger.warning("⚠️ p_th=%.5f lies outside the crossing bracket %s", fit.p_th, bracket)
    return fit


@dataclass(frozen=True)
class BootstrapResult:
    std_error: float
    resamples: int
    failures: int
    unreliable: bool
    estimates: tuple = ()


def bootstrap_uncertainty(curves, fit, resamples=None, seed=0, window=None):
    """Standard error of p_th over refits of rate-perturbed data.

    Each rate is shifted by a normal draw with its binomial standard deviation
    (zero for rows without a shot count) and refitted from the original fit.
    More than config.BOOTSTRAP_UNRELIABLE_FRACTION failed refits marks the
    estimate unreliable.
    The standard error is None when fewer than two refits succeed.
    """
    resamples = config.BOOTSTRAP_MIN_RESAMPLES if resamples is None else resamples
    if resamples < config.BOOTSTRAP_MIN_RESAMPLES:
        raise InvalidSpecError(
            f"bootstrap needs at least {config.BOOTSTRAP_MIN_RESAMPLES} resamples, got {resamples}"
        )
    window = fit.window if window is None else window
    points = normalise_curves(curves, window)
    rng = np.random.default_rng(seed)
    estimates = []
    failures = 0
    for _ in range(resamples):
        perturbed = []
        for c in points:
            clipped = min(max(c.rate, 0.0), 1.0)
            sd = math.sqrt(clipped * (1.0 - clipped) / c.shots) if c.shots else 0.0
            rate = min(max(c.rate + rng.normal(0.0, sd), 0.0), 1.0) if sd else c.rate
            perturbed.append(CurvePoint(c.L, c.p, rate, c.sigma, c.shots))
        try:
            refit = fit_threshold(perturbed, restarts=1, start=(fit.p_th, fit.nu))
        except FitError:
            failures += 1
            continue
        estimates.append(refit.p_th)

    unreliable = failures > config.BOOTSTRAP_UNRELIABLE_FRACTION * resamples
    std_error = float(np.std(estimates, ddof=1)) if len(estimates) > 1 else None
    if unreliable:
        logger.warning("⚠️ Bootstrap unreliable: %d of %d refits failed", failures, resamples)
    fit.p_th_uncertainty = std_error
    fit.bootstrap_failures = failures
    fit.unreliable = unreliable
    return BootstrapResult(std_error, resamples, failures, unreliable, tuple(estimates))


def trend(sizes, rates, sigmas):
    """DECREASING, FLAT or INCREASING from a weighted linear fit of rate against L."""
    sizes = np.asarray(sizes, dtype=float)
    rates = np.asarray(rates, dtype=float)
    sigmas = np.maximum(np.asarray(sigmas, dtype=float), MIN_SIGMA)
    if sizes.size < MIN_SIZES_FOR_TREND:
        raise InvalidSpecError(f"trend needs at least {MIN_SIZES_FOR_TREND} lattice sizes, got {sizes.size}")
    slope, _ = np.polyfit(sizes, rates, 1, w=1.0 / sigmas)
    change = slope * (sizes.max() - sizes.min())
    if abs(change) <= FLAT_TOLERANCE * float(sigmas.mean()):
        return FLAT
    return INCREASING if change > 0 else DECREASING


def stability_scan(rates_by_p):
    """Trend of the logical error rate with L at each physical error rate.

    Args:
        rates_by_p: {p: rows of (L, rate, sigma)} or sweep rows with L/p/rate/sigma

    Returns:
        {p: DECREASING | FLAT | INCREASING}
    """
    if not isinstance(rates_by_p, dict):
        grouped = {}
        for c in normalise_curves(rates_by_p):
            grouped.setdefault(c.p, []).append((c.L, c.rate, c.sigma))
        rates_by_p = grouped
    verdicts = {}
    for p, rows in sorted(rates_by_p.items()):
        rows = sorted(rows)
        sizes, rates, sigmas = zip(*rows) if rows else ((), (), ())
        verdicts[p] = trend(sizes, rates, sigmas)
    return verdicts


def input_digest(points):
    payload = json.dumps([[c.L, c.p, c.rate, c.sigma, c.shots] for c in points], sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def fit_report(fit, curves, reference=None, resolved_config=None):
    """JSON-ready report of a fit, its crossings bracket and the published reference."""
    points = normalise_curves(curves, fit.window)
    crossings = adjacent_crossings(points)
    _, inside = crossing_check(fit.p_th, points)
    report = {
        "format_version": config.FORMAT_VERSION,
        "fit": fit.to_dict(),
        "crossings": crossings,
        "within_crossings": inside,
        "input_digest": input_digest(points),
    }
    if reference is not None:
        report["reference_percent"] = reference
        report["difference_percent"] = 100.0 * fit.p_th - reference
    if resolved_config is not None:
        report["config"] = resolved_config
    return report
