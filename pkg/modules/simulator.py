"""Monte Carlo logical error rates of deformed elongated compass codes.

Errors are sampled directly in the CSS frame with the deformation's effective
rates; this has the same distribution as sampling on the deformed code and
mapping back through the Hadamard mask. Both CSS sides are decoded on their
bias-adjusted graphs and a shot fails when the residual anticommutes with a
logical operator.
"""
import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from modules import config
from modules.codes import CodeSpec, build_elongated_code
from modules.decoder_graph import build_decoder_graph
from modules.deformation import deformation_mask, effective_noise, to_deformed_frame
from modules.errors import ConfigError, DecodeError, InvalidSpecError
from modules.matching import decode
from modules.noise import NoiseParams, sample_error, shot_rng
from modules.pauli import PauliString, commutes, syndrome

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "L", "ell", "deformation", "eta", "p", "shots",
    "fail_x", "fail_z", "fail_any", "rate_any", "ci_low", "ci_high", "seed",
    "rate_x", "rate_z",
)

# Shots handed to one worker task at a time
CHUNK_SIZE = 500


@dataclass(frozen=True)
class ShotOutcome:
    failed_x: bool
    failed_z: bool

    @property
    def failed_any(self):
        return self.failed_x or self.failed_z


@dataclass(frozen=True)
class ShotRecord:
    """Full trace of one shot, in both frames."""

    outcome: ShotOutcome
    error: PauliString
    correction: PauliString
    deformed_error: PauliString
    deformed_correction: PauliString


@dataclass(frozen=True, eq=False)
class SimulationContext:
    """Code, mask, effective rates and both decoder graphs for one (spec, noise) point."""

    code: object
    mask: object
    noise: NoiseParams
    rates: np.ndarray
    gx: object
    gz: object
    backend: str

    @classmethod
    def prepare(cls, spec, noise, y_in_weights=None, backend=None, code=None):
        code = code if code is not None else build_elongated_code(spec)
        mask = deformation_mask(code, spec.deformation)
        rates = effective_noise(mask, noise.rates)
        gx = build_decoder_graph(code, "X", rates, y_in_weights)
        gz = build_decoder_graph(code, "Z", rates, y_in_weights)
        backend = backend or config.DECODER_BACKEND
        if backend not in config.DECODER_BACKENDS:
            raise ConfigError(f"Unknown decoder backend {backend!r}")
        return cls(code, mask, noise, rates, gx, gz, backend)


def judge(context, error):
    """Decode a CSS-frame error on both sides and report the correction and outcome."""
    code = context.code
    corr_z = decode(context.gx, syndrome(code.h_x, error.z_bits), context.backend)
    corr_x = decode(context.gz, syndrome(code.h_z, error.x_bits), context.backend)
    correction = PauliString(corr_x, corr_z)
    residual = error.multiply(correction)
    if syndrome(code.h_x, residual.z_bits).any() or syndrome(code.h_z, residual.x_bits).any():
        raise DecodeError("residual error has a non-trivial syndrome")
    outcome = ShotOutcome(
        failed_x=not commutes(residual, code.logical_z),
        failed_z=not commutes(residual, code.logical_x),
    )
    return correction, outcome


def run_shot(context, shot_index, seed, detailed=False):
    """Sample, decode and judge shot ``shot_index`` of the stream keyed by ``seed``.

    With ``detailed`` a ShotRecord is returned that also carries the error and
    the correction mapped onto the deformed code.
    """
    rng = shot_rng(seed, shot_index)
    error = sample_error(context.rates, rng)
    correction, outcome = judge(context, error)
    if not detailed:
        return outcome
    return ShotRecord(
        outcome,
        error,
        correction,
        to_deformed_frame(error, context.mask),
        to_deformed_frame(correction, context.mask),
    )


def wilson_interval(failures, shots, z=config.WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if shots <= 0:
        raise InvalidSpecError("Wilson interval needs at least one shot")
    rate = failures / shots
    denominator = 1.0 + z * z / shots
    centre = (rate + z * z / (2 * shots)) / denominator
    half = z * math.sqrt(rate * (1 - rate) / shots + z * z / (4 * shots * shots)) / denominator
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class BatchConfig:
    spec: CodeSpec
    noise: NoiseParams
    shots: int
    seed: int = 0
    y_in_weights: bool = True
    backend: str = "blossom"

    def __post_init__(self):
        if isinstance(self.shots, bool) or not isinstance(self.shots, int) or self.shots <= 0:
            raise InvalidSpecError(f"shots must be a positive integer, got {self.shots!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidSpecError(f"seed must be a non-negative integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data):
        spec = CodeSpec.from_dict(data.get("code", data))
        noise = NoiseParams.from_dict(data.get("noise", data), spec.ell)
        return cls(
            spec=spec,
            noise=noise,
            shots=data.get("shots", 0),
            seed=data.get("seed", 0),
            y_in_weights=data.get("y_in_weights", config.Y_IN_WEIGHTS),
            backend=data.get("decoder", config.DECODER_BACKEND),
        )

    def to_dict(self):
        return {
            "code": self.spec.to_dict(),
            "noise": self.noise.to_dict(),
            "shots": self.shots,
            "seed": self.seed,
            "y_in_weights": self.y_in_weights,
            "decoder": self.backend,
        }


@dataclass(frozen=True)
class BatchStats:
    config: BatchConfig
    fail_x: int
    fail_z: int
    fail_any: int

    @property
    def shots(self):
        return self.config.shots

    @property
    def rate_any(self):
        return self.fail_any / self.shots

    @property
    def rate_x(self):
        return self.fail_x / self.shots

    @property
    def rate_z(self):
        return self.fail_z / self.shots

    @property
    def interval(self):
        return wilson_interval(self.fail_any, self.shots)

    def to_row(self):
        spec, noise = self.config.spec, self.config.noise
        ci_low, ci_high = self.interval
        return {
            "L": spec.L,
            "ell": spec.ell,
            "deformation": spec.deformation.value,
            "eta": noise.to_dict()["eta"],
            "p": noise.p,
            "shots": self.shots,
            "fail_x": self.fail_x,
            "fail_z": self.fail_z,
            "fail_any": self.fail_any,
            "rate_any": self.rate_any,
            "ci_low": ci_low,
            "ci_high": ci_high,
            "seed": self.config.seed,
            "rate_x": self.rate_x,
            "rate_z": self.rate_z,
        }


def _run_chunk(context, seed, start, stop):
    fail_x = fail_z = fail_any = 0
    for shot_index in range(start, stop):
        outcome = run_shot(context, shot_index, seed)
        fail_x += outcome.failed_x
        fail_z += outcome.failed_z
        fail_any += outcome.failed_any
    return fail_x, fail_z, fail_any


def run_batch(batch, threads=None, context=None):
    """Run ``batch.shots`` shots and aggregate failure counts.

    Shot i always uses the stream (seed, i), so the counts do not depend on
    ``threads`` or on how shots are split into chunks.

    Args:
        batch: BatchConfig (or its dict form)
        threads: worker processes (default config.DEFAULT_THREADS)
        context: prebuilt SimulationContext for the same spec and noise

    Returns:
        BatchStats
    """
    if isinstance(batch, dict):
        batch = BatchConfig.from_dict(batch)
    threads = max(1, int(threads or config.DEFAULT_THREADS))
    if context is None:
        context = SimulationContext.prepare(batch.spec, batch.noise, batch.y_in_weights, batch.backend)

    bounds = [(s, min(s + CHUNK_SIZE, batch.shots)) for s in range(0, batch.shots, CHUNK_SIZE)]
    if threads == 1 or len(bounds) == 1:
        totals = [_run_chunk(context, batch.seed, start, stop) for start, stop in bounds]
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(_run_chunk, context, batch.seed, start, stop) for start, stop in bounds]
            totals = [f.result() for f in futures]
    fail_x, fail_z, fail_any = (int(v) for v in np.sum(totals, axis=0))

    stats = BatchStats(batch, fail_x, fail_z, fail_any)
    logger.info(
        "🧪 L=%d ell=%d %s eta=%s p=%.4f: %d/%d failures (rate %.5f)",
        batch.spec.L, batch.spec.ell, batch.spec.deformation.value,
        batch.noise.to_dict()["eta"], batch.noise.p, fail_any, batch.shots, stats.rate_any,
    )
    return stats


def sweep(base, sizes, error_rates, threads=None):
    """BatchStats for every (L, p) in ``sizes`` x ``error_rates``.

    Args:
        base: BatchConfig giving ell, deformation, eta, shots, seed and decoder
        sizes: lattice sizes L
        error_rates: physical error rates p

    Returns:
        list of BatchStats ordered by L then p
    """
    sizes, error_rates = list(sizes), list(error_rates)
    if not sizes or not error_rates:
        raise InvalidSpecError("sweep grid must contain at least one L and one p")
    rows = []
    for L in sizes:
        spec = CodeSpec(L, base.spec.ell, base.spec.deformation)
        code = build_elongated_code(spec)
        for p in error_rates:
            noise = NoiseParams(p, base.noise.eta)
            batch = BatchConfig(spec, noise, base.shots, base.seed, base.y_in_weights, base.backend)
            context = SimulationContext.prepare(spec, noise, batch.y_in_weights, batch.backend, code=code)
            rows.append(run_batch(batch, threads, context))
    return rows


def stats_to_csv(rows):
    """CSV text with a header row, '.' decimals and '\\n' line endings."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for stats in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in stats.to_row().items()})
    return buffer.getvalue()


def stats_to_json(rows, resolved_config=None):
    document = {
        "format_version": config.FORMAT_VERSION,
        "columns": list(CSV_COLUMNS),
        "rows": [stats.to_row() for stats in rows],
    }
    if resolved_config is not None:
        document["config"] = resolved_config
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def read_stats_csv(text):
    """Parse CSV produced by stats_to_csv back into row dicts with numeric fields."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = dict(raw)
        for key in ("L", "ell", "shots", "fail_x", "fail_z", "fail_any", "seed"):
            row[key] = int(row[key])
        for key in ("p", "rate_any", "ci_low", "ci_high", "rate_x", "rate_z"):
            row[key] = float(row[key])
        row["eta"] = config.resolve_bias(row["eta"])
        rows.append(row)
    return rows
