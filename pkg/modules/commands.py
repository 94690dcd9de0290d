"""Command handlers behind the CLI actions.

Every handler takes the resolved run config and returns ``(payload, exit_code)``.
Payloads always carry ``success`` and echo the resolved config.
"""
import functools
import json
import logging
import math
from pathlib import Path

from modules import config
from modules.codes import CodeSpec, Deformation, build_elongated_code, code_description
from modules.decoder_graph import (
    build_decoder_graph,
    classify_edges,
    export_graph,
    is_disjoint_paths,
    max_check_degree,
)
from modules.deformation import deformation_mask, effective_noise
from modules.errors import CompassError, ConfigError, FitError
from modules.noise import NoiseParams
from modules.scaling import bootstrap_uncertainty, fit_report, fit_threshold, stability_scan
from modules.simulator import (
    BatchConfig,
    run_batch,
    stats_to_csv,
    stats_to_json,
    sweep,
    read_stats_csv,
)

logger = logging.getLogger(__name__)

DEFAULTS = {
    "seed": 0,
    "out": "out",
    "format": "DOT",
    "resamples": config.BOOTSTRAP_MIN_RESAMPLES,
}
# p used for graph weights when a graph config gives only a bias
GRAPH_DEFAULT_P = 0.1


def resolve_config(data):
    """Fill defaults so the returned document fully determines the run."""
    resolved = dict(DEFAULTS)
    resolved["threads"] = config.DEFAULT_THREADS
    resolved["y_in_weights"] = config.Y_IN_WEIGHTS
    resolved["decoder"] = config.DECODER_BACKEND
    resolved.update({k: v for k, v in data.items() if v is not None})
    if isinstance(resolved["seed"], bool) or not isinstance(resolved["seed"], int) or resolved["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {resolved['seed']!r}")
    if resolved["decoder"] not in config.DECODER_BACKENDS:
        raise ConfigError(f"Unknown decoder {resolved['decoder']!r}; expected one of {config.DECODER_BACKENDS}")
    return resolved


def handler(func):
    """Turn library errors into ``(error payload, exit code)``."""

    @functools.wraps(func)
    def wrapper(data):
        try:
            resolved = resolve_config(data)
            payload = func(resolved)
            payload.setdefault("success", True)
            payload["config"] = resolved
            return payload, 0
        except CompassError as e:
            logger.error("❌ %s failed: %s", func.__name__, e.message)
            payload = e.to_dict()
            payload["config"] = data
            return payload, e.exit_code

    return wrapper


def _out_dir(resolved):
    path = Path(resolved["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path, content):
    data = content.encode("utf-8") if isinstance(content, str) else content
    path.write_bytes(data)
    return str(path)


def _dump(document):
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


# keys that change how a run executes but never what it writes
RUNTIME_ONLY_KEYS = ("threads",)


def artifact_config(resolved):
    """The resolved config as echoed into output files."""
    return {k: v for k, v in resolved.items() if k not in RUNTIME_ONLY_KEYS}


def _code_spec(resolved):
    if "code" not in resolved:
        raise ConfigError("config needs a 'code' section with L, ell and deformation")
    return CodeSpec.from_dict(resolved["code"])


def _tag(spec, eta=None):
    tag = f"L{spec.L}_ell{spec.ell}_{spec.deformation.value}"
    if eta is not None:
        tag += f"_eta{'inf' if math.isinf(eta) else format(eta, 'g')}"
    return tag


def _noise_section(resolved):
    noise = resolved.get("noise")
    if not isinstance(noise, dict):
        raise ConfigError("config needs a 'noise' section with p and eta")
    return noise


@handler
def cmd_build(resolved):
    """Build a code and write its stabilizer/logical/mask description."""
    spec = _code_spec(resolved)
    code = build_elongated_code(spec)
    mask = deformation_mask(code) if spec.deformation != Deformation.NONE else None
    description = code_description(code, mask)
    path = _write(_out_dir(resolved) / f"code_{_tag(spec)}.json", _dump(description))
    return {"data": {"file": path, "n": code.n, "counts": description["counts"]}}


@handler
def cmd_graph(resolved):
    """Write X-side, Z-side, combined-low and combined-high decoder graphs plus metadata."""
    spec = _code_spec(resolved)
    section = dict(resolved.get("noise") or {})
    section.setdefault("p", GRAPH_DEFAULT_P)
    noise = NoiseParams.from_dict(section, spec.ell)
    fmt = str(resolved["format"]).upper()

    code = build_elongated_code(spec)
    mask = deformation_mask(code)
    rates = effective_noise(mask, noise.rates)
    gx = build_decoder_graph(code, "X", rates, resolved["y_in_weights"])
    gz = build_decoder_graph(code, "Z", rates, resolved["y_in_weights"])
    classified = classify_edges(gx, gz)

    out = _out_dir(resolved)
    tag = _tag(spec, noise.eta)
    suffix = fmt.lower()
    files = {
        "x": _write(out / f"graph_{tag}_X.{suffix}", export_graph(gx, fmt, classified.labels["X"])),
        "z": _write(out / f"graph_{tag}_Z.{suffix}", export_graph(gz, fmt, classified.labels["Z"])),
        "low": _write(out / f"graph_{tag}_low.{suffix}", export_graph(classified.low_graph, fmt)),
        "high": _write(out / f"graph_{tag}_high.{suffix}", export_graph(classified.high_graph, fmt)),
    }
    metadata = {
        "format_version": config.FORMAT_VERSION,
        "spec": spec.to_dict(),
        "noise": noise.to_dict(),
        "classification": "uniform" if classified.uniform else "low/high",
        "edges": {"x": gx.n, "z": gz.n},
        "low_edges": len(classified.low_graph.edges),
        "high_edges": len(classified.high_graph.edges),
        "low_max_check_degree": max_check_degree(classified.low_graph),
        "low_is_disjoint_paths": is_disjoint_paths(classified.low_graph),
    }
    files["meta"] = _write(out / f"graph_{tag}_meta.json", _dump(metadata))
    return {"data": {"files": files, "metadata": metadata}}


def _grid(resolved):
    grid = resolved.get("grid") or {}
    sizes = grid.get("L")
    error_rates = grid.get("p")
    if not sizes or not error_rates:
        raise ConfigError("config needs a 'grid' with non-empty 'L' and 'p' lists")
    return [int(L) for L in sizes], [float(p) for p in error_rates]


def _base_batch(resolved, spec, p):
    noise_section = _noise_section(resolved)
    noise = NoiseParams(p, config.resolve_bias(noise_section.get("eta", 0.5), spec.ell))
    return BatchConfig(
        spec=spec,
        noise=noise,
        shots=resolved.get("shots", 0),
        seed=resolved["seed"],
        y_in_weights=resolved["y_in_weights"],
        backend=resolved["decoder"],
    )


def _ratio_rows(resolved, spec):
    reference = resolved["reference"]
    noise_section = _noise_section(resolved)
    ref_spec = CodeSpec(spec.L, reference.get("ell", 2), reference.get("deformation", "XZZX_SQ"))
    rows = []
    for raw_eta in resolved.get("eta_grid", config.BIAS_GRID):
        eta = config.resolve_bias(raw_eta, spec.ell)
        noise = NoiseParams(noise_section["p"], eta)
        common = dict(shots=resolved.get("shots", 0), seed=resolved["seed"],
                      y_in_weights=resolved["y_in_weights"], backend=resolved["decoder"])
        target = run_batch(BatchConfig(spec, noise, **common), resolved["threads"])
        baseline = run_batch(BatchConfig(ref_spec, noise, **common), resolved["threads"])
        ratio = target.rate_any / baseline.rate_any if baseline.fail_any else None
        rows.append({
            "L": spec.L,
            "ell": spec.ell,
            "deformation": spec.deformation.value,
            "eta": noise.to_dict()["eta"],
            "p": noise.p,
            "rate_any": target.rate_any,
            "reference_rate": baseline.rate_any,
            "ratio": ratio,
        })
    return rows


@handler
def cmd_sample(resolved):
    """Run one batch, a sweep, or the ratio-to-reference mode, and write the statistics."""
    spec = _code_spec(resolved)
    out = _out_dir(resolved)
    noise_section = _noise_section(resolved)

    if resolved.get("reference"):
        if "p" not in noise_section:
            raise ConfigError("ratio mode needs noise.p")
        rows = _ratio_rows(resolved, spec)
        document = {"format_version": config.FORMAT_VERSION, "rows": rows, "config": artifact_config(resolved)}
        path = _write(out / f"ratios_{_tag(spec)}.json", _dump(document))
        return {"data": {"files": {"json": path}, "rows": rows}}

    if "grid" in resolved:
        sizes, error_rates = _grid(resolved)
        base = _base_batch(resolved, spec, error_rates[0])
        results = sweep(base, sizes, error_rates, resolved["threads"])
    else:
        if "p" not in noise_section:
            raise ConfigError("noise section needs 'p'")
        results = [run_batch(_base_batch(resolved, spec, noise_section["p"]), resolved["threads"])]

    tag = _tag(spec, results[0].config.noise.eta)
    rows = [r.to_row() for r in results]
    files = {
        "csv": _write(out / f"sample_{tag}.csv", stats_to_csv(results)),
        "json": _write(out / f"sample_{tag}.json", stats_to_json(results, artifact_config(resolved))),
    }
    data = {"files": files, "rows": rows}
    if resolved.get("stability"):
        verdicts = {format(p, "g"): verdict for p, verdict in stability_scan(rows).items()}
        document = {"format_version": config.FORMAT_VERSION, "verdicts": verdicts, "config": artifact_config(resolved)}
        files["stability"] = _write(out / f"stability_{tag}.json", _dump(document))
        data["stability"] = verdicts
    return {"data": data}


@handler
def cmd_threshold(resolved):
    """Sweep, fit the threshold, bootstrap its uncertainty and write the report."""
    spec_section = resolved.get("code") or {}
    sizes, error_rates = _grid(resolved)
    if len(set(sizes)) < 2:
        raise ConfigError("threshold runs need at least two distinct L values", {"L": sizes})
    spec = CodeSpec(max(sizes), spec_section.get("ell", 2), spec_section.get("deformation", "NONE"))
    base = _base_batch(resolved, spec, error_rates[0])
    out = _out_dir(resolved)
    tag = f"ell{spec.ell}_{spec.deformation.value}"
    eta = base.noise.eta
    tag += f"_eta{'inf' if math.isinf(eta) else format(eta, 'g')}"

    results = sweep(base, sizes, error_rates, resolved["threads"])
    sweep_path = _write(out / f"sweep_{tag}.csv", stats_to_csv(results))
    rows = [r.to_row() for r in results]
    reference = config.reference_threshold(spec.ell, eta, spec.deformation.value)
    report_path = out / f"threshold_{tag}.json"

    try:
        fit = fit_threshold(rows, window=resolved.get("fit_window"), seed=resolved["seed"])
        bootstrap_uncertainty(rows, fit, resolved["resamples"], seed=resolved["seed"])
    except FitError as e:
        report = {"format_version": config.FORMAT_VERSION, "error": e.message,
                  "details": e.details, "config": artifact_config(resolved)}
        _write(report_path, _dump(report))
        e.details["sweep"] = sweep_path
        raise

    report = fit_report(fit, rows, reference, artifact_config(resolved))
    _write(report_path, _dump(report))
    logger.info("✅ Threshold %.4f%% (reference %s)", 100 * fit.p_th, reference)
    return {"data": {"files": {"sweep": sweep_path, "report": str(report_path)}, "fit": report["fit"]}}


@handler
def cmd_plot(resolved):
    """Render a sweep CSV or a ratio JSON written by the other actions."""
    from modules import plotting

    source = resolved.get("input")
    if not source:
        raise ConfigError("plot needs an 'input' file")
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"input file {source} does not exist")
    out = _out_dir(resolved)
    target = str(out / f"{path.stem}.png")
    if path.suffix == ".csv":
        plotting.plot_sweep(read_stats_csv(path.read_text()), target)
    else:
        rows = json.loads(path.read_text())["rows"]
        plotting.plot_ratios(rows, target)
    return {"data": {"file": target}}


ACTIONS = {
    "build": cmd_build,
    "graph": cmd_graph,
    "sample": cmd_sample,
    "threshold": cmd_threshold,
    "plot": cmd_plot,
}
