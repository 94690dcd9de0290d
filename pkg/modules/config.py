"""Configuration constants and settings."""
import logging
import math
import os

FORMAT_VERSION = "1"

LOG_LEVEL = os.getenv("COMPASS_LOG_LEVEL", "INFO")
DEFAULT_THREADS = int(os.getenv("COMPASS_THREADS", "1"))
Y_IN_WEIGHTS = os.getenv("COMPASS_Y_IN_WEIGHTS", "true").lower() in ("1", "true", "yes")

# "blossom" = in-house shortest paths + exact blossom, "pymatching" = sparse blossom library
DECODER_BACKEND = os.getenv("COMPASS_DECODER", "blossom")
DECODER_BACKENDS = ("blossom", "pymatching")

# Edge probabilities are floored before the log so infinite bias keeps finite weights
MIN_EDGE_PROBABILITY = 1e-12
WEIGHT_EPSILON = 1e-12

DISTANCE_MAX_QUBITS = 36

BOOTSTRAP_MIN_RESAMPLES = 100
BOOTSTRAP_UNRELIABLE_FRACTION = 0.2
FIT_RESTARTS = 5
FIT_TOLERANCE = 1e-9
FIT_MAX_ITERATIONS = 20000

# 97.5% normal quantile
WILSON_Z = 1.959963984540054

# Optimal biases eta*_l of the undeformed elongated codes
OPTIMAL_BIASES = {2: 0.5, 3: 1.67, 4: 3.0, 5: 4.26, 6: 5.89}

BIAS_GRID = (0.5, "optimal", 10, 25, 50, 100)

# Published thresholds in percent, keyed by bias then ell: (CSS, XZZX_SQ, ZXXZ_SQ).
# At eta = 0.5 the three codes decode identically; at ell = 2 the two deformations coincide.
REFERENCE_THRESHOLDS = {
    0.5: {2: (14.8, 14.8, 14.8), 3: (11.7, 11.7, 11.7), 4: (8.3, 8.3, 8.3),
          5: (6.8, 6.8, 6.8), 6: (5.7, 5.7, 5.7)},
    "optimal": {3: (17.5, 12.6, 13.5), 4: (19.5, 13.0, 12.4),
                5: (21.0, 13.3, 12.2), 6: (22.6, 14.0, 12.3)},
    10: {2: (10.3, 27.0, 27.0), 3: (14.6, 18.0, 27.3), 4: (17.5, 17.5, 18.9),
         5: (19.6, 17.0, 16.6), 6: (21.8, 16.4, 15.7)},
    25: {2: (10.1, 32.0, 32.0), 3: (14.1, 21.5, 33.6), 4: (17.0, 21.2, 34.5),
         5: (19.0, 20.9, 35.0), 6: (21.1, 20.7, 35.1)},
    50: {2: (10.0, 35.9, 35.9), 3: (14.0, 23.5, 38.0), 4: (16.8, 23.3, 37.9),
         5: (18.9, 23.1, 38.5), 6: (20.8, 22.8, 39.2)},
    100: {2: (10.0, 38.2, 38.2), 3: (14.0, 24.7, 39.9), 4: (16.8, 24.9, 40.0),
          5: (18.7, 25.2, 39.4), 6: (20.6, 25.1, 39.9)},
}
_DEFORMATION_COLUMNS = {"NONE": 0, "XZZX_SQ": 1, "ZXXZ_SQ": 2}

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level=None):
    """Attach a single stream handler to the package logger.

    Safe to call repeatedly; later calls only adjust the level.
    """
    package_logger = logging.getLogger("modules")
    package_logger.setLevel((level or LOG_LEVEL).upper())
    if not any(getattr(h, "_compass", False) for h in package_logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._compass = True  # type: ignore[attr-defined]
        package_logger.addHandler(handler)
    return package_logger


def resolve_bias(value, ell=None):
    """Turn a config bias value into a float (``math.inf`` for infinite bias).

    Args:
        value: number, "inf"/"infinity", or "optimal"
        ell: elongation parameter, required for "optimal"

    Returns:
        float bias
    """
    from modules.errors import InvalidSpecError

    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "∞"):
            return math.inf
        if text == "optimal":
            if ell not in OPTIMAL_BIASES:
                raise InvalidSpecError(f"No optimal bias tabulated for ell={ell}")
            return OPTIMAL_BIASES[ell]
        try:
            return float(text)
        except ValueError:
            raise InvalidSpecError(f"Invalid bias value: {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidSpecError(f"Invalid bias value: {value!r}")
    return float(value)


def reference_threshold(ell, eta, deformation):
    """Look up the published threshold (percent) for a configuration, or None."""
    column = _DEFORMATION_COLUMNS.get(str(deformation).upper())
    if column is None:
        return None
    if ell in OPTIMAL_BIASES and ell != 2 and math.isclose(float(eta), OPTIMAL_BIASES[ell]):
        row = REFERENCE_THRESHOLDS["optimal"]
    else:
        row = next(
            (values for key, values in REFERENCE_THRESHOLDS.items()
             if key != "optimal" and math.isclose(float(eta), float(key))),
            None,
        )
    if row is None or ell not in row:
        return None
    return row[ell][column]
