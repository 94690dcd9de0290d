"""Biased Pauli noise: rate parametrisation and counter-based error sampling."""
import math
from dataclasses import dataclass

import numpy as np

from modules import config
from modules.errors import InvalidSpecError
from modules.pauli import PauliString

MAX_ERROR_RATE = 0.5
MIN_BIAS = 0.5


def biased_rates(p, eta):
    """Split a total error rate into (p_x, p_y, p_z) with p_x = p_y and bias eta.

    Args:
        p: total physical error rate, 0 <= p < 0.5
        eta: bias p_z / (p_x + p_y), >= 0.5 or math.inf

    Returns:
        tuple (p_x, p_y, p_z)
    """
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 <= p < MAX_ERROR_RATE:
        raise InvalidSpecError(f"p must lie in [0, {MAX_ERROR_RATE}), got {p!r}")
    if isinstance(eta, bool) or not isinstance(eta, (int, float)) or math.isnan(eta) or eta < MIN_BIAS:
        raise InvalidSpecError(f"eta must be >= {MIN_BIAS} or inf, got {eta!r}")
    p = float(p)
    if math.isinf(eta):
        return 0.0, 0.0, p
    p_xy = p / (2.0 * (1.0 + eta))
    return p_xy, p_xy, p * eta / (1.0 + eta)


@dataclass(frozen=True)
class NoiseParams:
    p: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "eta", config.resolve_bias(self.eta))
        biased_rates(self.p, self.eta)

    @classmethod
    def from_dict(cls, data, ell=None):
        try:
            return cls(p=data["p"], eta=config.resolve_bias(data.get("eta", 0.5), ell))
        except KeyError:
            raise InvalidSpecError("noise settings need a 'p' field")

    @property
    def rates(self):
        return biased_rates(self.p, self.eta)

    @property
    def p_x(self):
        return self.rates[0]

    @property
    def p_y(self):
        return self.rates[1]

    @property
    def p_z(self):
        return self.rates[2]

    def homogeneous(self, n):
        """Rates repeated for every qubit, shape (n, 3)."""
        return np.tile(np.array(self.rates, dtype=float), (n, 1))

    def to_dict(self):
        return {"p": self.p, "eta": "inf" if math.isinf(self.eta) else self.eta}


def shot_rng(seed, shot_index):
    """Counter-based generator for one shot.

    The master seed keys a Philox stream and the shot index selects a block of
    its 256-bit counter, so a shot's draws never depend on which worker or in
    which order shots run. Draw k of the shot belongs to qubit k.
    """
    if seed < 0 or shot_index < 0:
        raise InvalidSpecError("seed and shot index must be non-negative")
    return np.random.Generator(np.random.Philox(key=int(seed), counter=int(shot_index) << 64))


def sample_error(rates, rng):
    """Draw one Pauli error with independent per-qubit probabilities.

    Each qubit q takes X, Y, Z or I with probabilities (p_x,q, p_y,q, p_z,q, rest),
    decided by the q-th uniform draw of ``rng``.

    Args:
        rates: (n, 3) array of per-qubit (p_x, p_y, p_z)
        rng: numpy Generator, typically from shot_rng

    Returns:
        PauliString
    """
    rates = np.asarray(rates, dtype=float)
    u = rng.random(rates.shape[0])
    cut_x = rates[:, 0]
    cut_y = cut_x + rates[:, 1]
    cut_z = cut_y + rates[:, 2]
    x_bits = u < cut_y
    z_bits = (u >= cut_x) & (u < cut_z)
    return PauliString(x_bits.astype(np.uint8), z_bits.astype(np.uint8))
