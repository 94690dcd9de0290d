"""Hadamard deformations of elongated compass codes and the equivalent CSS-frame noise."""
import logging
from dataclasses import dataclass

import numpy as np

from modules.codes import Deformation, StabilizerOrigin
from modules.errors import DimensionError, InvalidSpecError
from modules.pauli import conjugate_by_hadamards

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DeformationMask:
    """Per-qubit choice of identity (False) or Hadamard (True) frame."""

    hadamard: np.ndarray
    kind: Deformation = Deformation.NONE

    def __post_init__(self):
        arr = np.array(self.hadamard, dtype=bool, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "hadamard", arr)
        if self.kind == Deformation.NONE and arr.any():
            raise InvalidSpecError("a NONE deformation mask cannot carry Hadamards")

    @classmethod
    def identity(cls, n):
        return cls(np.zeros(n, dtype=bool), Deformation.NONE)

    def __len__(self):
        return int(self.hadamard.size)

    def hadamard_qubits(self):
        return [int(q) for q in np.flatnonzero(self.hadamard)]

    def __eq__(self, other):
        if not isinstance(other, DeformationMask):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.hadamard, other.hadamard)

    def __hash__(self):
        return hash((self.kind, self.hadamard.tobytes()))


def _corner_offsets(kind):
    if kind == Deformation.XZZX_SQ:
        # top right, bottom left
        return ((0, 1), (1, 0))
    if kind == Deformation.ZXXZ_SQ:
        # top left, bottom right
        return ((0, 0), (1, 1))
    return ()


def deformation_mask(code, kind=None):
    """Hadamard mask placing H on two corners of every fixed X plaquette.

    Args:
        code: StabilizerCode
        kind: Deformation (defaults to the code spec's deformation)

    Returns:
        DeformationMask; overlapping corner requests merge into one Hadamard
    """
    kind = Deformation.parse(code.spec.deformation if kind is None else kind)
    hadamard = np.zeros(code.n, dtype=bool)
    offsets = _corner_offsets(kind)
    for i, j in code.fixed_plaquettes():
        for di, dj in offsets:
            hadamard[code.qubit(i + di, j + dj)] = True
    logger.debug("Deformation %s places %d Hadamards", kind.value, int(hadamard.sum()))
    return DeformationMask(hadamard, kind)


def deformed_stabilizers(code, mask):
    """Every stabilizer of ``code`` conjugated by the mask, in code order."""
    if len(mask) != code.n:
        raise DimensionError(f"mask length {len(mask)} != n = {code.n}")
    return [conjugate_by_hadamards(s.pauli, mask) for s in code.stabilizers]


def to_deformed_frame(pauli, mask):
    """Map a CSS-frame operator (error or recovery) onto the deformed code.

    The Hadamard conjugation is an involution, so the same map also takes a
    deformed-frame operator back to the CSS frame.
    """
    return conjugate_by_hadamards(pauli, mask)


def validate_rates(rates):
    """Coerce per-qubit rates to an (n, 3) float array and check them."""
    arr = np.asarray(rates, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidSpecError(f"rates must have shape (n, 3), got {arr.shape}")
    if np.any(arr < 0) or np.any(arr >= 1) or np.any(arr.sum(axis=1) >= 1):
        raise InvalidSpecError("rates must lie in [0, 1) with p_x + p_y + p_z < 1 per qubit")
    return arr


def effective_noise(mask, rates):
    """Per-qubit CSS-frame rates: p_x and p_z trade places where the mask holds H.

    Args:
        mask: DeformationMask of length n
        rates: (n, 3) array-like of (p_x, p_y, p_z), or a single triple broadcast to n

    Returns:
        (n, 3) float array of (p_x,q, p_y,q, p_z,q)
    """
    n = len(mask)
    arr = np.asarray(rates, dtype=float)
    if arr.ndim == 1:
        arr = np.tile(arr, (n, 1))
    arr = validate_rates(arr)
    if arr.shape[0] != n:
        raise DimensionError(f"rates cover {arr.shape[0]} qubits, mask covers {n}")
    out = arr.copy()
    h = mask.hadamard
    out[h, 0] = arr[h, 2]
    out[h, 2] = arr[h, 0]
    return out


def touched_completion_links(code, mask):
    """Weight-2 X completion stabilizers whose support meets a Hadamard.

    Returns:
        list of (row, col) link anchors, used to audit which boundary rows a
        deformation rewrites.
    """
    touched = []
    for s in code.x_stabilizers:
        if s.origin != StabilizerOrigin.COMPLETION_LINK:
            continue
        if any(mask.hadamard[q] for q in s.support()):
            touched.append(s.anchor)
    return touched
