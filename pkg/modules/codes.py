"""Elongated compass code construction by gauge fixing.

Qubits sit on an L x L lattice indexed row-major, ``q = row * L + col``, with
row 0 at the top. Plaquette (i, j) has corners (i, j), (i, j+1), (i+1, j),
(i+1, j+1).

X gauge links join horizontal neighbours and Z gauge links vertical neighbours,
so that a weight-4 X plaquette is the product of its two X links and the
product of the Z links spanning a run of plaquettes covers a full 2 x w
rectangle.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from modules import config
from modules.errors import ConstructionError, InvalidSpecError, SizeError
from modules.pauli import (
    BinMatrix,
    GF2Basis,
    PauliString,
    commutes,
    conjugate_by_hadamards,
    gf2_nullspace,
    gf2_rank,
    in_row_span,
)

logger = logging.getLogger(__name__)

# Exact minimum-weight logical representatives are searched up to this size
EXACT_LOGICAL_MAX_QUBITS = 25


class Deformation(str, Enum):
    NONE = "NONE"
    XZZX_SQ = "XZZX_SQ"
    ZXXZ_SQ = "ZXXZ_SQ"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        text = str(value).strip().upper().replace("□", "_SQ")
        aliases = {"CSS": "NONE", "XZZX": "XZZX_SQ", "ZXXZ": "ZXXZ_SQ"}
        text = aliases.get(text, text)
        try:
            return cls(text)
        except ValueError:
            raise InvalidSpecError(f"Unknown deformation: {value!r}")


class StabilizerOrigin(str, Enum):
    FIXED_PLAQUETTE = "FIXED_PLAQUETTE"
    Z_RECTANGLE = "Z_RECTANGLE"
    COMPLETION_LINK = "COMPLETION_LINK"


@dataclass(frozen=True)
class CodeSpec:
    L: int
    ell: int
    deformation: Deformation = Deformation.NONE

    def __post_init__(self):
        object.__setattr__(self, "deformation", Deformation.parse(self.deformation))
        self.validate()

    def validate(self):
        for name in ("L", "ell"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidSpecError(f"{name} must be an integer, got {value!r}")
        if self.L < 3:
            raise InvalidSpecError(f"L must be at least 3, got {self.L}")
        if not 2 <= self.ell <= self.L - 1:
            raise InvalidSpecError(
                f"ell must satisfy 2 <= ell <= L-1 = {self.L - 1}, got {self.ell}"
            )

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                L=data["L"],
                ell=data["ell"],
                deformation=data.get("deformation", Deformation.NONE),
            )
        except KeyError as e:
            raise InvalidSpecError(f"code spec is missing field {e.args[0]!r}")

    def to_dict(self):
        return {"L": int(self.L), "ell": int(self.ell), "deformation": self.deformation.value}


@dataclass(frozen=True)
class GaugeLink:
    kind: str
    qubits: tuple

    def pauli(self, L):
        support = [r * L + c for r, c in self.qubits]
        if self.kind == "X":
            return PauliString.from_support(L * L, x=support)
        return PauliString.from_support(L * L, z=support)


@dataclass(frozen=True)
class Stabilizer:
    pauli: PauliString
    type: str
    origin: StabilizerOrigin
    # plaquette (i, j), rectangle (i, j1, j2) or link ((r, c), (r, c))
    anchor: tuple = ()

    @property
    def weight(self):
        return self.pauli.weight()

    def support(self):
        return self.pauli.support()


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    spec: CodeSpec
    stabilizers: tuple
    h_x: BinMatrix
    h_z: BinMatrix
    logical_x: PauliString
    logical_z: PauliString
    x_stabilizers: tuple = field(default=())
    z_stabilizers: tuple = field(default=())

    @property
    def L(self):
        return self.spec.L

    @property
    def n(self):
        return self.spec.L * self.spec.L

    def coordinates(self, qubit):
        return divmod(int(qubit), self.spec.L)

    def qubit(self, row, col):
        return row * self.spec.L + col

    def fixed_plaquettes(self):
        return [s.anchor for s in self.stabilizers if s.origin == StabilizerOrigin.FIXED_PLAQUETTE]

    def checks(self, side):
        """Stabilizers of one type, in the row order of the matching check matrix."""
        return self.x_stabilizers if side == "X" else self.z_stabilizers

    def check_matrix(self, side):
        return self.h_x if side == "X" else self.h_z


def is_fixed_plaquette(i, j, ell):
    return (i - j) % ell == 0


def build_gauge_group(L):
    """All weight-2 gauge links of the compass model on an L x L lattice.

    Returns:
        list of GaugeLink: L(L-1) X links followed by L(L-1) Z links, row-major
    """
    if isinstance(L, bool) or not isinstance(L, (int, np.integer)) or L < 2:
        raise InvalidSpecError(f"L must be an integer >= 2, got {L!r}")
    x_links = [
        GaugeLink("X", ((r, c), (r, c + 1))) for r in range(L) for c in range(L - 1)
    ]
    z_links = [
        GaugeLink("Z", ((r, c), (r + 1, c))) for r in range(L - 1) for c in range(L)
    ]
    return x_links + z_links


def _plaquette_stabilizers(L, ell):
    n = L * L
    stabilizers = []
    for i in range(L - 1):
        for j in range(L - 1):
            if not is_fixed_plaquette(i, j, ell):
                continue
            corners = [i * L + j, i * L + j + 1, (i + 1) * L + j, (i + 1) * L + j + 1]
            stabilizers.append(Stabilizer(
                PauliString.from_support(n, x=corners), "X",
                StabilizerOrigin.FIXED_PLAQUETTE, (i, j),
            ))
    return stabilizers


def _rectangle_stabilizers(L, ell):
    n = L * L
    stabilizers = []
    for i in range(L - 1):
        runs = []
        start = None
        for j in range(L - 1):
            if is_fixed_plaquette(i, j, ell):
                if start is not None:
                    runs.append((start, j - 1))
                    start = None
            elif start is None:
                start = j
        if start is not None:
            runs.append((start, L - 2))
        for j1, j2 in runs:
            support = [r * L + c for r in (i, i + 1) for c in range(j1, j2 + 2)]
            stabilizers.append(Stabilizer(
                PauliString.from_support(n, z=support), "Z",
                StabilizerOrigin.Z_RECTANGLE, (i, j1, j2),
            ))
    return stabilizers


def _anticommutes_with_any(candidate, x_rows, z_rows):
    if not x_rows:
        return False
    xs = np.vstack(x_rows).astype(np.int64)
    zs = np.vstack(z_rows).astype(np.int64)
    products = (xs @ candidate.z_bits.astype(np.int64) + zs @ candidate.x_bits.astype(np.int64)) % 2
    return bool(products.any())


def _greedy_completion(L, seed_stabilizers):
    n = L * L
    basis = GF2Basis(2 * n)
    x_rows, z_rows = [], []
    for s in seed_stabilizers:
        basis.add(s.pauli.symplectic())
        x_rows.append(s.pauli.x_bits)
        z_rows.append(s.pauli.z_bits)

    accepted = []
    for link in build_gauge_group(L):
        candidate = link.pauli(L)
        if _anticommutes_with_any(candidate, x_rows, z_rows):
            continue
        if not basis.add(candidate.symplectic()):
            continue
        accepted.append(Stabilizer(candidate, link.kind, StabilizerOrigin.COMPLETION_LINK, link.qubits))
        x_rows.append(candidate.x_bits)
        z_rows.append(candidate.z_bits)
    return accepted


def _reduce_weight(vector, span_rows):
    """Lower the weight of ``vector`` by greedily adding rows of the span."""
    v = vector.copy()
    improved = True
    while improved:
        improved = False
        for row in span_rows:
            trial = v ^ row
            if np.count_nonzero(trial) < np.count_nonzero(v):
                v = trial
                improved = True
    return v


def _column_masks(h, partner):
    m = h.rows
    masks = []
    for q in range(h.cols):
        mask = int(partner[q]) << m
        for i in np.flatnonzero(h.bits[:, q]):
            mask |= 1 << int(i)
        masks.append(mask)
    return masks, 1 << m


def _min_weight_logical(h_commute, partner, max_weight=None):
    """Smallest vector v with ``h_commute v = 0`` and ``v . partner = 1``.

    The parity checks and the partner logical are packed into one integer per
    qubit, so a candidate support is a solution iff the XOR of its masks equals
    the single partner bit.
    """
    masks, target = _column_masks(h_commute, partner)
    n = len(masks)
    limit = n if max_weight is None else max_weight

    def search(start, remaining, acc, chosen):
        if remaining == 0:
            return list(chosen) if acc == target else None
        for q in range(start, n - remaining + 1):
            chosen.append(q)
            found = search(q + 1, remaining - 1, acc ^ masks[q], chosen)
            chosen.pop()
            if found is not None:
                return found
        return None

    for weight in range(1, limit + 1):
        found = search(0, weight, 0, [])
        if found is not None:
            return found
    return None


def _find_logical(h_commute, h_span):
    for candidate in gf2_nullspace(h_commute):
        if not in_row_span(h_span, candidate):
            return candidate
    return None


def compute_logicals(code):
    """Return a pure-X and a pure-Z logical operator of ``code``.

    Small codes get exact minimum-weight representatives; larger ones a
    representative reduced greedily by the stabilizers.

    Raises:
        ConstructionError: no logical exists or the pair commutes
    """
    n = code.n
    lz = _find_logical(code.h_x, code.h_z)
    lx = _find_logical(code.h_z, code.h_x)
    if lz is None or lx is None:
        raise ConstructionError("logical", "no logical operator found (rank defect)")

    if n <= EXACT_LOGICAL_MAX_QUBITS:
        z_support = _min_weight_logical(code.h_x, lx)
        x_support = _min_weight_logical(code.h_z, lz)
        logical_z = PauliString.from_support(n, z=z_support)
        logical_x = PauliString.from_support(n, x=x_support)
    else:
        logical_z = PauliString(np.zeros(n, dtype=np.uint8), _reduce_weight(lz, code.h_z.bits))
        logical_x = PauliString(_reduce_weight(lx, code.h_x.bits), np.zeros(n, dtype=np.uint8))

    if commutes(logical_x, logical_z):
        raise ConstructionError("logical", "logical X and logical Z commute")
    return logical_x, logical_z


def code_distance_bruteforce(code):
    """Exhaustive (d_x, d_z) of a small code.

    Raises:
        SizeError: n exceeds config.DISTANCE_MAX_QUBITS
    """
    if code.n > config.DISTANCE_MAX_QUBITS:
        raise SizeError(
            f"brute-force distance refused for n={code.n} > {config.DISTANCE_MAX_QUBITS}",
            {"n": code.n},
        )
    z_support = _min_weight_logical(code.h_x, code.logical_x.x_bits)
    x_support = _min_weight_logical(code.h_z, code.logical_z.z_bits)
    if z_support is None or x_support is None:
        raise ConstructionError("distance", "no logical operator found")
    return len(x_support), len(z_support)


def verify_code(code):
    """Check every construction invariant; raise ConstructionError naming the first violation."""
    n = code.n
    for s in code.stabilizers:
        if s.pauli.x_bits.any() and s.pauli.z_bits.any():
            raise ConstructionError("css", f"stabilizer {s.anchor} mixes X and Z")

    sx = np.vstack([s.pauli.x_bits for s in code.stabilizers]).astype(np.int64)
    sz = np.vstack([s.pauli.z_bits for s in code.stabilizers]).astype(np.int64)
    products = (sx @ sz.T + sz @ sx.T) % 2
    if products.any():
        a, b = np.argwhere(products)[0]
        raise ConstructionError(
            "commutation",
            f"stabilizers {code.stabilizers[a].anchor} and {code.stabilizers[b].anchor} anticommute",
        )

    rank = gf2_rank(np.hstack([sx, sz]).astype(np.uint8))
    if rank != n - 1:
        raise ConstructionError("rank", f"symplectic rank {rank} != n-1 = {n - 1}", {"rank": rank})

    for side, h in (("X", code.h_x), ("Z", code.h_z)):
        weights = h.column_weights()
        bad = np.flatnonzero((weights < 1) | (weights > 2))
        if bad.size:
            q = int(bad[0])
            raise ConstructionError(
                "column_weight",
                f"qubit {code.coordinates(q)} has weight {int(weights[q])} in h_{side.lower()}",
            )


def build_elongated_code(spec):
    """Build the elongated compass code described by ``spec``.

    Gauge fixing runs in three stages: weight-4 X plaquettes on the diagonals
    (i - j) mod ell == 0, Z rectangles over each maximal run of unfixed
    plaquettes in a row, then a greedy completion over the weight-2 X links
    and Z links (row-major) that keeps every link commuting with all accepted
    stabilizers and strictly raising the rank.

    The deformation in ``spec`` is recorded but not applied here.

    Args:
        spec: CodeSpec

    Returns:
        StabilizerCode satisfying all invariants

    Raises:
        InvalidSpecError: invalid spec
        ConstructionError: an invariant check failed
    """
    spec.validate()
    L, ell = spec.L, spec.ell
    n = L * L

    seeds = _plaquette_stabilizers(L, ell) + _rectangle_stabilizers(L, ell)
    completion = _greedy_completion(L, seeds)
    stabilizers = seeds + completion
    x_stabs = tuple(s for s in stabilizers if s.type == "X")
    z_stabs = tuple(s for s in stabilizers if s.type == "Z")
    stabilizers = x_stabs + z_stabs

    h_x = BinMatrix.from_rows([s.pauli.x_bits for s in x_stabs], n)
    h_z = BinMatrix.from_rows([s.pauli.z_bits for s in z_stabs], n)
    identity = PauliString.identity(n)
    code = StabilizerCode(spec, stabilizers, h_x, h_z, identity, identity, x_stabs, z_stabs)
    verify_code(code)

    logical_x, logical_z = compute_logicals(code)
    code = StabilizerCode(spec, stabilizers, h_x, h_z, logical_x, logical_z, x_stabs, z_stabs)

    logger.info(
        "📦 Built elongated compass code L=%d ell=%d: %d X + %d Z stabilizers",
        L, ell, len(x_stabs), len(z_stabs),
    )
    return code


def _coords(code, qubits):
    return [list(code.coordinates(q)) for q in qubits]


def code_description(code, mask=None):
    """JSON-ready description of a code and, optionally, its deformation mask."""
    stabilizers = []
    for index, s in enumerate(code.stabilizers):
        entry = {
            "index": index,
            "type": s.type,
            "weight": s.weight,
            "origin": s.origin.value,
            "support": _coords(code, s.support()),
        }
        if mask is not None:
            deformed = conjugate_by_hadamards(s.pauli, mask)
            entry["deformed"] = "".join(deformed.letter(q) for q in s.support())
        stabilizers.append(entry)

    description = {
        "format_version": config.FORMAT_VERSION,
        "spec": code.spec.to_dict(),
        "n": code.n,
        "counts": {"x": len(code.x_stabilizers), "z": len(code.z_stabilizers)},
        "stabilizers": stabilizers,
        "logicals": {
            "x": _coords(code, code.logical_x.support()),
            "z": _coords(code, code.logical_z.support()),
        },
    }
    if mask is not None:
        description["mask"] = {
            "kind": mask.kind.value,
            "hadamard": _coords(code, mask.hadamard_qubits()),
        }
    return description
