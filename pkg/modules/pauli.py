"""Binary symplectic Pauli operators and GF(2) linear algebra.

Operators are stored as paired X/Z bit-vectors, one bit per uint8 byte and never
packed; phases are not tracked. All GF(2) arithmetic is vectorised row-wise with
numpy.
"""
import numpy as np

from modules.errors import DimensionError

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {letter: bits for bits, letter in _LETTERS.items()}


def _as_bits(values, name="bits"):
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr & 1


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    arr.setflags(write=False)
    return arr


class PauliString:
    """An n-qubit Pauli operator without phase."""

    __slots__ = ("x_bits", "z_bits")

    def __init__(self, x_bits, z_bits):
        x = _as_bits(x_bits, "x_bits")
        z = _as_bits(z_bits, "z_bits")
        if x.shape != z.shape:
            raise DimensionError(
                f"x_bits and z_bits differ in length ({x.size} != {z.size})"
            )
        self.x_bits = _frozen(x)
        self.z_bits = _frozen(z)

    @classmethod
    def identity(cls, n):
        zeros = np.zeros(n, dtype=np.uint8)
        return cls(zeros, zeros)

    @classmethod
    def from_support(cls, n, x=(), z=()):
        """Build an operator with X components on ``x`` and Z components on ``z``."""
        x_bits = np.zeros(n, dtype=np.uint8)
        z_bits = np.zeros(n, dtype=np.uint8)
        x_bits[list(x)] = 1
        z_bits[list(z)] = 1
        return cls(x_bits, z_bits)

    @classmethod
    def from_label(cls, label):
        """Parse a string such as ``"XZZX"``; ``_`` is accepted for identity."""
        try:
            bits = [_BITS["I" if ch == "_" else ch] for ch in label.upper()]
        except KeyError as e:
            raise DimensionError(f"Invalid Pauli label {label!r}") from e
        if not bits:
            return cls.identity(0)
        x, z = zip(*bits)
        return cls(x, z)

    @property
    def n(self):
        return int(self.x_bits.size)

    def weight(self):
        return int(np.count_nonzero(self.x_bits | self.z_bits))

    def support(self):
        return [int(q) for q in np.flatnonzero(self.x_bits | self.z_bits)]

    def label(self):
        return "".join(_LETTERS[(int(x), int(z))] for x, z in zip(self.x_bits, self.z_bits))

    def letter(self, qubit):
        return _LETTERS[(int(self.x_bits[qubit]), int(self.z_bits[qubit]))]

    def is_identity(self):
        return not (self.x_bits.any() or self.z_bits.any())

    def multiply(self, other):
        """Product up to phase (bitwise XOR of both components)."""
        _check_same_length(self, other)
        return PauliString(self.x_bits ^ other.x_bits, self.z_bits ^ other.z_bits)

    def symplectic(self):
        """Row vector ``[x | z]`` of length 2n."""
        return np.concatenate([self.x_bits, self.z_bits])

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.x_bits, other.x_bits)
            and np.array_equal(self.z_bits, other.z_bits)
        )

    def __hash__(self):
        return hash((self.x_bits.tobytes(), self.z_bits.tobytes()))

    def __repr__(self):
        if self.n <= 64:
            return f"PauliString({self.label()!r})"
        return f"PauliString(n={self.n}, weight={self.weight()})"


class BinMatrix:
    """Immutable matrix over GF(2)."""

    __slots__ = ("bits",)

    def __init__(self, bits, cols=None):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.size == 0 and arr.ndim < 2:
            arr = np.zeros((0, cols or 0), dtype=np.uint8)
        if arr.ndim != 2:
            raise DimensionError(f"BinMatrix needs a 2-D array, got shape {arr.shape}")
        self.bits = _frozen(arr & 1)

    @classmethod
    def from_rows(cls, rows, cols):
        rows = [np.asarray(r, dtype=np.uint8) for r in rows]
        if not rows:
            return cls(np.zeros((0, cols), dtype=np.uint8))
        return cls(np.vstack(rows))

    @property
    def rows(self):
        return int(self.bits.shape[0])

    @property
    def cols(self):
        return int(self.bits.shape[1])

    def column_weights(self):
        return self.bits.sum(axis=0).astype(int)

    def row(self, index):
        return self.bits[index]

    def __eq__(self, other):
        if not isinstance(other, BinMatrix):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))

    def __repr__(self):
        return f"BinMatrix({self.rows}x{self.cols})"


def _check_same_length(a, b):
    if a.n != b.n:
        raise DimensionError(f"Pauli length mismatch ({a.n} != {b.n})")


def _matrix_bits(m):
    return m.bits if isinstance(m, BinMatrix) else np.asarray(m, dtype=np.uint8) & 1


def commutes(a, b):
    """True iff the symplectic product of ``a`` and ``b`` vanishes."""
    _check_same_length(a, b)
    overlap = np.count_nonzero(a.x_bits & b.z_bits) + np.count_nonzero(a.z_bits & b.x_bits)
    return overlap % 2 == 0


def row_reduce(m):
    """Reduced row echelon form over GF(2).

    Args:
        m: BinMatrix or 2-D array-like of bits

    Returns:
        Tuple of (rref rows as a new uint8 array with zero rows dropped, pivot columns)
    """
    mat = np.array(_matrix_bits(m), dtype=np.uint8, copy=True)
    rows, cols = mat.shape
    pivots = []
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        candidates = np.flatnonzero(mat[rank:, col])
        if candidates.size == 0:
            continue
        pivot = rank + int(candidates[0])
        if pivot != rank:
            mat[[rank, pivot]] = mat[[pivot, rank]]
        hits = np.flatnonzero(mat[:, col])
        hits = hits[hits != rank]
        mat[hits] ^= mat[rank]
        pivots.append(col)
        rank += 1
    return mat[:rank], pivots


def gf2_rank(m):
    """Rank of a binary matrix over GF(2); the input is left untouched."""
    return len(row_reduce(m)[1])


def gf2_nullspace(m):
    """Basis of the right nullspace {v : M v = 0} as rows of a uint8 array."""
    bits = _matrix_bits(m)
    cols = bits.shape[1]
    rref, pivots = row_reduce(bits)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, p in enumerate(pivots):
            basis[k, p] = rref[i, f]
    return basis


def in_row_span(m, vector):
    """True iff ``vector`` is a GF(2) combination of the rows of ``m``."""
    bits = _matrix_bits(m)
    v = _as_bits(vector, "vector")
    if bits.shape[0] == 0:
        return not v.any()
    if bits.shape[1] != v.size:
        raise DimensionError(f"vector length {v.size} != matrix cols {bits.shape[1]}")
    return gf2_rank(np.vstack([bits, v])) == gf2_rank(bits)


def syndrome(h, e):
    """Return ``h @ e`` over GF(2), one bit per check."""
    bits = _matrix_bits(h)
    e = _as_bits(e, "error")
    if bits.shape[1] != e.size:
        raise DimensionError(f"error length {e.size} != check matrix cols {bits.shape[1]}")
    return (bits.astype(np.int64) @ e.astype(np.int64) % 2).astype(np.uint8)


def symplectic_matrix(paulis, n):
    """Stack operators into a ``rows x 2n`` BinMatrix of ``[x | z]`` rows."""
    return BinMatrix.from_rows([p.symplectic() for p in paulis], 2 * n)


def conjugate_by_hadamards(p, mask):
    """Swap X and Z components on every qubit carrying a Hadamard.

    ``mask`` is a DeformationMask or a boolean array of length ``p.n``.
    """
    hadamard = np.asarray(getattr(mask, "hadamard", mask), dtype=bool)
    if hadamard.shape != (p.n,):
        raise DimensionError(f"mask length {hadamard.size} != Pauli length {p.n}")
    x = np.where(hadamard, p.z_bits, p.x_bits)
    z = np.where(hadamard, p.x_bits, p.z_bits)
    return PauliString(x, z)


class GF2Basis:
    """Incrementally grown set of independent GF(2) row vectors."""

    def __init__(self, length):
        self.length = length
        self._rows = []
        self._pivots = []

    @property
    def rank(self):
        return len(self._rows)

    def reduce(self, vector):
        v = np.array(vector, dtype=np.uint8, copy=True) & 1
        for row, pivot in zip(self._rows, self._pivots):
            if v[pivot]:
                v ^= row
        return v

    def is_independent(self, vector):
        return bool(self.reduce(vector).any())

    def add(self, vector):
        """Add ``vector`` if it raises the rank; return whether it did."""
        v = self.reduce(vector)
        nonzero = np.flatnonzero(v)
        if nonzero.size == 0:
            return False
        self._rows.append(v)
        self._pivots.append(int(nonzero[0]))
        return True
