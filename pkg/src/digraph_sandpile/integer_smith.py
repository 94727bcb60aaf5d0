"""Exact Smith normal form, cokernels and determinants of integer matrices.

Two routes are provided and kept deliberately separate:

* the integral route (``smith_normal_form``, ``cokernel``, ``determinant``)
  works on Python ints and never reduces modulo anything;
* the modular route (``local_cokernel_partition``, ``cokernel_mod``,
  ``determinant_multimodular``) works over Z/p^k or Z/p with numba kernels
  and is what the Monte Carlo experiments use.

The experiments audit one against the other.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from sympy import factorint, prevprime
from sympy.ntheory.modular import crt

from .abelian_groups import AbelianGroup, from_cyclic_orders

# products of two residues must fit in int64
_INT64_MODULUS_LIMIT = 2**31
# primes for the multimodular determinant; see _det_mod_primes
_DET_PRIME_BITS = 25


class IntMatrix:
    """Dense immutable matrix of Python ints.

    ``IntMatrix([[1, 2], [3, 4]])``; shapes with zero rows need ``cols``.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, data: Iterable[Iterable[int]] = (), cols: int | None = None):
        if isinstance(data, np.ndarray):
            if data.ndim != 2:
                raise ValueError("expected a 2-d array")
            cols = data.shape[1] if cols is None else cols
            data = data.tolist()
        entries = tuple(tuple(int(x) for x in row) for row in data)
        if cols is None:
            cols = len(entries[0]) if entries else 0
        if any(len(row) != cols for row in entries):
            raise ValueError("ragged matrix")
        self.rows = len(entries)
        self.cols = cols
        self.entries = entries

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if isinstance(other, IntMatrix):
            return self.shape == other.shape and self.entries == other.entries
        return NotImplemented

    def __hash__(self):
        return hash((self.shape, self.entries))

    def __repr__(self):
        return f"IntMatrix({self.tolist()!r}, cols={self.cols})"

    def tolist(self) -> list[list[int]]:
        return [list(row) for row in self.entries]

    def transpose(self) -> IntMatrix:
        return IntMatrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
            cols=self.rows,
        )

    def __matmul__(self, other: IntMatrix) -> IntMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols_b = list(zip(*other.entries)) if other.rows else [()] * other.cols
        return IntMatrix(
            [[sum(a * b for a, b in zip(row, col)) for col in cols_b] for row in self.entries],
            cols=other.cols,
        )

    def __mul__(self, c: int) -> IntMatrix:
        return IntMatrix([[c * x for x in row] for row in self.entries], cols=self.cols)

    __rmul__ = __mul__

    def delete(self, row: int | None = None, col: int | None = None) -> IntMatrix:
        keep_r = [i for i in range(self.rows) if i != row]
        keep_c = [j for j in range(self.cols) if j != col]
        return IntMatrix(
            [[self.entries[i][j] for j in keep_c] for i in keep_r], cols=len(keep_c)
        )

    def to_numpy(self) -> np.ndarray:
        """int64 array when every entry fits, otherwise an object array."""
        flat = [x for row in self.entries for x in row]
        dtype = np.int64 if all(-(2**62) < x < 2**62 for x in flat) else object
        return np.array(flat, dtype=dtype).reshape(self.rows, self.cols)

    def to_json(self) -> list[list[str]]:
        return [[str(x) for x in row] for row in self.entries]

    @classmethod
    def from_json(cls, obj: Sequence[Sequence], cols: int | None = None) -> IntMatrix:
        return cls([[int(x) for x in row] for row in obj], cols=cols)

    @classmethod
    def identity(cls, n: int) -> IntMatrix:
        return cls([[int(i == j) for j in range(n)] for i in range(n)], cols=n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> IntMatrix:
        return cls([[0] * cols for _ in range(rows)], cols=cols)


def as_matrix(M) -> IntMatrix:
    return M if isinstance(M, IntMatrix) else IntMatrix(M)


@dataclass(frozen=True)
class SmithDecomposition:
    """``diagonal`` has min(rows, cols) entries, d_1 | d_2 | ..., zeros last.

    When transforms were requested, ``U @ M @ V`` equals the diagonal matrix.
    """

    diagonal: tuple[int, ...]
    rank: int
    shape: tuple[int, int]
    U: IntMatrix | None = None
    V: IntMatrix | None = None

    def diagonal_matrix(self) -> IntMatrix:
        r, c = self.shape
        return IntMatrix(
            [[self.diagonal[i] if i == j else 0 for j in range(c)] for i in range(r)], cols=c
        )

    def to_json(self) -> dict:
        return {
            "diagonal": [str(d) for d in self.diagonal],
            "free_rank": self.shape[0] - self.rank,
        }


class _Transforms:
    # Row ops act on U (left), column ops on V (right); disabled when None.

    def __init__(self, m: int, n: int, enabled: bool):
        self.U = [[int(i == j) for j in range(m)] for i in range(m)] if enabled else None
        self.V = [[int(i == j) for j in range(n)] for i in range(n)] if enabled else None

    def swap_rows(self, i, k):
        if self.U is not None:
            self.U[i], self.U[k] = self.U[k], self.U[i]

    def swap_cols(self, j, k):
        if self.V is not None:
            for row in self.V:
                row[j], row[k] = row[k], row[j]

    def row_axpy(self, i, k, q):
        # row_i -= q * row_k
        if self.U is not None:
            ri, rk = self.U[i], self.U[k]
            for c in range(len(ri)):
                ri[c] -= q * rk[c]

    def col_axpy(self, j, k, q):
        # col_j -= q * col_k
        if self.V is not None:
            for row in self.V:
                row[j] -= q * row[k]

    def negate_row(self, i):
        if self.U is not None:
            self.U[i] = [-x for x in self.U[i]]

    def combine(self, i, j, a, b):
        # diag(a, b) -> diag(gcd, lcm) at positions (i, i), (j, j)
        g, s, t = _xgcd(a, b)
        if self.U is not None:
            ui, uj = self.U[i], self.U[j]
            self.U[i] = [s * x + t * y for x, y in zip(ui, uj)]
            self.U[j] = [-(b // g) * x + (a // g) * y for x, y in zip(ui, uj)]
        if self.V is not None:
            for row in self.V:
                x, y = row[i], row[j]
                row[i] = x + y
                row[j] = -(t * b // g) * x + (s * a // g) * y


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, s, t with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def _find_pivot(A, t, m, n):
    # smallest |entry| in A[t:, t:], ties to lowest row then lowest column
    best, bi, bj = 0, -1, -1
    for i in range(t, m):
        row = A[i]
        for j in range(t, n):
            x = row[j]
            if x:
                ax = x if x > 0 else -x
                if bi < 0 or ax < best:
                    best, bi, bj = ax, i, j
                    if ax == 1:
                        return bi, bj
    return bi, bj


def smith_normal_form(M, want_transforms: bool = False) -> SmithDecomposition:
    """Smith normal form by gcd-pivot elimination over the integers.

    The pivot is always the entry of least absolute value in the remaining
    block, which keeps the Euclidean remainders small.  Once the pivot row
    and column are cleared the block shrinks by one; a final pass turns the
    resulting diagonal into a divisibility chain.
    """
    M = as_matrix(M)
    m, n = M.shape
    A = [list(row) for row in M.entries]
    T = _Transforms(m, n, want_transforms)
    diag: list[int] = []
    t = 0
    while t < min(m, n):
        bi, bj = _find_pivot(A, t, m, n)
        if bi < 0:
            break
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
            T.swap_rows(t, bi)
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
            T.swap_cols(t, bj)
        p = A[t][t]
        rt = A[t]
        clean = True
        for i in range(t + 1, m):
            ri = A[i]
            a = ri[t]
            if a:
                q = a // p
                for j in range(t, n):
                    if rt[j]:
                        ri[j] -= q * rt[j]
                T.row_axpy(i, t, q)
                if ri[t]:
                    clean = False
        for j in range(t + 1, n):
            a = rt[j]
            if a:
                q = a // p
                for i in range(t, m):
                    x = A[i][t]
                    if x:
                        A[i][j] -= q * x
                T.col_axpy(j, t, q)
                if rt[j]:
                    clean = False
        if not clean:
            # remainders smaller than |p| appeared; pick a new pivot
            continue
        if p < 0:
            for j in range(t, n):
                rt[j] = -rt[j]
            T.negate_row(t)
        diag.append(rt[t])
        t += 1

    diag += [0] * (min(m, n) - len(diag))
    # divisibility chain; nonzero entries already come first
    r = sum(1 for d in diag if d)
    for i in range(r):
        for j in range(i + 1, r):
            a, b = diag[i], diag[j]
            if b % a:
                g = math.gcd(a, b)
                T.combine(i, j, a, b)
                diag[i], diag[j] = g, a // g * b
    U = IntMatrix(T.U, cols=m) if want_transforms else None
    V = IntMatrix(T.V, cols=n) if want_transforms else None
    return SmithDecomposition(tuple(diag), r, (m, n), U, V)


def cokernel(M) -> tuple[AbelianGroup, int]:
    """Z^rows / M Z^cols as (torsion subgroup, free rank)."""
    M = as_matrix(M)
    snf = smith_normal_form(M)
    torsion = from_cyclic_orders(d for d in snf.diagonal if d > 1)
    return torsion, M.rows - snf.rank


def determinant(M) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    M = as_matrix(M)
    m, n = M.shape
    if m != n:
        raise ValueError(f"determinant of a non-square {m}x{n} matrix")
    if m == 0:
        return 1
    A = [list(row) for row in M.entries]
    sign, prev = 1, 1
    for k in range(m - 1):
        if A[k][k] == 0:
            for r in range(k + 1, m):
                if A[r][k]:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk, rk = A[k][k], A[k]
        for i in range(k + 1, m):
            ri = A[i]
            aik = ri[k]
            for j in range(k + 1, m):
                ri[j] = (akk * ri[j] - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    return sign * A[m - 1][m - 1]


# --- modular route ---------------------------------------------------------


@njit(cache=True)
def _valuation_below(x, p, k):
    e = 0
    while e < k and x % p == 0:
        x //= p
        e += 1
    return e


@njit(cache=True)
def _inverse_mod(a, q):
    r0, r1, s0, s1 = a % q, q, 1, 0
    while r1:
        quo = r0 // r1
        r0, r1 = r1, r0 - quo * r1
        s0, s1 = s1, s0 - quo * s1
    return s0 % q


@njit(cache=True)
def _local_exponents(A, p, k):
    # Elimination over the local ring Z/p^k.  The pivot has least p-valuation
    # in the remaining block, so it divides everything there and one pass of
    # row operations suffices; column clearing would not touch other rows.
    q = p**k
    r, c = A.shape
    B = A % q
    out = np.full(r, k, np.int64)
    for t in range(min(r, c)):
        best, bi, bj = k, -1, -1
        for i in range(t, r):
            for j in range(t, c):
                x = B[i, j]
                if x != 0:
                    e = _valuation_below(x, p, k)
                    if e < best:
                        best, bi, bj = e, i, j
                        if e == 0:
                            break
            if best == 0:
                break
        if bi < 0:
            break
        if bi != t:
            for j in range(c):
                tmp = B[t, j]
                B[t, j] = B[bi, j]
                B[bi, j] = tmp
        if bj != t:
            for i in range(r):
                tmp = B[i, t]
                B[i, t] = B[i, bj]
                B[i, bj] = tmp
        out[t] = best
        pe = p**best
        uinv = _inverse_mod(B[t, t] // pe, q)
        for i in range(t + 1, r):
            y = B[i, t]
            if y != 0:
                f = (y // pe) * uinv % q
                for j in range(t, c):
                    B[i, j] = (B[i, j] - f * B[t, j]) % q
    return out


def _local_exponents_py(rows: list[list[int]], p: int, k: int) -> list[int]:
    q = p**k
    B = [[x % q for x in row] for row in rows]
    r = len(B)
    c = len(B[0]) if r else 0
    out = [k] * r

    def val(x):
        e = 0
        while e < k and x % p == 0:
            x //= p
            e += 1
        return e

    for t in range(min(r, c)):
        best, bi, bj = k, -1, -1
        for i in range(t, r):
            for j in range(t, c):
                if B[i][j]:
                    e = val(B[i][j])
                    if e < best:
                        best, bi, bj = e, i, j
        if bi < 0:
            break
        B[t], B[bi] = B[bi], B[t]
        for row in B:
            row[t], row[bj] = row[bj], row[t]
        out[t] = best
        pe = p**best
        uinv = pow(B[t][t] // pe, -1, q)
        rt = B[t]
        for i in range(t + 1, r):
            y = B[i][t]
            if y:
                f = (y // pe) * uinv % q
                B[i] = [(x - f * z) % q for x, z in zip(B[i], rt)]
    return out


def local_cokernel_partition(M, p: int, k: int) -> tuple[int, ...]:
    """Partition of coker(M) tensor Z/p^k, i.e. (Z/p^k)^rows / M (Z/p^k)^cols.

    Parts are capped at k: a part equal to k means "at least k" in the
    integral cokernel.  ``M`` may be an IntMatrix or a 2-d integer array.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return ()
    q = p**k
    if not isinstance(M, np.ndarray):
        M = as_matrix(M)
    if isinstance(M, np.ndarray) and M.dtype == np.int64 and q < _INT64_MODULUS_LIMIT:
        exps = _local_exponents(M, p, k)
    else:
        rows = M.tolist() if not isinstance(M, IntMatrix) else [list(r) for r in M.entries]
        if q < _INT64_MODULUS_LIMIT:
            arr = np.array([[x % q for x in row] for row in rows], dtype=np.int64)
            arr = arr.reshape(len(rows), M.shape[1])
            exps = _local_exponents(arr, p, k)
        else:
            exps = _local_exponents_py(rows, p, k)
    return tuple(sorted((int(e) for e in exps if e > 0), reverse=True))


def cokernel_mod(M, a: int) -> AbelianGroup:
    """(Z/a)^rows / M (Z/a)^cols, assembled from its prime-power parts."""
    if a <= 0:
        raise ValueError(f"modulus must be positive, got {a}")
    M = M if isinstance(M, np.ndarray) else as_matrix(M)
    return AbelianGroup(
        {int(p): local_cokernel_partition(M, int(p), int(v)) for p, v in factorint(a).items()}
    )


@njit(cache=True)
def _det_mod_primes(A, primes):
    # Gaussian elimination mod each prime with delayed reduction: only the
    # pivot row and column are reduced per step.  With p < 2^25 every update
    # is below 2^50, so m < 2^12 steps cannot overflow int64.
    m = A.shape[0]
    out = np.empty(primes.shape[0], np.int64)
    B = np.empty((m, m), np.int64)
    for t in range(primes.shape[0]):
        p = primes[t]
        for i in range(m):
            for j in range(m):
                B[i, j] = A[i, j] % p
        det = 1
        for k in range(m):
            r = -1
            for i in range(k, m):
                B[i, k] %= p
                if r < 0 and B[i, k] != 0:
                    r = i
            if r < 0:
                det = 0
                break
            if r != k:
                for j in range(m):
                    tmp = B[k, j]
                    B[k, j] = B[r, j]
                    B[r, j] = tmp
                det = -det
            for j in range(k + 1, m):
                B[k, j] %= p
            piv = B[k, k]
            det = det * piv % p
            inv = _inverse_mod(piv, p)
            for i in range(k + 1, m):
                f = B[i, k] * inv % p
                if f != 0:
                    for j in range(k + 1, m):
                        B[i, j] -= f * B[k, j]
        out[t] = det % p
    return out


@lru_cache(maxsize=None)
def _det_primes(count: int) -> tuple[int, ...]:
    primes = []
    p = 2**_DET_PRIME_BITS
    for _ in range(count):
        p = prevprime(p)
        primes.append(p)
    return tuple(primes)


def hadamard_log2(A: np.ndarray) -> float:
    """log2 of the Hadamard bound on |det A| (minimum over rows and columns)."""
    sq = A.astype(np.float64) ** 2
    cols = np.log2(np.sqrt(sq.sum(axis=0)))
    rows = np.log2(np.sqrt(sq.sum(axis=1)))
    return float(min(cols.sum(), rows.sum()))


def determinant_multimodular(A) -> int:
    """Exact determinant via residues mod 25-bit primes and CRT.

    The number of primes is fixed in advance by the Hadamard bound, so the
    result is exact, not probabilistic.  Entries must fit in int64.
    """
    A = A.to_numpy() if isinstance(A, IntMatrix) else np.asarray(A)
    m = A.shape[0]
    if A.shape != (m, m):
        raise ValueError(f"determinant of a non-square {A.shape} matrix")
    if m == 0:
        return 1
    if A.dtype != np.int64 or m >= 2**12:
        return determinant(IntMatrix(A.tolist()))
    if not (A != 0).any(axis=0).all():
        return 0
    bits = hadamard_log2(A)
    # product of primes must exceed 2 * bound; 2 bits of slack for float error
    count = int(math.ceil((bits + 3) / (_DET_PRIME_BITS - 1))) + 1
    primes = _det_primes(count)
    residues = _det_mod_primes(np.ascontiguousarray(A), np.array(primes, dtype=np.int64))
    value, _ = crt(list(primes), [int(x) for x in residues], symmetric=True)
    return int(value)
