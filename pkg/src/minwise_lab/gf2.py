"""Arithmetic in GF(2^n) and exact linear algebra over GF(2).

Field elements are plain Python ints (numpy uint64 arrays in the block
paths).  Bit i of an element holds the coefficient of x^i, so the integer
value of a polynomial doubles as its lexicographic key.  Matrices over
GF(2) are stored row-wise as int bitmasks with bit j addressing column j;
column 0 is the "leftmost" column for every pivot rule in this module.

All routines are exact; nothing here samples randomness.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NotFullRank

# ---------------------------------------------------------------------------
# polynomial arithmetic on int bitmasks
# ---------------------------------------------------------------------------


def clmul(a: int, b: int) -> int:
    """Carry-less (polynomial) product of two GF(2)[x] bitmasks."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    return acc


def poly_mod(value: int, modulus: int) -> int:
    """Remainder of ``value`` modulo ``modulus`` in GF(2)[x].

    ``modulus`` must be nonzero.  Runs in O(deg(value) - deg(modulus))
    XOR steps; both arguments are int bitmasks.
    """
    md = modulus.bit_length() - 1
    vd = value.bit_length() - 1
    while vd >= md:
        value ^= modulus << (vd - md)
        vd = value.bit_length() - 1
    return value


def poly_gcd(a: int, b: int) -> int:
    """Greatest common divisor in GF(2)[x] (polynomials are monic)."""
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _x_pow_2k_mod(k: int, modulus: int) -> int:
    """x^(2^k) mod modulus, by k squarings of the polynomial x."""
    r = 0b10
    for _ in range(k):
        r = poly_mod(clmul(r, r), modulus)
    return r


def is_irreducible(poly: int) -> bool:
    """Rabin irreducibility test for a GF(2)[x] bitmask.

    ``poly`` of degree n is irreducible iff x^(2^n) = x (mod poly) and
    gcd(x^(2^(n/p)) - x, poly) = 1 for every prime p dividing n.  The
    test is deterministic and runs in O(n) squarings, so it covers the
    full degree range of this library (n <= 64) comfortably.
    """
    n = poly.bit_length() - 1
    if n <= 0:
        return False
    if n == 1:
        return True
    if poly & 1 == 0:  # divisible by x
        return False
    if _x_pow_2k_mod(n, poly) != 0b10:
        return False
    for p in _prime_factors(n):
        h = _x_pow_2k_mod(n // p, poly) ^ 0b10
        if poly_gcd(poly, h) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# field context
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldContext:
    """GF(2^n) presented as GF(2)[x] modulo a fixed irreducible polynomial.

    Attributes
    ----------
    degree : int
        The extension degree n; elements are n-bit values.
    modulus : int
        Bitmask of the irreducible modulus.  Has its degree-n bit and its
        constant bit set.
    """

    degree: int
    modulus: int

    def __post_init__(self) -> None:
        n = self.degree
        if n < 1:
            raise ValueError("field degree must be >= 1")
        if self.modulus.bit_length() - 1 != n:
            raise ValueError("modulus degree does not match field degree")
        if not (self.modulus & 1):
            raise ValueError("modulus must have its constant bit set")

    @property
    def size(self) -> int:
        return 1 << self.degree

    def mul(self, a: int, b: int) -> int:
        return poly_mod(clmul(a, b), self.modulus)


def field_mul(ctx: FieldContext, a: int, b: int) -> int:
    """Product of two field elements under ``ctx``'s modulus."""
    return poly_mod(clmul(a, b), ctx.modulus)


@lru_cache(maxsize=None)
def find_irreducible(degree: int) -> FieldContext:
    """FieldContext for GF(2^degree) with the smallest valid modulus.

    Scans candidate bitmasks of the exact degree in increasing integer
    order and returns the first irreducible one, so the choice is the
    lexicographically smallest coefficient vector.  Candidates without a
    constant term are skipped: they are divisible by x (and for degree 1
    the modulus x would not present GF(2) faithfully as residues).
    Results are cached per degree.
    """
    if not 1 <= degree <= 64:
        raise ValueError("supported field degrees are 1..64")
    for cand in range((1 << degree) | 1, 1 << (degree + 1), 2):
        if is_irreducible(cand):
            return FieldContext(degree, cand)
    raise AssertionError("unreachable: an irreducible exists for every degree")


# ---------------------------------------------------------------------------
# vectorized field multiplication (uint64 blocks)
# ---------------------------------------------------------------------------


def mul_block(ctx: FieldContext, a: np.ndarray, b: "np.ndarray | int") -> np.ndarray:
    """Elementwise field product of a uint64 block with a scalar or block.

    Parameters
    ----------
    ctx : FieldContext
        Field of degree n <= 32 (products must fit in 64 bits).
    a : np.ndarray
        uint64 array of field elements.
    b : np.ndarray | int
        Either a single element or an array broadcastable against ``a``.

    Returns
    -------
    np.ndarray
        uint64 array of reduced products, same shape as the broadcast.
    """
    n = ctx.degree
    if n > 32:
        raise ValueError("mul_block supports field degrees up to 32")
    a = a.astype(np.uint64, copy=False)
    acc = np.zeros(np.broadcast(a, b).shape, dtype=np.uint64)
    if isinstance(b, (int, np.integer)):
        bb = int(b)
        i = 0
        while bb:
            if bb & 1:
                acc ^= a << np.uint64(i)
            bb >>= 1
            i += 1
    else:
        b = b.astype(np.uint64, copy=False)
        for i in range(n):
            bit = (b >> np.uint64(i)) & np.uint64(1)
            acc ^= (a * bit) << np.uint64(i)
    # reduce degrees 2n-2 .. n
    mod = np.uint64(ctx.modulus)
    for d in range(2 * n - 2, n - 1, -1):
        carry = (acc >> np.uint64(d)) & np.uint64(1)
        acc ^= (mod << np.uint64(d - n)) * carry
    return acc


# ---------------------------------------------------------------------------
# GF(2) matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BitMatrix:
    """Dense matrix over GF(2); row i is the int bitmask ``rows[i]``."""

    rows: tuple[int, ...]
    cols: int

    def __post_init__(self) -> None:
        if self.cols < 0:
            raise ValueError("cols must be nonnegative")
        for r in self.rows:
            if r < 0 or r >> self.cols:
                raise ValueError("row value exceeds column count")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @staticmethod
    def identity(k: int) -> "BitMatrix":
        return BitMatrix(tuple(1 << j for j in range(k)), k)

    @staticmethod
    def from_images(images: "list[int] | tuple[int, ...]", out_bits: int) -> "BitMatrix":
        """Matrix of the linear map sending basis vector e_j to images[j].

        The result has ``out_bits`` rows and ``len(images)`` columns, so
        mat_vec(result, x) reproduces the map on every x.
        """
        rows = []
        for i in range(out_bits):
            r = 0
            for j, img in enumerate(images):
                r |= ((img >> i) & 1) << j
            rows.append(r)
        return BitMatrix(tuple(rows), len(images))

    def to_array(self) -> np.ndarray:
        """(nrows, cols) uint8 view, for numpy-side checks."""
        out = np.zeros((self.nrows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.cols):
                out[i, j] = (r >> j) & 1
        return out


def mat_vec(m: BitMatrix, v: int) -> int:
    """Product m · v; bit i of the result is <row_i, v> over GF(2)."""
    out = 0
    for i, r in enumerate(m.rows):
        out |= ((r & v).bit_count() & 1) << i
    return out


def rref(m: BitMatrix) -> tuple[BitMatrix, tuple[int, ...]]:
    """Reduced row echelon form with the fixed leftmost-pivot rule.

    Returns (echelon matrix without zero rows, pivot column indices in
    increasing order).  The output is the canonical RREF of the row
    space, so every routine built on it is deterministic.
    """
    rows = list(m.rows)
    pivots: list[int] = []
    reduced: list[int] = []
    for col in range(m.cols):
        pick = None
        for idx, r in enumerate(rows):
            if (r >> col) & 1:
                pick = idx
                break
        if pick is None:
            continue
        piv = rows.pop(pick)
        rows = [r ^ piv if (r >> col) & 1 else r for r in rows]
        reduced = [r ^ piv if (r >> col) & 1 else r for r in reduced]
        reduced.append(piv)
        pivots.append(col)
    return BitMatrix(tuple(reduced), m.cols), tuple(pivots)


def rank(m: BitMatrix) -> int:
    """Rank over GF(2)."""
    return len(rref(m)[1])


def row_basis(m: BitMatrix) -> BitMatrix:
    """Maximal independent subset of rows, scanning top to bottom."""
    basis: list[int] = []  # elimination basis, one leading column each
    kept: list[int] = []
    for r in m.rows:
        cur = r
        for b in basis:
            low = b & -b
            if cur & low:
                cur ^= b
        if cur:
            basis.append(cur)
            kept.append(r)
    return BitMatrix(tuple(kept), m.cols)


def complement_basis(m: BitMatrix) -> BitMatrix:
    """Unit-vector rows completing m's row space to all of GF(2)^cols.

    Scans e_0, e_1, ... and keeps each unit vector independent of m's
    rows and the completions picked so far, so the result is the
    deterministic lexicographically-smallest completion; stacking m's
    independent rows over it gives an invertible matrix.  The rows are
    the "dual coordinates" used by the composition combinator: for
    full-row-rank m, (m·x, complement_basis(m)·x) is a bijection of x.
    """
    basis: list[int] = []

    def reduce_against(v: int) -> int:
        for b in basis:
            if v & (b & -b):
                v ^= b
        return v

    def insert(v: int) -> None:
        basis.append(v)
        basis.sort(key=lambda b: b & -b)

    for r in m.rows:
        red = reduce_against(r)
        if red:
            insert(red)
    picked = []
    for j in range(m.cols):
        if len(basis) == m.cols:
            break
        red = reduce_against(1 << j)
        if red:
            insert(red)
            picked.append(1 << j)
    return BitMatrix(tuple(picked), m.cols)


def kernel_basis(m: BitMatrix) -> BitMatrix:
    """Canonical basis of {v : m·v = 0} for a full-row-rank matrix.

    The basis is read off the RREF: one vector per free column, ordered
    by free column index, so repeated calls agree bit for bit.  Raises
    NotFullRank when rank(m) < nrows (the composition contract needs
    surjective stages, and silently dropping rows would hide that).
    """
    ech, pivots = rref(m)
    if len(pivots) != m.nrows:
        raise NotFullRank(f"matrix has rank {len(pivots)} < {m.nrows} rows")
    pivot_set = set(pivots)
    vecs = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        v = 1 << free
        for i, p in enumerate(pivots):
            if (ech.rows[i] >> free) & 1:
                v |= 1 << p
        vecs.append(v)
    return BitMatrix(tuple(vecs), m.cols)
