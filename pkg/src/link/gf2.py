"""
Dense GF(2) linear algebra on numpy arrays.

Matrices travel in two shapes: unpacked uint8 {0, 1} arrays for row
reduction, and little-endian uint64 words (bit j of a row in word j // 64
at position j % 64) for storage, hashing and the code file format.
"""

from __future__ import annotations

import numpy as np

from src.domain.errors import CodeFormatError, DomainError

WORD_BITS = 64


# -------------------------
# Packing
# -------------------------

def words_for(n: int) -> int:
    return (int(n) + WORD_BITS - 1) // WORD_BITS


def pack_rows(bits) -> np.ndarray:
    """k x n {0, 1} -> k x ceil(n/64) uint64."""
    arr = np.atleast_2d(np.asarray(bits, dtype=np.uint8) & 1)
    rows, n = arr.shape
    width = words_for(n) * WORD_BITS
    padded = np.zeros((rows, width), dtype=np.uint8)
    padded[:, :n] = arr
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_rows(packed, n: int) -> np.ndarray:
    """Inverse of pack_rows; returns k x n uint8."""
    words = np.ascontiguousarray(np.atleast_2d(packed), dtype="<u8")
    if words.shape[1] * WORD_BITS < n:
        raise DomainError(f"{words.shape[1]} words cannot hold {n} bits")
    raw = words.view(np.uint8)
    bits = np.unpackbits(raw, axis=1, bitorder="little")
    return np.ascontiguousarray(bits[:, :n])


def xor_rows(packed, mask) -> np.ndarray:
    """XOR of the rows selected by a boolean (or 0/1) mask."""
    words = np.atleast_2d(np.asarray(packed, dtype=np.uint64))
    sel = np.asarray(mask).astype(bool)
    if sel.shape[0] != words.shape[0]:
        raise DomainError("mask length must match the number of rows")
    if not sel.any():
        return np.zeros(words.shape[1], dtype=np.uint64)
    return np.bitwise_xor.reduce(words[sel], axis=0)


# -------------------------
# Row reduction
# -------------------------

def gauss_jordan(M, max_pivots: int | None = None) -> tuple[np.ndarray, list[int]]:
    """
    Reduced row-echelon form over GF(2).

    Pivots are taken greedily left to right, so with a column order sorted
    by reliability the pivot columns are the most reliable independent
    ones. Elimination stops after `max_pivots` pivots (default: row count).

    Returns (R, pivot_cols). R[i, pivot_cols[i]] = 1 and every other entry
    of a pivot column is 0.
    """
    R = (np.asarray(M, dtype=np.uint8) & 1).copy()
    m, n = R.shape
    limit = m if max_pivots is None else min(int(max_pivots), m)

    pivot_cols: list[int] = []
    row = 0
    for col in range(n):
        if row >= limit:
            break
        hits = np.flatnonzero(R[row:, col]) + row
        if hits.size == 0:
            continue
        found = int(hits[0])
        if found != row:
            R[[row, found]] = R[[found, row]]
        # clear the column everywhere else (above and below)
        others = np.flatnonzero(R[:, col])
        others = others[others != row]
        if others.size:
            R[others] ^= R[row]
        pivot_cols.append(col)
        row += 1

    return R, pivot_cols


def rank(M) -> int:
    """GF(2) rank of an unpacked matrix."""
    _, pivots = gauss_jordan(M)
    return len(pivots)


def mod2_matmul(a, b) -> np.ndarray:
    """(a @ b) mod 2 for {0, 1} operands; float32 holds sums up to 2^24 exactly."""
    left = np.asarray(a, dtype=np.float32)
    right = np.asarray(b, dtype=np.float32)
    return (np.rint(left @ right).astype(np.int64) & 1).astype(np.uint8)


def right_inverse(G) -> tuple[np.ndarray, np.ndarray]:
    """
    For a full-rank k x n generator return (info_cols, Ginv) with
    m = c[info_cols] @ Ginv (mod 2) for every codeword c = m @ G.
    """
    G = np.asarray(G, dtype=np.uint8) & 1
    k = G.shape[0]
    _, pivots = gauss_jordan(G)
    if len(pivots) != k:
        raise CodeFormatError(f"generator has rank {len(pivots)} < k={k}")

    info_cols = np.asarray(pivots, dtype=np.int64)
    square = G[:, info_cols]
    augmented = np.concatenate([square, np.eye(k, dtype=np.uint8)], axis=1)
    reduced, piv = gauss_jordan(augmented, max_pivots=k)
    if piv != list(range(k)):
        raise CodeFormatError("information columns are not invertible")
    return info_cols, np.ascontiguousarray(reduced[:, k:])


# -------------------------
# Small-code enumeration
# -------------------------

MAX_ENUM_K = 16


def all_messages(k: int) -> np.ndarray:
    """2^k x k array; row i holds the bits of i, least significant first."""
    if not 0 <= int(k) <= MAX_ENUM_K:
        raise DomainError(f"enumeration needs k <= {MAX_ENUM_K}, got {k}")
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.uint8)


def codebook(G) -> np.ndarray:
    """Every codeword of a small code, indexed like all_messages."""
    G = np.asarray(G, dtype=np.uint8)
    return mod2_matmul(all_messages(G.shape[0]), G)


def min_distance(G) -> int:
    """Minimum nonzero codeword weight by exhaustive enumeration."""
    words = codebook(G)[1:]
    if words.size == 0:
        raise DomainError("a code with k=0 has no minimum distance")
    return int(words.sum(axis=1, dtype=np.int64).min())
