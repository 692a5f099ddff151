"""
Codes and the channel: GF(2^m) tables, BCH generator polynomials,
cyclic and extended generator matrices, encoding, BPSK over BI-AWGN, and
the plain-text code file format.

Bit convention: 0 -> +1, 1 -> -1. Hard decisions use the same mapping
(y < 0 decides 1).

GF(2) polynomials are Python ints with bit i holding the x^i coefficient.
"""

from __future__ import annotations

import logging
import math
import re
from pathlib import Path

import numpy as np

from src.domain.errors import CodeFormatError, DomainError, InfeasibleError, ValidationError
from src.domain.models import CodeParent, CodeSpec, FieldTables
from src.link import streams
from src.link.gf2 import mod2_matmul, pack_rows, rank, unpack_rows, words_for

logger = logging.getLogger(__name__)

# Primitive polynomials (bit-encoded, x^m term included)
DEFAULT_PRIMITIVE_POLYS: dict[int, int] = {
    2: 0x7,        # x^2 + x + 1
    3: 0xB,        # x^3 + x + 1
    4: 0x13,       # x^4 + x + 1
    5: 0x25,       # x^5 + x^2 + 1
    6: 0x43,       # x^6 + x + 1
    7: 0x89,       # x^7 + x^3 + 1
    8: 0x11D,      # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


# -------------------------
# GF(2^m)
# -------------------------

def build_field(m: int, primitive_poly: int | None = None) -> FieldTables:
    if not 2 <= int(m) <= 16:
        raise DomainError(f"field degree must lie in [2, 16], got {m}")
    m = int(m)
    poly = DEFAULT_PRIMITIVE_POLYS[m] if primitive_poly is None else int(primitive_poly)
    if poly.bit_length() != m + 1:
        raise ValidationError(f"polynomial {poly:#x} does not have degree {m}")

    order = (1 << m) - 1
    antilog = np.zeros(order, dtype=np.int64)
    log = np.full(1 << m, -1, dtype=np.int64)

    x = 1
    for i in range(order):
        if log[x] != -1:
            # alpha^i repeated before 2^m - 1 steps
            raise ValidationError(f"{poly:#x} is not primitive: alpha has order {i}")
        antilog[i] = x
        log[x] = i
        x <<= 1
        if x >> m:
            x ^= poly
    if x != 1:
        raise ValidationError(f"{poly:#x} is not primitive")

    antilog.setflags(write=False)
    log.setflags(write=False)
    return FieldTables(m=m, primitive_poly=poly, log=log, antilog=antilog)


def cyclotomic_coset(field: FieldTables, i: int) -> list[int]:
    """{i * 2^j mod (2^m - 1)} in generation order."""
    order = field.order
    coset = []
    j = int(i) % order
    while j not in coset:
        coset.append(j)
        j = (2 * j) % order
    return coset


def minimal_polynomial(field: FieldTables, i: int) -> int:
    """Minimal polynomial of alpha^i over GF(2)."""
    # coefficients in GF(2^m), lowest degree first
    coeffs = [1]
    for j in cyclotomic_coset(field, i):
        root = field.power(j)
        shifted = [0] + coeffs
        for d, c in enumerate(coeffs):
            shifted[d] ^= field.mul(c, root)
        coeffs = shifted

    if any(c not in (0, 1) for c in coeffs):
        raise ValidationError(f"minimal polynomial of alpha^{i} left GF(2)")
    return sum(1 << d for d, c in enumerate(coeffs) if c)


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, b: int) -> int:
    if b == 0:
        raise DomainError("division by the zero polynomial")
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _bch_cosets(field: FieldTables, t_design: int) -> list[list[int]]:
    if int(t_design) < 1:
        raise DomainError(f"designed t must be >= 1, got {t_design}")
    seen: set[int] = set()
    cosets = []
    for i in range(1, 2 * int(t_design) + 1):
        if i % field.order in seen:
            continue
        coset = cyclotomic_coset(field, i)
        seen.update(coset)
        cosets.append(coset)
    return cosets


def bch_dimension(m: int, t_design: int) -> int:
    """k of the narrow-sense (2^m - 1, k) BCH code, from coset sizes only."""
    field = build_field(m)
    parity = sum(len(c) for c in _bch_cosets(field, t_design))
    return field.order - parity


def bch_generator(m: int, t_design: int, field: FieldTables | None = None) -> int:
    """LCM of the minimal polynomials of alpha, ..., alpha^(2t)."""
    field = build_field(m) if field is None else field
    g = 1
    for coset in _bch_cosets(field, t_design):
        g = poly_mul(g, minimal_polynomial(field, coset[0]))

    k = field.order - poly_degree(g)
    if k <= 0:
        raise InfeasibleError(f"BCH m={m} t={t_design} leaves no information bits")
    logger.debug("bch m=%s t=%s -> (%s, %s), deg g=%s", m, t_design, field.order, k, poly_degree(g))
    return g


# -------------------------
# Generator matrices
# -------------------------

def make_code(G, parent: CodeParent | None = None) -> CodeSpec:
    """Pack a k x n generator after checking it has full row rank."""
    bits = np.atleast_2d(np.asarray(G, dtype=np.uint8) & 1)
    k, n = bits.shape
    if k < 1 or k > n:
        raise CodeFormatError(f"generator shape {k}x{n} is not a valid (n, k)")
    r = rank(bits)
    if r != k:
        raise CodeFormatError(f"generator rows are dependent: rank {r} < k={k}")
    return CodeSpec(n=n, k=k, generator=pack_rows(bits), parent=parent)


def cyclic_generator_matrix(g: int, n: int) -> np.ndarray:
    """Rows g(x) * x^i for i < k = n - deg g."""
    deg = poly_degree(g)
    k = int(n) - deg
    if k < 1:
        raise InfeasibleError(f"deg g = {deg} leaves no information bits at n={n}")
    coeffs = np.array([(g >> d) & 1 for d in range(deg + 1)], dtype=np.uint8)
    G = np.zeros((k, n), dtype=np.uint8)
    for i in range(k):
        G[i, i:i + deg + 1] = coeffs
    return G


def extend_code(code: CodeSpec) -> CodeSpec:
    """Append an overall even-parity column: (n, k) -> (n + 1, k)."""
    n = code.n
    if (n + 1) & n:
        raise DomainError(f"extension expects n = 2^m - 1, got {n}")
    G = code.matrix
    parity = (G.sum(axis=1, dtype=np.int64) & 1).astype(np.uint8)
    extended = np.concatenate([G, parity[:, None]], axis=1)

    parent = code.parent
    if parent is not None:
        parent = CodeParent(m=parent.m, t_design=parent.t_design, extended=True)
    return CodeSpec(n=n + 1, k=code.k, generator=pack_rows(extended), parent=parent)


def bch_code(m: int, t_design: int, extend: bool = True, primitive_poly: int | None = None) -> CodeSpec:
    field = build_field(m, primitive_poly)
    g = bch_generator(m, t_design, field)
    cyclic = make_code(
        cyclic_generator_matrix(g, field.order),
        parent=CodeParent(m=int(m), t_design=int(t_design), extended=False),
    )
    code = extend_code(cyclic) if extend else cyclic
    logger.info("built BCH code (%s, %s) m=%s t=%s extended=%s", code.n, code.k, m, t_design, extend)
    return code


# -------------------------
# Encoding and channel
# -------------------------

def encode(code: CodeSpec, message) -> np.ndarray:
    """message x G over GF(2); a 2-D input encodes one message per row."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != code.k:
        raise ValidationError(f"message length {msg.shape[-1]} != k={code.k}")
    return mod2_matmul(msg, code.matrix)


def modulate(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def hard_decision(y) -> np.ndarray:
    return (np.asarray(y) < 0.0).astype(np.uint8)


def transmit(code_bits, rho: float, seed: int, trial: int = 0) -> np.ndarray:
    """y = sqrt(rho) * x + z, with z from the (seed, trial) noise stream."""
    if float(rho) < 0.0:
        raise DomainError(f"SNR must be >= 0, got {rho}")
    x = modulate(code_bits)
    return math.sqrt(float(rho)) * x + streams.noise(seed, trial, x.shape[-1])


# -------------------------
# Code file format
# -------------------------

_PARENT_RE = re.compile(r"^#\s*bch\s+m=(\d+)\s+t=(\d+)\s+extended=([01])\s*$")


def _row_to_int(row_words: np.ndarray) -> int:
    return sum(int(w) << (64 * i) for i, w in enumerate(row_words))


def _int_to_row(value: int, words: int) -> np.ndarray:
    mask = (1 << 64) - 1
    return np.array([(value >> (64 * i)) & mask for i in range(words)], dtype=np.uint64)


def format_code(code: CodeSpec) -> str:
    digits = (code.n + 3) // 4
    lines = []
    if code.parent is not None:
        p = code.parent
        lines.append(f"# bch m={p.m} t={p.t_design} extended={int(p.extended)}")
    lines.append(f"{code.n} {code.k}")
    for row in code.generator:
        lines.append(f"{_row_to_int(row):0{digits}x}")
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> CodeSpec:
    parent = None
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            hit = _PARENT_RE.match(line)
            if hit:
                parent = CodeParent(m=int(hit[1]), t_design=int(hit[2]), extended=hit[3] == "1")
            continue
        body.append(line)

    if not body:
        raise CodeFormatError("code file is empty")
    header = body[0].split()
    if len(header) != 2:
        raise CodeFormatError(f"header must be 'n k', got {body[0]!r}")
    try:
        n, k = int(header[0]), int(header[1])
    except ValueError as exc:
        raise CodeFormatError(f"header must be two integers, got {body[0]!r}") from exc
    if len(body) - 1 != k:
        raise CodeFormatError(f"expected {k} generator rows, found {len(body) - 1}")

    words = words_for(n)
    rows = []
    for line in body[1:]:
        try:
            value = int(line, 16)
        except ValueError as exc:
            raise CodeFormatError(f"bad hex row {line!r}") from exc
        if value >> n:
            raise CodeFormatError(f"row {line!r} has bits beyond n={n}")
        rows.append(_int_to_row(value, words))

    return make_code(unpack_rows(np.stack(rows), n), parent=parent)


def write_code(path: str | Path, code: CodeSpec) -> Path:
    target = Path(path)
    target.write_text(format_code(code), encoding="utf-8")
    logger.info("wrote (%s, %s) code to %s", code.n, code.k, target)
    return target


def read_code(path: str | Path) -> CodeSpec:
    return parse_code(Path(path).read_text(encoding="utf-8"))
