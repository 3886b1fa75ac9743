"""Bit-sequence primitives: rank, select, delimiter detection, fast division,
and base-3 decoding.

All operations treat bit position ``p`` as carrying weight ``2**p``, so a span
is just a Python integer plus an explicit length.  Two interchangeable
backends are provided: ``"native"`` uses ``int.bit_count`` and bit tricks,
``"table"`` walks the span byte by byte through two 256-entry direct-access
tables.  The table backend is the correctness reference; both must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence


class BitSpan(NamedTuple):
    """An ordered bit sequence: bit ``p`` of ``value`` is position ``p``."""

    value: int
    length: int


# --------------------------------------------------------------------------
# byte tables (mandatory portable backend)

_BYTE_POP = bytes(bin(b).count("1") for b in range(256))

# _BYTE_SELECT[(b << 3) | m] = position of the m-th set bit of byte b, 8 if none
def _build_select_table() -> bytes:
    table = bytearray(256 * 8)
    for b in range(256):
        positions = [p for p in range(8) if (b >> p) & 1]
        for m in range(8):
            table[(b << 3) | m] = positions[m] if m < len(positions) else 8
    return bytes(table)


_BYTE_SELECT = _build_select_table()


def _rank_table(value: int, i: int) -> int:
    masked = value & ((1 << i) - 1)
    count = 0
    while masked:
        count += _BYTE_POP[masked & 0xFF]
        masked >>= 8
    return count


def _select_table(value: int, m: int) -> int:
    offset = 0
    while value:
        byte = value & 0xFF
        pop = _BYTE_POP[byte]
        if m < pop:
            return offset + _BYTE_SELECT[(byte << 3) | m]
        m -= pop
        value >>= 8
        offset += 8
    return -1


def _rank_native(value: int, i: int) -> int:
    return (value & ((1 << i) - 1)).bit_count()


def _select_native(value: int, m: int) -> int:
    for _ in range(m):
        value &= value - 1
    if value == 0:
        return -1
    return (value & -value).bit_length() - 1


_BACKENDS = {
    "native": (_rank_native, _select_native),
    "table": (_rank_table, _select_table),
}

_rank_impl, _select_impl = _BACKENDS["native"]
_backend_name = "native"


def set_backend(name: str) -> None:
    """Select the rank/select implementation (``"native"`` or ``"table"``)."""
    global _rank_impl, _select_impl, _backend_name
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    _rank_impl, _select_impl = _BACKENDS[name]
    _backend_name = name


def current_backend() -> str:
    return _backend_name


# --------------------------------------------------------------------------
# rank / select / delimiters

def rank(span: BitSpan, i: int) -> int:
    """Number of set bits strictly before position ``i`` (0-indexed)."""
    if i < 0 or i > span.length:
        raise IndexError(f"rank position {i} outside span of length {span.length}")
    return _rank_impl(span.value, i)


def select(span: BitSpan, m: int) -> int:
    """Position of the set bit that has exactly ``m`` set bits before it."""
    if m < 0:
        raise ValueError("select index must be non-negative")
    pos = _select_impl(span.value, m)
    if pos < 0:
        raise ValueError(f"span has fewer than {m + 1} set bits")
    return pos


def rank_value(value: int, i: int) -> int:
    """``rank`` over a raw integer span, no bounds checks (hot-path helper)."""
    return _rank_impl(value, i)


def select_value(value: int, m: int) -> int:
    """``select`` over a raw integer span; returns -1 when absent."""
    return _select_impl(value, m)


def _odd_mask(length: int) -> int:
    # bits 1, 3, 5, ... below `length`
    full = ((1 << length) - 1) if length > 0 else 0
    mask = 0xAAAAAAAAAAAAAAAA
    out = 0
    shift = 0
    while shift < length:
        out |= mask << shift
        shift += 64
    return out & full


def delimiters_bitmap(pool: BitSpan) -> BitSpan:
    """One set bit per delimiter fragment, at its second (odd) bit position.

    Output bit ``p`` is set iff ``p`` is odd and pool bits ``p-1`` and ``p``
    are both set, which marks exactly the ``11`` fragment closing each
    extension in a well-formed pool.
    """
    value = pool.value & (pool.value << 1) & _odd_mask(pool.length)
    return BitSpan(value, pool.length)


# --------------------------------------------------------------------------
# fast division by the counters-per-chunk constant

@dataclass(frozen=True)
class FastDivContext:
    """Fixed-point reciprocal of ``divisor``, exact for dividends < ``w_max``."""

    divisor: int
    w_max: int
    reciprocal: int
    shift: int


def fastdiv_context(divisor: int, w_max: int) -> FastDivContext:
    if divisor < 1:
        raise ValueError("divisor must be positive")
    if w_max < 1:
        raise ValueError("w_max must be positive")
    prec_w = max(1, (w_max - 1).bit_length())
    prec_c = (divisor - 1).bit_length()  # ceil(log2 c), 0 for c = 1
    shift = prec_w + prec_c
    reciprocal = -((-(1 << shift)) // divisor)  # ceil(2**shift / c)
    return FastDivContext(divisor, w_max, reciprocal, shift)


def fast_div(i: int, ctx: FastDivContext) -> int:
    """Exactly ``i // ctx.divisor`` via multiply-and-shift."""
    if i < 0 or i >= ctx.w_max:
        raise IndexError(f"dividend {i} outside [0, {ctx.w_max})")
    return (i * ctx.reciprocal) >> ctx.shift


# --------------------------------------------------------------------------
# base-3 digit codec

def horner_decode(digits: Sequence[int]) -> int:
    """Decode base-3 digits (least significant first) to an unsigned value.

    Runs most-significant-first, tripling via shift-and-add at each step.
    """
    acc = 0
    for d in reversed(digits):
        if d < 0 or d > 2:
            raise ValueError(f"digit {d} outside base-3 range")
        acc = (acc << 1) + acc + d
    return acc


def encode_base3(value: int) -> list[int]:
    """Base-3 digits of ``value`` (least significant first), canonical form."""
    if value < 1:
        raise ValueError("only values >= 1 have a canonical digit string")
    digits = []
    while value:
        digits.append(value % 3)
        value //= 3
    return digits
