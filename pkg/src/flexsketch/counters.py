"""Variable-length counter arrays.

A ``CounterArray`` stores ``w`` logical counters inside fixed-size chunks.
Each chunk packs, in bit order: an overflows bitmap (one bit per counter),
the counters' fixed-width stubs (``s`` magnitude bits plus an optional sign
bit), a one-bit mode flag, and an extension pool.  A counter whose value
exceeds its stub keeps its high-order part either as a base-3 fragment string
in the pool (mode 0) or, when the pool cannot hold all extensions, in an
external per-chunk tails slab addressed by a 48-bit handle (mode 1).

Chunks are plain Python integers; bit position ``p`` carries weight ``2**p``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import bits
from .bits import fastdiv_context

HANDLE_BITS = 48
TAILS_ENTRY_BITS = 32
_TAILS_MAX = (1 << TAILS_ENTRY_BITS) - 1
_HANDLE_MASK = (1 << HANDLE_BITS) - 1

_MAGIC = b"FXCA"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBIIIQQQ")


class CounterUnderflowError(ValueError):
    """Unsigned decrement of a zero counter (deletion contract violated)."""


class CounterOverflowError(OverflowError):
    """A counter's high part no longer fits a 32-bit tails entry."""


class CapacityError(RuntimeError):
    """The tails registry ran out of 48-bit handles."""


@dataclass(frozen=True)
class CounterConfig:
    """Geometry of a counter array: chunk size, counters per chunk, stub bits."""

    chunk_bits: int = 512
    counters_per_chunk: int = 64
    stub_bits: int = 6
    signed: bool = False

    def __post_init__(self):
        if self.counters_per_chunk < 1:
            raise ValueError("need at least one counter per chunk")
        if not 1 <= self.stub_bits <= 32:
            raise ValueError("stub_bits must be in [1, 32]")
        if self.footprint_per_counter_bits() * self.counters_per_chunk + 1 + HANDLE_BITS > self.chunk_bits:
            raise ValueError(
                f"chunk of {self.chunk_bits} bits cannot hold "
                f"{self.counters_per_chunk} counters with {self.stub_bits}-bit stubs "
                f"(signed={self.signed}) plus a {HANDLE_BITS}-bit handle"
            )

    def footprint_per_counter_bits(self) -> int:
        # overflow bit + stub (magnitude plus optional sign)
        return 1 + self.stub_bits + (1 if self.signed else 0)

    @property
    def stub_width(self) -> int:
        return self.stub_bits + (1 if self.signed else 0)

    @property
    def pool_bits(self) -> int:
        c = self.counters_per_chunk
        return self.chunk_bits - c * (1 + self.stub_width) - 1

    @property
    def max_abs_value(self) -> int:
        return (1 << (self.stub_bits + TAILS_ENTRY_BITS)) - 1

    @classmethod
    def default_signed(cls, chunk_bits: int = 512, stub_bits: int = 6) -> "CounterConfig":
        """Widest signed geometry for the given stub length."""
        c = (chunk_bits - 1 - HANDLE_BITS) // (2 + stub_bits)
        return cls(chunk_bits, c, stub_bits, True)


@dataclass(frozen=True)
class FootprintReport:
    allocated_bits: int
    content_bits: int
    tails_slabs: int
    tuning: tuple[int, int]  # (counters_per_chunk, stub_bits)


class TailsRegistry:
    """Growable store of per-chunk tails slabs, addressed by small handles."""

    def __init__(self):
        self._slabs: list[list[int] | None] = []
        self._free: list[int] = []

    def allocate(self, entries: list[int]) -> int:
        if self._free:
            handle = self._free.pop()
            self._slabs[handle] = entries
        else:
            handle = len(self._slabs)
            if handle > _HANDLE_MASK:
                raise CapacityError("tails registry exhausted its 48-bit handle space")
            self._slabs.append(entries)
        return handle

    def slab(self, handle: int) -> list[int]:
        slab = self._slabs[handle]
        if slab is None:
            raise KeyError(f"stale tails handle {handle}")
        return slab

    def release(self, handle: int) -> None:
        self._slabs[handle] = None
        self._free.append(handle)

    def live_handles(self) -> list[int]:
        return [h for h, s in enumerate(self._slabs) if s is not None]

    @property
    def live_count(self) -> int:
        return len(self._slabs) - len(self._free)


def _digits_base3(value: int) -> int:
    n = 0
    while value:
        n += 1
        value //= 3
    return n


class CounterArray:
    """``w`` variable-length counters over a sequence of fixed-size chunks."""

    def __init__(self, w: int, config: CounterConfig | None = None):
        if w < 1:
            raise ValueError("counter array needs at least one counter")
        self.config = config or CounterConfig()
        self.w = w
        self._load_layout()
        n_chunks = -(-w // self._c)
        self.chunks: list[int] = [0] * n_chunks
        self.registry = TailsRegistry()
        self._pool_used: list[int] = [0] * n_chunks
        self._pool_used_sum = 0
        self._tails_chunks = 0
        self._last_noop_sig: tuple | None = None

    def _load_layout(self) -> None:
        cfg = self.config
        self._B = cfg.chunk_bits
        self._c = cfg.counters_per_chunk
        self._s = cfg.stub_bits
        self._signed = 1 if cfg.signed else 0
        self._sw = cfg.stub_width
        self._s_max = (1 << self._s) - 1
        self._sw_mask = (1 << self._sw) - 1
        self._mode_off = self._c + self._c * self._sw
        self._pool_off = self._mode_off + 1
        self._P = self._B - self._pool_off
        self._below_pool = (1 << self._pool_off) - 1
        self._odd_m = bits._odd_mask(self._P)
        ctx = fastdiv_context(self._c, max(self.w, 1))
        self._recip = ctx.reciprocal
        self._shift = ctx.shift

    # -- basic access ------------------------------------------------------

    def _addressable(self, ci: int) -> int:
        return min(self._c, self.w - ci * self._c)

    def read(self, i: int) -> int:
        if not 0 <= i < self.w:
            raise IndexError(f"counter {i} outside [0, {self.w})")
        ci = (i * self._recip) >> self._shift
        j = i - ci * self._c
        chunk = self.chunks[ci]
        stub = (chunk >> (self._c + j * self._sw)) & self._sw_mask
        if self._signed:
            mag = stub & self._s_max
            neg = stub >> self._s
        else:
            mag = stub
            neg = 0
        if (chunk >> j) & 1:
            if (chunk >> self._mode_off) & 1:
                hi = self.registry.slab((chunk >> self._pool_off) & _HANDLE_MASK)[j]
            else:
                pool = chunk >> self._pool_off
                m = (chunk & ((1 << j) - 1)).bit_count()
                delims = pool & (pool << 1) & self._odd_m
                end = bits.select_value(delims, m)
                start = 0 if m == 0 else bits.select_value(delims, m - 1) + 1
                hi = 0
                p = end - 3
                while p >= start:
                    hi = 3 * hi + ((pool >> p) & 3)
                    p -= 2
            mag += hi << self._s
        return -mag if neg else mag

    def values(self) -> list[int]:
        """Decode every counter with one sequential pool walk per chunk."""
        out = []
        for ci, chunk in enumerate(self.chunks):
            addr = self._addressable(ci)
            tails = (chunk >> self._mode_off) & 1
            slab = None
            if tails:
                slab = self.registry.slab((chunk >> self._pool_off) & _HANDLE_MASK)
            pool = chunk >> self._pool_off
            p = 0
            for j in range(addr):
                stub = (chunk >> (self._c + j * self._sw)) & self._sw_mask
                if self._signed:
                    mag = stub & self._s_max
                    neg = stub >> self._s
                else:
                    mag = stub
                    neg = 0
                if (chunk >> j) & 1:
                    if tails:
                        hi = slab[j]
                    else:
                        digits = []
                        while True:
                            frag = (pool >> p) & 3
                            p += 2
                            if frag == 3:
                                break
                            digits.append(frag)
                        hi = bits.horner_decode(digits)
                    mag += hi << self._s
                out.append(-mag if neg else mag)
        return out

    # -- updates -----------------------------------------------------------

    def add(self, i: int, delta: int) -> None:
        """Apply a +1/-1 update to counter ``i``."""
        if not 0 <= i < self.w:
            raise IndexError(f"counter {i} outside [0, {self.w})")
        if delta not in (1, -1):
            raise ValueError("delta must be +1 or -1")
        ci = (i * self._recip) >> self._shift
        j = i - ci * self._c
        chunk = self.chunks[ci]
        stub_off = self._c + j * self._sw
        stub = (chunk >> stub_off) & self._sw_mask
        if self._signed:
            mag = stub & self._s_max
            if mag == 0 and not ((chunk >> j) & 1):
                # value is zero: magnitude becomes 1 with the delta's sign
                new_stub = 1 | ((1 << self._s) if delta < 0 else 0)
                self.chunks[ci] = chunk ^ ((stub ^ new_stub) << stub_off)
                return
            dm = -delta if stub >> self._s else delta
        else:
            mag = stub
            dm = delta
        if dm > 0:
            if mag != self._s_max:
                self.chunks[ci] = chunk + (1 << stub_off)
                return
            self._carry(ci, j, chunk, stub_off)
        else:
            if mag != 0:
                new_chunk = chunk - (1 << stub_off)
                if self._signed and mag == 1 and not ((chunk >> j) & 1):
                    # magnitude reached zero with no high part: sign of zero is +
                    new_chunk &= ~(1 << (stub_off + self._s))
                self.chunks[ci] = new_chunk
                return
            if not ((chunk >> j) & 1):
                raise CounterUnderflowError(
                    f"decrement of zero counter {i}: deletions must target previously inserted keys"
                )
            self._borrow(ci, j, chunk, stub_off)

    def _carry(self, ci: int, j: int, chunk: int, stub_off: int) -> None:
        # stub magnitude wraps to zero, the high part gains one
        chunk -= self._s_max << stub_off
        if (chunk >> self._mode_off) & 1:
            self._tails_add(ci, chunk, j, 1)
            return
        pool = chunk >> self._pool_off
        used = self._pool_used[ci]
        if not (chunk >> j) & 1:
            # no extension yet: insert <digit 1, delimiter>
            if used + 4 > self._P:
                self.chunks[ci] = chunk
                self.migrate_to_tails(ci)
                self._tails_add(ci, self.chunks[ci], j, 1)
                return
            m = (chunk & ((1 << j) - 1)).bit_count()
            if m == 0:
                off = 0
            else:
                delims = pool & (pool << 1) & self._odd_m
                off = bits.select_value(delims, m - 1) + 1
            low = pool & ((1 << off) - 1)
            pool = low | (13 << off) | ((pool >> off) << (off + 4))
            chunk = (chunk & self._below_pool) | (pool << self._pool_off) | (1 << j)
            self.chunks[ci] = chunk
            self._pool_used[ci] = used + 4
            self._pool_used_sum += 4
            return
        # increment the existing base-3 extension in place
        m = (chunk & ((1 << j) - 1)).bit_count()
        delims = pool & (pool << 1) & self._odd_m
        start = 0 if m == 0 else bits.select_value(delims, m - 1) + 1
        end = bits.select_value(delims, m)
        n_digits = (end - 1 - start) // 2
        p = start
        grew = False
        while True:
            frag = (pool >> p) & 3
            if frag == 3:
                # carry ran past the last digit: new leading digit 1
                if used + 2 > self._P:
                    self.chunks[ci] = chunk + (self._s_max << stub_off)  # undo stub wrap
                    self.migrate_to_tails(ci)
                    self._tails_add(ci, self.chunks[ci], j, 1)
                    # redo the stub wrap on the migrated chunk
                    self.chunks[ci] -= self._s_max << stub_off
                    return
                low = pool & ((1 << p) - 1)
                pool = low | (1 << p) | ((pool >> p) << (p + 2))
                grew = True
                n_digits += 1
                end += 2
                break
            if frag == 2:
                pool &= ~(2 << p)  # digit 2 -> 0, keep carrying
                p += 2
                continue
            pool += 1 << p  # digit 0 -> 1 or 1 -> 2
            break
        if n_digits >= 21:
            hi = 0
            q = end - 3
            while q >= start:
                hi = 3 * hi + ((pool >> q) & 3)
                q -= 2
            if hi > _TAILS_MAX:
                raise CounterOverflowError(f"counter {ci * self._c + j} high part exceeds 32 bits")
        self.chunks[ci] = (chunk & self._below_pool) | (pool << self._pool_off)
        if grew:
            self._pool_used[ci] += 2
            self._pool_used_sum += 2

    def _borrow(self, ci: int, j: int, chunk: int, stub_off: int) -> None:
        # stub magnitude wraps to its maximum, the high part loses one
        chunk += self._s_max << stub_off
        if (chunk >> self._mode_off) & 1:
            self._tails_add(ci, chunk, j, -1)
            return
        pool = chunk >> self._pool_off
        m = (chunk & ((1 << j) - 1)).bit_count()
        delims = pool & (pool << 1) & self._odd_m
        start = 0 if m == 0 else bits.select_value(delims, m - 1) + 1
        p = start
        removed = 0
        clear_overflow = False
        while True:
            frag = (pool >> p) & 3
            if frag == 0:
                pool |= 2 << p  # digit 0 -> 2, keep borrowing
                p += 2
                continue
            if frag == 2:
                pool ^= 3 << p  # digit 2 -> 1
                break
            # digit 1 -> 0; drop it if it was the most significant digit
            pool &= ~(1 << p)
            if (pool >> (p + 2)) & 3 == 3:
                if p == start:
                    # high part reached zero: remove fragment and delimiter
                    low = pool & ((1 << start) - 1)
                    pool = low | ((pool >> (start + 4)) << start)
                    removed = 4
                    clear_overflow = True
                else:
                    low = pool & ((1 << p) - 1)
                    pool = low | ((pool >> (p + 2)) << p)
                    removed = 2
            break
        chunk = (chunk & self._below_pool) | (pool << self._pool_off)
        if clear_overflow:
            chunk &= ~(1 << j)
        self.chunks[ci] = chunk
        if removed:
            self._pool_used[ci] -= removed
            self._pool_used_sum -= removed

    def _tails_add(self, ci: int, chunk: int, j: int, dhi: int) -> None:
        slab = self.registry.slab((chunk >> self._pool_off) & _HANDLE_MASK)
        hi = slab[j] + dhi
        if hi > _TAILS_MAX:
            raise CounterOverflowError(f"counter {ci * self._c + j} high part exceeds 32 bits")
        slab[j] = hi
        if hi == 0:
            chunk &= ~(1 << j)
        else:
            chunk |= 1 << j
        self.chunks[ci] = chunk

    # -- tails migration ----------------------------------------------------

    def migrate_to_tails(self, chunk_index: int) -> None:
        """Move a chunk's high parts into a fresh tails slab; reads unchanged."""
        chunk = self.chunks[chunk_index]
        if (chunk >> self._mode_off) & 1:
            raise ValueError(f"chunk {chunk_index} is already in tails mode")
        entries = [0] * self._c
        pool = chunk >> self._pool_off
        p = 0
        for j in range(self._addressable(chunk_index)):
            if (chunk >> j) & 1:
                digits = []
                while True:
                    frag = (pool >> p) & 3
                    p += 2
                    if frag == 3:
                        break
                    digits.append(frag)
                entries[j] = bits.horner_decode(digits)
        handle = self.registry.allocate(entries)
        chunk = (chunk & self._below_pool) | (1 << self._mode_off) | (handle << self._pool_off)
        self.chunks[chunk_index] = chunk
        self._pool_used_sum -= self._pool_used[chunk_index]
        self._pool_used[chunk_index] = 0
        self._tails_chunks += 1

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, values: list[int], config: CounterConfig | None = None) -> "CounterArray":
        """Encode a value vector; chunks whose extensions fit stay in mode 0."""
        arr = cls(max(len(values), 1), config)
        if not values:
            return arr
        cfg = arr.config
        limit = cfg.max_abs_value
        s = arr._s
        c = arr._c
        sw = arr._sw
        for ci in range(len(arr.chunks)):
            addr = arr._addressable(ci)
            base = ci * c
            chunk = 0
            ext_bits = 0
            his = []
            for j in range(addr):
                v = values[base + j]
                if cfg.signed:
                    if abs(v) > limit:
                        raise ValueError(f"value {v} outside signed range of this tuning")
                    neg = v < 0
                    mag = -v if neg else v
                else:
                    if v < 0 or v > limit:
                        raise ValueError(f"value {v} outside unsigned range of this tuning")
                    neg = False
                    mag = v
                hi = mag >> s
                stub = mag & arr._s_max
                if neg:
                    stub |= 1 << s
                chunk |= stub << (c + j * sw)
                his.append(hi)
                if hi:
                    chunk |= 1 << j
                    ext_bits += 2 * (_digits_base3(hi) + 1)
            if ext_bits <= arr._P:
                pool = 0
                p = 0
                for hi in his:
                    if hi:
                        while hi:
                            pool |= (hi % 3) << p
                            p += 2
                            hi //= 3
                        pool |= 3 << p
                        p += 2
                chunk |= pool << arr._pool_off
                arr._pool_used[ci] = p
                arr._pool_used_sum += p
            else:
                entries = his + [0] * (c - addr)
                handle = arr.registry.allocate(entries)
                chunk |= (1 << arr._mode_off) | (handle << arr._pool_off)
                arr._tails_chunks += 1
            arr.chunks[ci] = chunk
        return arr

    def grow_to(self, w_new: int) -> None:
        """Append zero counters so the array addresses ``w_new`` of them."""
        if w_new < self.w:
            raise ValueError("counter arrays never shrink in place")
        if w_new == self.w:
            return
        n_chunks = -(-w_new // self._c)
        extra = n_chunks - len(self.chunks)
        if extra:
            self.chunks.extend([0] * extra)
            self._pool_used.extend([0] * extra)
        self.w = w_new
        ctx = fastdiv_context(self._c, self.w)
        self._recip = ctx.reciprocal
        self._shift = ctx.shift

    def concat_self(self) -> None:
        """Double the array: counters [w, 2w) become copies of [0, w)."""
        if self.w % self._c:
            raise ValueError("can only double an array of whole chunks")
        copies = []
        for ci, chunk in enumerate(self.chunks):
            if (chunk >> self._mode_off) & 1:
                entries = list(self.registry.slab((chunk >> self._pool_off) & _HANDLE_MASK))
                handle = self.registry.allocate(entries)
                chunk = (chunk & self._below_pool) | (1 << self._mode_off) | (handle << self._pool_off)
                self._tails_chunks += 1
            copies.append(chunk)
        self.chunks.extend(copies)
        self._pool_used.extend(self._pool_used[: len(copies)])
        self._pool_used_sum *= 2
        self.w *= 2
        ctx = fastdiv_context(self._c, self.w)
        self._recip = ctx.reciprocal
        self._shift = ctx.shift

    # -- adaptive tuning ----------------------------------------------------

    def needs_retune(self) -> bool:
        n_chunks = len(self.chunks)
        if self._tails_chunks * 100 > n_chunks:
            return True
        slack = (n_chunks - self._tails_chunks) * self._P - self._pool_used_sum
        return slack > 2 * self.w

    def maybe_retune(self) -> bool:
        """Re-tune (c, s) to minimize footprint; returns whether a rebuild ran.

        The trigger is O(1) on incrementally maintained stats; the histogram
        pass runs only when it fires and its stats signature changed since the
        last no-op pass.
        """
        if not self.needs_retune():
            return False
        sig = (self._tails_chunks, self._pool_used_sum, len(self.chunks), self.w)
        if sig == self._last_noop_sig:
            return False
        vals = self.values()
        winner = self._search_tuning(vals)
        current = (self._c, self._s)
        if winner == current:
            self._last_noop_sig = sig
            return False
        c2, s2 = winner
        cfg = CounterConfig(self._B, c2, s2, self.config.signed)
        rebuilt = CounterArray.build(vals, cfg)
        self.config = cfg
        self.chunks = rebuilt.chunks
        self.registry = rebuilt.registry
        self._pool_used = rebuilt._pool_used
        self._pool_used_sum = rebuilt._pool_used_sum
        self._tails_chunks = rebuilt._tails_chunks
        self._load_layout()
        self._last_noop_sig = None
        return True

    def _search_tuning(self, vals: list[int]) -> tuple[int, int]:
        """Pick (c, s) minimizing the estimated footprint for these values.

        Buckets counters by bit length (worst case within a bucket), then for
        each candidate bounds the tails-chunk fraction by Chebyshev on the
        total extension length per chunk.
        """
        w = self.w
        hist = [0] * 65
        total_len = 0
        for v in vals:
            l = abs(v).bit_length()
            hist[l] += 1
            total_len += l
        s_hi = min(32, int(total_len / w) + 2)
        B = self._B
        signed = self._signed
        best_score = None
        best = None
        current = (self._c, self._s)
        current_score = None
        for s2 in range(1, s_hi + 1):
            mu_sum = 0.0
            sq_sum = 0.0
            for l in range(s2 + 1, 65):
                if not hist[l]:
                    continue
                e = 2 * (_digits_base3(((1 << l) - 1) >> s2) + 1)
                mu_sum += hist[l] * e
                sq_sum += hist[l] * e * e
            mu = mu_sum / w
            var = sq_sum / w - mu * mu
            c_max = (B - 1 - HANDLE_BITS) // (2 + s2 + signed)
            for c2 in range(1, c_max + 1):
                P2 = B - c2 * (1 + s2 + signed) - 1
                gap = P2 - c2 * mu
                if gap > 0:
                    frac = min(1.0, c2 * var / (gap * gap))
                else:
                    frac = 1.0
                n_ch = -(-w // c2)
                score = n_ch * B + frac * n_ch * (c2 * TAILS_ENTRY_BITS + 64)
                if best_score is None or score < best_score:
                    best_score = score
                    best = (c2, s2)
                if (c2, s2) == current:
                    current_score = score
        if current_score is not None and current_score <= best_score:
            return current
        return best

    # -- accounting ----------------------------------------------------------

    def footprint(self) -> FootprintReport:
        allocated = len(self.chunks) * self._B + self.registry.live_count * self._c * TAILS_ENTRY_BITS
        sw = self._sw
        content = 0
        for ci, chunk in enumerate(self.chunks):
            addr = self._addressable(ci)
            content += addr * sw
            if (chunk >> self._mode_off) & 1:
                content += ((chunk & ((1 << addr) - 1)).bit_count()) * TAILS_ENTRY_BITS
            else:
                content += self._pool_used[ci]
        return FootprintReport(allocated, content, self.registry.live_count, (self._c, self._s))

    # -- serialization -------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Versioned little-endian dump: header, raw chunk bits, tails slabs.

        Layout (all little-endian):
          magic "FXCA" | u16 version | u8 signed | u8 reserved |
          u32 chunk_bits | u32 counters_per_chunk | u32 stub_bits |
          u64 w | u64 n_chunks | u64 n_slabs
          then n_chunks * (chunk_bits/8) bytes of chunk content,
          then per slab: u64 handle followed by counters_per_chunk u32 entries.
        """
        handles = self.registry.live_handles()
        parts = [
            _HEADER.pack(
                _MAGIC, _VERSION, self._signed, 0,
                self._B, self._c, self._s,
                self.w, len(self.chunks), len(handles),
            )
        ]
        nbytes = self._B // 8
        for chunk in self.chunks:
            parts.append(chunk.to_bytes(nbytes, "little"))
        for h in handles:
            parts.append(struct.pack("<Q", h))
            parts.append(struct.pack(f"<{self._c}I", *self.registry.slab(h)))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CounterArray":
        magic, version, signed, _, B, c, s, w, n_chunks, n_slabs = _HEADER.unpack_from(data, 0)
        if magic != _MAGIC:
            raise ValueError("not a counter-array dump")
        if version != _VERSION:
            raise ValueError(f"unsupported dump version {version}")
        arr = cls(w, CounterConfig(B, c, s, bool(signed)))
        off = _HEADER.size
        nbytes = B // 8
        chunks = []
        for _ in range(n_chunks):
            chunks.append(int.from_bytes(data[off : off + nbytes], "little"))
            off += nbytes
        arr.chunks = chunks
        slabs: dict[int, list[int]] = {}
        for _ in range(n_slabs):
            (handle,) = struct.unpack_from("<Q", data, off)
            off += 8
            entries = list(struct.unpack_from(f"<{c}I", data, off))
            off += 4 * c
            slabs[handle] = entries
        registry = TailsRegistry()
        if slabs:
            top = max(slabs) + 1
            registry._slabs = [slabs.get(h) for h in range(top)]
            registry._free = [h for h in range(top) if h not in slabs]
        arr.registry = registry
        # recompute incremental stats from the chunk images
        arr._pool_used = [0] * n_chunks
        arr._pool_used_sum = 0
        arr._tails_chunks = 0
        for ci, chunk in enumerate(chunks):
            if (chunk >> arr._mode_off) & 1:
                arr._tails_chunks += 1
                continue
            pool = chunk >> arr._pool_off
            delims = pool & (pool << 1) & arr._odd_m
            n_ext = (chunk & ((1 << arr._addressable(ci)) - 1)).bit_count()
            used = 0 if n_ext == 0 else bits.select_value(delims, n_ext - 1) + 1
            arr._pool_used[ci] = used
            arr._pool_used_sum += used
        return arr
