import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexsketch import bits
from flexsketch.bits import (
    BitSpan,
    delimiters_bitmap,
    encode_base3,
    fast_div,
    fastdiv_context,
    horner_decode,
    rank,
    select,
)


def naive_rank(span: BitSpan, i: int) -> int:
    return sum((span.value >> p) & 1 for p in range(i))


def naive_select(span: BitSpan, m: int) -> int:
    seen = 0
    for p in range(span.length):
        if (span.value >> p) & 1:
            if seen == m:
                return p
            seen += 1
    raise ValueError("not enough set bits")


def naive_delimiters(pool: BitSpan) -> int:
    # walk 2-bit fragments, mark the odd bit of every 11 fragment
    out = 0
    for start in range(0, pool.length, 2):
        frag = (pool.value >> start) & 3
        if frag == 3:
            out |= 1 << (start + 1)
    return out


@pytest.fixture(params=["native", "table"])
def backend(request):
    bits.set_backend(request.param)
    yield request.param
    bits.set_backend("native")


def test_rank_worked_example(backend):
    # positions p0..p3 = 0,1,0,1 with three preceding bits containing one 1
    span = BitSpan(0b1010, 4)
    assert rank(span, 3) == 1


def test_rank_empty_prefix(backend):
    assert rank(BitSpan(0b1111, 4), 0) == 0


def test_rank_random_spans_match_naive(backend):
    rng = random.Random(1)
    for _ in range(50):
        value = rng.getrandbits(256)
        span = BitSpan(value, 256)
        for i in range(0, 257, 7):
            assert rank(span, i) == naive_rank(span, i)


def test_rank_out_of_range(backend):
    with pytest.raises(IndexError):
        rank(BitSpan(0, 8), 9)
    with pytest.raises(IndexError):
        rank(BitSpan(0, 8), -1)


def test_select_worked_example(backend):
    span = BitSpan((1 << 5) | (1 << 9), 12)
    assert select(span, 1) == 9
    assert select(span, 0) == 5


def test_select_single_bit(backend):
    for p in (0, 17, 63, 100):
        assert select(BitSpan(1 << p, p + 1), 0) == p


def test_select_random_spans_match_naive(backend):
    rng = random.Random(2)
    for _ in range(30):
        value = rng.getrandbits(512)
        span = BitSpan(value, 512)
        total = bin(value).count("1")
        for m in range(0, total, 11):
            assert select(span, m) == naive_select(span, m)


def test_select_not_found(backend):
    with pytest.raises(ValueError):
        select(BitSpan(0b101, 3), 2)


@given(st.integers(min_value=0, max_value=(1 << 128) - 1))
@settings(max_examples=200)
def test_rank_select_duality(value):
    span = BitSpan(value, 128)
    for m in range(value.bit_count()):
        p = select(span, m)
        assert rank(span, p) == m
        assert select(span, rank(span, p)) == p


def test_backends_agree():
    rng = random.Random(3)
    for _ in range(20):
        value = rng.getrandbits(130)
        span = BitSpan(value, 130)
        total = value.bit_count()
        for name in ("native", "table"):
            bits.set_backend(name)
            try:
                ranks = [rank(span, i) for i in range(131)]
                sels = [select(span, m) for m in range(total)]
            finally:
                bits.set_backend("native")
            assert ranks == [naive_rank(span, i) for i in range(131)]
            assert sels == [naive_select(span, m) for m in range(total)]


def test_delimiters_worked_example():
    # fragments <01, 10, 11, 01, 11, 10> -> delimiters at positions 5 and 9
    frags = [2, 1, 3, 2, 3, 1]
    value = 0
    for k, f in enumerate(frags):
        value |= f << (2 * k)
    out = delimiters_bitmap(BitSpan(value, 12))
    assert out.value == (1 << 5) | (1 << 9)


def test_delimiters_all_zero():
    assert delimiters_bitmap(BitSpan(0, 64)).value == 0


def test_delimiters_random_pools_match_fragment_scan():
    rng = random.Random(4)
    for _ in range(200):
        length = rng.randrange(2, 200, 2)
        value = rng.getrandbits(length)
        pool = BitSpan(value, length)
        assert delimiters_bitmap(pool).value == naive_delimiters(pool)


def test_delimiters_one_bit_per_extension():
    # well-formed pool: encode a few extensions then check delimiter count
    rng = random.Random(5)
    for _ in range(100):
        n_ext = rng.randrange(0, 8)
        value = 0
        pos = 0
        for _ in range(n_ext):
            for d in encode_base3(rng.randrange(1, 500)):
                value |= d << pos
                pos += 2
            value |= 3 << pos
            pos += 2
        out = delimiters_bitmap(BitSpan(value, pos + 8))
        assert out.value.bit_count() == n_ext


def test_fast_div_trivial():
    ctx = fastdiv_context(7, 100)
    assert fast_div(0, ctx) == 0


def test_fast_div_worked_example():
    ctx = fastdiv_context(39, 1024)
    assert fast_div(130, ctx) == 130 // 39 == 3


@pytest.mark.parametrize("c", [1, 3, 39, 64, 75, 81])
def test_fast_div_exhaustive(c):
    w_max = 1 << 16
    ctx = fastdiv_context(c, w_max)
    for i in range(w_max):
        assert (i * ctx.reciprocal) >> ctx.shift == i // c


def test_fast_div_large_dividends_sampled():
    rng = random.Random(6)
    for c in (3, 39, 81, 100, 231):
        ctx = fastdiv_context(c, 1 << 20)
        for _ in range(2000):
            i = rng.randrange(1 << 20)
            assert fast_div(i, ctx) == i // c


def test_fast_div_out_of_range():
    ctx = fastdiv_context(5, 10)
    with pytest.raises(IndexError):
        fast_div(10, ctx)


def test_horner_worked_examples():
    assert horner_decode([2, 1]) == 5
    assert horner_decode([1]) == 1
    assert horner_decode([2, 2, 1]) == 17


def test_horner_rejects_bad_digit():
    with pytest.raises(ValueError):
        horner_decode([1, 3])


def test_horner_matches_positional_sum():
    rng = random.Random(7)
    for _ in range(500):
        digits = [rng.randrange(3) for _ in range(rng.randrange(1, 20))]
        expected = sum(d * 3**j for j, d in enumerate(digits))
        assert horner_decode(digits) == expected


def test_base3_roundtrip_dense_and_random():
    for v in range(1, 1 << 10):
        assert horner_decode(encode_base3(v)) == v
    rng = random.Random(8)
    for _ in range(2000):
        v = rng.randrange(1 << 10, 1 << 32)
        assert horner_decode(encode_base3(v)) == v


def test_base3_canonical_leading_digit():
    for v in (1, 2, 3, 80, 81, 6561):
        assert encode_base3(v)[-1] != 0
