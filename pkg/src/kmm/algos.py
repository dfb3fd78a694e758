"""Instrumented multi-digit multiplication algorithms.

Scalar and matrix multiplication over n-digit unsigned operands, each in a
conventional (four sub-products per level) and a Karatsuba (three
sub-products per level) variant, plus the grouped-accumulation base-case
matrix multiply.  Every run returns the exact result together with an
OpCounter recording each arithmetic operation at the bitwidth it would
occupy in hardware.  Counting is structural: it depends only on the
operand shapes and digit parameters, never on element values.

A w-bit operand splits into an upper digit of floor(w/2) bits and a lower
digit of ceil(w/2) bits; the lower-digit boundary ceil(w/2) is also the
recombination shift.  The Karatsuba middle branch multiplies digit sums,
which occupy ceil(w/2)+1 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitmat import (
    BitWidthError,
    DimensionError,
    OpCounter,
    UMatrix,
    ceil_log2,
    high_width,
    low_width,
)


@dataclass(frozen=True)
class DigitParams:
    """Digit count, input bitwidth, and pre-accumulation group size.

    n must be a power of two and w >= n so every digit holds at least one
    bit.  p is the number of products pre-summed on a narrow register
    before touching the wide running sum (p = 4 unless stated otherwise).
    """

    n: int
    w: int
    p: int = 4

    def __post_init__(self) -> None:
        if self.n < 1 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"digit count must be a power of two >= 1, got {self.n}")
        if self.w < self.n:
            raise BitWidthError(f"width {self.w} leaves no bits for {self.n} digits")
        if self.p < 1:
            raise ValueError(f"pre-accumulation group size must be >= 1, got {self.p}")

    @property
    def levels(self) -> int:
        """Recursion levels: log2(n)."""
        return self.n.bit_length() - 1


@dataclass(frozen=True)
class AlgoResult:
    """Exact product (scalar int or UMatrix) plus its operation tally."""

    value: int | UMatrix
    counts: OpCounter


class _Tally:
    """Mutable operation accumulator, frozen into an OpCounter on return."""

    __slots__ = ("mults", "adds", "accums", "shifts")

    def __init__(self) -> None:
        self.mults: dict[int, int] = {}
        self.adds: dict[int, int] = {}
        self.accums: dict[int, int] = {}
        self.shifts: dict[int, int] = {}

    def bump(self, table: dict[int, int], key: int, count: int) -> None:
        table[key] = table.get(key, 0) + count

    def freeze(self) -> OpCounter:
        return OpCounter(self.mults, self.adds, self.accums, self.shifts)


def _check_operand(x: int, w: int, name: str) -> None:
    if not 0 <= x < (1 << w):
        raise BitWidthError(f"{name}={x:#x} does not fit {w} unsigned bits")


def _split_scalar(x: int, w: int) -> tuple[int, int]:
    lw = low_width(w)
    return x >> lw, x & ((1 << lw) - 1)


# --- scalar algorithms ---

def _sm_rec(a: int, b: int, n: int, w: int, t: _Tally) -> int:
    if n == 1:
        t.bump(t.mults, w, 1)
        return a * b
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    a1, a0 = _split_scalar(a, w)
    b1, b0 = _split_scalar(b, w)
    m = n // 2
    c1 = _sm_rec(a1, b1, m, hw, t)
    c10 = _sm_rec(a1, b0, m, lw, t)
    c01 = _sm_rec(a0, b1, m, lw, t)
    c0 = _sm_rec(a0, b0, m, lw, t)
    cross = c10 + c01
    assert c10 < (1 << w) and c01 < (1 << w)  # cross-products are w-bit values
    t.bump(t.adds, w, 1)
    # The upper product sits above the split boundary: shift 2*ceil(w/2),
    # which is w itself whenever w is even.
    t.bump(t.shifts, 2 * lw, 1)
    t.bump(t.shifts, lw, 1)
    c = (c1 << (2 * lw)) + (cross << lw)
    t.bump(t.adds, 2 * w, 1)
    c += c0
    t.bump(t.adds, 2 * w, 1)
    assert c == a * b and c < (1 << (2 * w))
    return c


def _ksm_rec(a: int, b: int, n: int, w: int, t: _Tally, concat_free: bool) -> int:
    if n == 1:
        t.bump(t.mults, w, 1)
        return a * b
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    a1, a0 = _split_scalar(a, w)
    b1, b0 = _split_scalar(b, w)
    a_s = a1 + a0
    b_s = b1 + b0
    t.bump(t.adds, lw, 2)
    assert a_s < (1 << (lw + 1)) and b_s < (1 << (lw + 1))
    m = n // 2
    c1 = _ksm_rec(a1, b1, m, hw, t, concat_free)
    cs = _ksm_rec(a_s, b_s, m, lw + 1, t, concat_free)
    c0 = _ksm_rec(a0, b0, m, lw, t, concat_free)
    pre = cs - c1 - c0
    t.bump(t.adds, 2 * lw + 4, 2)
    bound = 1 << (2 * lw + 3)  # signed 2*lw+4-bit range
    assert -bound <= cs - c1 < bound and -bound <= pre < bound
    t.bump(t.shifts, 2 * lw, 1)
    t.bump(t.shifts, lw, 1)
    c = (c1 << (2 * lw)) + (pre << lw)
    t.bump(t.adds, 2 * w, 1)
    c += c0
    # When 2*ceil(w/2) <= w the final addend sits entirely below the top
    # digit's shifted product, so hardware can concatenate instead of add.
    if not (concat_free and 2 * lw <= w):
        t.bump(t.adds, 2 * w, 1)
    assert c == a * b
    return c


def sm_n(a: int, b: int, params: DigitParams) -> AlgoResult:
    """Conventional n-digit scalar multiply: four sub-products per level."""
    _check_operand(a, params.w, "a")
    _check_operand(b, params.w, "b")
    t = _Tally()
    value = _sm_rec(a, b, params.n, params.w, t)
    return AlgoResult(value, t.freeze())


def ksm_n(a: int, b: int, params: DigitParams, concat_free: bool = False) -> AlgoResult:
    """Karatsuba n-digit scalar multiply: three sub-products per level.

    concat_free counts the final lower-product addition as free wiring
    whenever it cannot overlap the shifted upper product (even widths);
    the default counts it as a full 2w-bit addition.
    """
    _check_operand(a, params.w, "a")
    _check_operand(b, params.w, "b")
    t = _Tally()
    value = _ksm_rec(a, b, params.n, params.w, t, concat_free)
    return AlgoResult(value, t.freeze())


# --- matrix algorithms (internally list-of-rows of Python ints) ---

def _mm1_lists(a: list[list[int]], b: list[list[int]], w: int, p: int,
               t: _Tally) -> list[list[int]]:
    mm, kk, nn = len(a), len(b), len(b[0])
    wa = ceil_log2(kk) if kk > 1 else 0
    wp = ceil_log2(p) if p > 1 else 0
    narrow_limit = 1 << (2 * w + wp)
    wide_limit = 1 << (2 * w + wa)
    n_mult = n_narrow = n_wide = 0
    out = []
    for i in range(mm):
        arow = a[i]
        crow = []
        for j in range(nn):
            total = 0
            for k0 in range(0, kk, p):
                group = 0
                for k in range(k0, min(k0 + p, kk)):
                    prod = arow[k] * b[k][j]
                    n_mult += 1
                    if k > k0:
                        group += prod
                        n_narrow += 1
                    else:
                        group = prod
                assert group < narrow_limit
                total += group
                n_wide += 1
            assert total < wide_limit
            crow.append(total)
        out.append(crow)
    t.bump(t.mults, w, n_mult)
    if p == 1:
        # Ungrouped accumulation keeps the conventional accumulate vocabulary.
        t.bump(t.accums, 2 * w, n_wide)
    else:
        t.bump(t.adds, 2 * w + wp, n_narrow)
        t.bump(t.adds, 2 * w + wa, n_wide)
    return out


def _split_lists(m: list[list[int]], w: int) -> tuple[list[list[int]], list[list[int]]]:
    lw = low_width(w)
    mask = (1 << lw) - 1
    hi = [[e >> lw for e in row] for row in m]
    lo = [[e & mask for e in row] for row in m]
    return hi, lo


def _ewise_sum(x: list[list[int]], y: list[list[int]]) -> list[list[int]]:
    return [[u + v for u, v in zip(xr, yr)] for xr, yr in zip(x, y)]


def _assert_range(m: list[list[int]], lo: int, hi: int) -> None:
    for row in m:
        for e in row:
            assert lo <= e < hi


def _mm_rec(a: list[list[int]], b: list[list[int]], n: int, w: int, p: int,
            t: _Tally) -> list[list[int]]:
    if n == 1:
        return _mm1_lists(a, b, w, p, t)
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    a1, a0 = _split_lists(a, w)
    b1, b0 = _split_lists(b, w)
    m = n // 2
    c1 = _mm_rec(a1, b1, m, hw, p, t)
    c10 = _mm_rec(a1, b0, m, lw, p, t)
    c01 = _mm_rec(a0, b1, m, lw, p, t)
    c0 = _mm_rec(a0, b0, m, lw, p, t)
    kk = len(b)
    wa = ceil_log2(kk) if kk > 1 else 0
    cells = len(c1) * len(c1[0])
    cross = _ewise_sum(c10, c01)
    # Cross terms accumulate w-bit products of the two digit halves.
    _assert_range(c10, 0, 1 << (w + wa))
    _assert_range(c01, 0, 1 << (w + wa))
    t.bump(t.adds, w + wa, cells)
    t.bump(t.shifts, 2 * lw, cells)
    t.bump(t.shifts, lw, cells)
    out = [[(c1v << (2 * lw)) + (xv << lw) for c1v, xv in zip(c1r, xr)]
           for c1r, xr in zip(c1, cross)]
    t.bump(t.adds, 2 * w + wa, cells)
    out = _ewise_sum(out, c0)
    t.bump(t.adds, 2 * w + wa, cells)
    _assert_range(out, 0, 1 << (2 * w + wa))
    return out


def _kmm_rec(a: list[list[int]], b: list[list[int]], n: int, w: int, p: int,
             t: _Tally) -> list[list[int]]:
    if n == 1:
        return _mm1_lists(a, b, w, p, t)
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    a1, a0 = _split_lists(a, w)
    b1, b0 = _split_lists(b, w)
    a_s = _ewise_sum(a1, a0)
    b_s = _ewise_sum(b1, b0)
    t.bump(t.adds, lw, len(a) * len(a[0]) + len(b) * len(b[0]))
    m = n // 2
    c1 = _kmm_rec(a1, b1, m, hw, p, t)
    cs = _kmm_rec(a_s, b_s, m, lw + 1, p, t)
    c0 = _kmm_rec(a0, b0, m, lw, p, t)
    kk = len(b)
    wa = ceil_log2(kk) if kk > 1 else 0
    cells = len(c1) * len(c1[0])
    pre = [[sv - c1v - c0v for sv, c1v, c0v in zip(sr, c1r, c0r)]
           for sr, c1r, c0r in zip(cs, c1, c0)]
    t.bump(t.adds, 2 * lw + 4 + wa, 2 * cells)
    bound = 1 << (2 * lw + 3 + wa)  # signed 2*lw+4+wa-bit range
    _assert_range(pre, -bound, bound)
    t.bump(t.shifts, 2 * lw, cells)
    t.bump(t.shifts, lw, cells)
    out = [[(c1v << (2 * lw)) + (pv << lw) for c1v, pv in zip(c1r, pr)]
           for c1r, pr in zip(c1, pre)]
    t.bump(t.adds, 2 * w + wa, cells)
    out = _ewise_sum(out, c0)
    t.bump(t.adds, 2 * w + wa, cells)
    _assert_range(out, 0, 1 << (2 * w + wa))
    return out


def _check_matmul_inputs(a: UMatrix, b: UMatrix, w: int) -> None:
    if a.cols != b.rows:
        raise DimensionError(
            f"inner dimensions differ: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    if a.width > w or b.width > w:
        raise BitWidthError(
            f"operand widths {a.width}/{b.width} exceed algorithm width {w}")


def _result_matrix(rows: list[list[int]], w: int, kk: int) -> UMatrix:
    wa = ceil_log2(kk) if kk > 1 else 0
    return UMatrix.from_rows(rows, 2 * w + wa)


def mm1(a: UMatrix, b: UMatrix, p: int = 4) -> AlgoResult:
    """Base-case matrix multiply with grouped pre-accumulation.

    Every p consecutive products are summed on a narrow 2w+ceil(log2 p)-bit
    register before one wide add into the 2w+ceil(log2 K)-bit running sum;
    a trailing group smaller than p is still flushed through the wide add.
    """
    w = max(a.width, b.width)
    _check_matmul_inputs(a, b, w)
    if p < 1:
        raise ValueError(f"group size must be >= 1, got {p}")
    t = _Tally()
    rows = _mm1_lists(a.to_lists(), b.to_lists(), w, p, t)
    return AlgoResult(_result_matrix(rows, w, a.cols), t.freeze())


def mm_n(a: UMatrix, b: UMatrix, params: DigitParams) -> AlgoResult:
    """Conventional n-digit matrix multiply: four sub-products per level."""
    _check_matmul_inputs(a, b, params.w)
    t = _Tally()
    rows = _mm_rec(a.to_lists(), b.to_lists(), params.n, params.w, params.p, t)
    return AlgoResult(_result_matrix(rows, params.w, a.cols), t.freeze())


def kmm_n(a: UMatrix, b: UMatrix, params: DigitParams) -> AlgoResult:
    """Karatsuba n-digit matrix multiply: three sub-products per level."""
    _check_matmul_inputs(a, b, params.w)
    t = _Tally()
    rows = _kmm_rec(a.to_lists(), b.to_lists(), params.n, params.w, params.p, t)
    return AlgoResult(_result_matrix(rows, params.w, a.cols), t.freeze())


def ksmm_n(a: UMatrix, b: UMatrix, params: DigitParams,
           concat_free: bool = False) -> AlgoResult:
    """Conventional matrix multiply using Karatsuba scalar element products."""
    _check_matmul_inputs(a, b, params.w)
    t = _Tally()
    ar, br = a.to_lists(), b.to_lists()
    kk = len(br)
    out = []
    for i in range(a.rows):
        crow = []
        for j in range(b.cols):
            total = 0
            for k in range(kk):
                total += _ksm_rec(ar[i][k], br[k][j], params.n, params.w, t, concat_free)
            crow.append(total)
        out.append(crow)
    t.bump(t.accums, 2 * params.w, a.rows * b.cols * kk)
    return AlgoResult(_result_matrix(out, params.w, a.cols), t.freeze())


def reference_product(a: UMatrix, b: UMatrix) -> UMatrix:
    """Plain row-by-column product; the independent check used by the CLI."""
    if a.cols != b.rows:
        raise DimensionError(
            f"inner dimensions differ: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    ar, br = a.to_lists(), b.to_lists()
    w = max(a.width, b.width)
    rows = [[sum(ar[i][k] * br[k][j] for k in range(a.cols)) for j in range(b.cols)]
            for i in range(a.rows)]
    return _result_matrix(rows, w, a.cols)
