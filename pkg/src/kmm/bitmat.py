"""Unsigned integer matrices with a declared element bitwidth.

Elements are stored as Python ints, so no operation can overflow; the
declared width is a checked invariant, not a storage format.  This module
also provides the digit (bit-slice) decomposition used by the multi-digit
multiplication algorithms and the operation tally that instruments them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


class KmmError(Exception):
    """Base class for all errors raised by this package."""


class BitWidthError(KmmError):
    """A value does not fit its declared width, or a width is unusable."""


class DimensionError(KmmError):
    """Matrix shapes are incompatible with the requested operation."""


class MatrixFormatError(KmmError):
    """Malformed matrix text."""


def ceil_log2(x: int) -> int:
    """Smallest k with 2**k >= x, for x >= 1."""
    if x < 1:
        raise ValueError(f"ceil_log2 requires x >= 1, got {x}")
    return (x - 1).bit_length()


def high_width(w: int) -> int:
    """Bits in the upper digit of a w-bit value: floor(w/2)."""
    return w // 2


def low_width(w: int) -> int:
    """Bits in the lower digit of a w-bit value: ceil(w/2)."""
    return (w + 1) // 2


@dataclass(frozen=True)
class UMatrix:
    """Dense matrix of unsigned integers, each below 2**width.

    Instances are immutable; every operation returns a new matrix.
    """

    rows: int
    cols: int
    width: int
    elems: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise DimensionError(f"matrix must be at least 1x1, got {self.rows}x{self.cols}")
        if self.width < 1:
            raise BitWidthError(f"element width must be >= 1, got {self.width}")
        if len(self.elems) != self.rows or any(len(r) != self.cols for r in self.elems):
            raise DimensionError("element grid does not match declared shape")
        limit = 1 << self.width
        largest = max(map(max, self.elems))
        smallest = min(map(min, self.elems))
        if smallest < 0 or largest >= limit:
            bad = smallest if smallest < 0 else largest
            raise BitWidthError(f"element {bad} does not fit {self.width} unsigned bits")

    @classmethod
    def from_rows(cls, rows: list[list[int]], width: int) -> "UMatrix":
        elems = tuple(tuple(int(e) for e in r) for r in rows)
        return cls(len(elems), len(elems[0]) if elems else 0, width, elems)

    @classmethod
    def zeros(cls, rows: int, cols: int, width: int) -> "UMatrix":
        return cls(rows, cols, width, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int, width: int) -> "UMatrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)], width)

    def at(self, i: int, j: int) -> int:
        return self.elems[i][j]

    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.elems]


@dataclass(frozen=True)
class DigitSplit:
    """Upper/lower digit matrices of a split operand, plus their optional sum.

    For a source of width w: hi holds the top floor(w/2) bits, lo the bottom
    ceil(w/2) bits, and (hi << ceil(w/2)) | lo reconstructs the source.  The
    digit sum fits ceil(w/2)+1 bits.
    """

    hi: UMatrix
    lo: UMatrix
    sum: UMatrix | None = None


def slice_high(a: UMatrix) -> UMatrix:
    """Upper digit of every element: a[i][j] >> ceil(w/2), width floor(w/2)."""
    if a.width < 2:
        raise BitWidthError(f"cannot split width {a.width}; need at least 2 bits")
    shift = low_width(a.width)
    return UMatrix(a.rows, a.cols, high_width(a.width),
                   tuple(tuple(e >> shift for e in r) for r in a.elems))


def slice_low(a: UMatrix) -> UMatrix:
    """Lower digit of every element: a[i][j] mod 2**ceil(w/2), width ceil(w/2)."""
    if a.width < 2:
        raise BitWidthError(f"cannot split width {a.width}; need at least 2 bits")
    mask = (1 << low_width(a.width)) - 1
    return UMatrix(a.rows, a.cols, low_width(a.width),
                   tuple(tuple(e & mask for e in r) for r in a.elems))


def digit_split(a: UMatrix, with_sum: bool = False) -> DigitSplit:
    hi = slice_high(a)
    lo = slice_low(a)
    return DigitSplit(hi, lo, digit_sum(hi, lo) if with_sum else None)


def digit_sum(hi: UMatrix, lo: UMatrix) -> UMatrix:
    """Element-wise hi + lo, widened by one bit so the sum never truncates."""
    if hi.shape() != lo.shape():
        raise DimensionError(f"shape mismatch: {hi.shape()} vs {lo.shape()}")
    if hi.width > lo.width:
        raise BitWidthError("digit_sum expects hi.width <= lo.width")
    return UMatrix(hi.rows, hi.cols, lo.width + 1,
                   tuple(tuple(h + l for h, l in zip(hr, lr))
                         for hr, lr in zip(hi.elems, lo.elems)))


def matrices_equal(a: UMatrix, b: UMatrix) -> bool:
    """Exact element equality; declared widths may differ."""
    return a.shape() == b.shape() and a.elems == b.elems


def random_matrix(rows: int, cols: int, width: int, seed: int) -> UMatrix:
    """Deterministic pseudo-random fill, elements uniform in [0, 2**width).

    Backed by random.Random(seed).getrandbits, so a seed pins the exact
    matrix across runs and platforms.
    """
    rng = random.Random(seed)
    return UMatrix(rows, cols, width,
                   tuple(tuple(rng.getrandbits(width) for _ in range(cols))
                         for _ in range(rows)))


def _clean(counts: dict[int, int], kind: str) -> dict[int, int]:
    for k, v in counts.items():
        if v < 0:
            raise ValueError(f"negative {kind} count at key {k}")
    return {k: v for k, v in sorted(counts.items()) if v}


@dataclass(frozen=True)
class OpCounter:
    """Tally of multiplies/adds/accumulations/shifts keyed by operand bitwidth.

    Shift entries are keyed by shift amount.  Zero entries are dropped on
    construction, so counters compare equal iff they record the same work.
    """

    mults: dict[int, int]
    adds: dict[int, int]
    accums: dict[int, int]
    shifts: dict[int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mults", _clean(self.mults, "mult"))
        object.__setattr__(self, "adds", _clean(self.adds, "add"))
        object.__setattr__(self, "accums", _clean(self.accums, "accum"))
        object.__setattr__(self, "shifts", _clean(self.shifts, "shift"))

    @classmethod
    def empty(cls) -> "OpCounter":
        return cls({}, {}, {}, {})

    def total_ops(self) -> int:
        return sum(sum(m.values()) for m in (self.mults, self.adds, self.accums, self.shifts))

    def scaled(self, factor: int) -> "OpCounter":
        return OpCounter(*({k: v * factor for k, v in m.items()}
                           for m in (self.mults, self.adds, self.accums, self.shifts)))

    def __add__(self, other: "OpCounter") -> "OpCounter":
        return counter_merge(self, other)


def _merge_maps(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return out


def counter_merge(a: OpCounter, b: OpCounter) -> OpCounter:
    """Component-wise sum; commutative and associative with empty() as identity."""
    return OpCounter(_merge_maps(a.mults, b.mults),
                     _merge_maps(a.adds, b.adds),
                     _merge_maps(a.accums, b.accums),
                     _merge_maps(a.shifts, b.shifts))


# Matrix text format: first line "rows cols width", then `rows` lines of
# `cols` whitespace-separated hex values without an 0x prefix.

def format_matrix(m: UMatrix) -> str:
    lines = [f"{m.rows} {m.cols} {m.width}"]
    lines += [" ".join(format(e, "x") for e in r) for r in m.elems]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> UMatrix:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise MatrixFormatError("empty matrix text")
    header = lines[0].split()
    if len(header) != 3:
        raise MatrixFormatError(f"header must be 'rows cols width', got {lines[0]!r}")
    try:
        rows, cols, width = (int(t) for t in header)
    except ValueError as exc:
        raise MatrixFormatError(f"non-integer header field in {lines[0]!r}") from exc
    if len(lines) - 1 != rows:
        raise MatrixFormatError(f"expected {rows} element rows, got {len(lines) - 1}")
    elems = []
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != cols:
            raise MatrixFormatError(f"expected {cols} values per row, got {len(toks)}")
        try:
            row = [int(t, 16) for t in toks]
        except ValueError as exc:
            raise MatrixFormatError(f"non-hexadecimal value in row {ln!r}") from exc
        elems.append(row)
    try:
        return UMatrix.from_rows(elems, width) if elems else UMatrix(rows, cols, width, ())
    except BitWidthError as exc:
        raise MatrixFormatError(str(exc)) from exc


def read_matrix(path: str) -> UMatrix:
    with open(path, "r", encoding="ascii") as fh:
        return parse_matrix(fh.read())


def write_matrix(path: str, m: UMatrix) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_matrix(m))
