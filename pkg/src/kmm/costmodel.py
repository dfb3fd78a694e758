"""Closed-form cost models for the multi-digit multiplication algorithms.

Three model families: keyed operation-count predictions that must match the
instrumented executions in kmm.algos key-by-key, plain arithmetic totals
for algorithm-level comparisons, and an area model that prices every adder,
register, and multiplier in the systolic-array architectures in units of
one full adder (AU).  Also hosts the compute-efficiency roofs and the
policy that picks how many Karatsuba recursion levels to build in hardware.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .bitmat import BitWidthError, OpCounter, ceil_log2, high_width, low_width

FLIPFLOP_AU_PER_BIT = 0.7  # one flip-flop costs ~0.7 full adders per bit

_AREA_SWEEP_WIDTHS = (8, 16, 24, 32, 40, 48, 56, 64)


@dataclass(frozen=True)
class OpBreakdown:
    """Predicted operation counts in the same keyed shape as OpCounter."""

    mults: dict[int, int]
    adds: dict[int, int]
    accums: dict[int, int]
    shifts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(sum(m.values()) for m in (self.mults, self.adds, self.accums, self.shifts))

    def as_counter(self) -> OpCounter:
        return OpCounter(dict(self.mults), dict(self.adds), dict(self.accums), dict(self.shifts))


class _Acc:
    """Keyed-count accumulator shared by the complexity recursions."""

    def __init__(self) -> None:
        self.mults: dict[int, int] = {}
        self.adds: dict[int, int] = {}
        self.accums: dict[int, int] = {}
        self.shifts: dict[int, int] = {}

    def bump(self, table: dict[int, int], key: int, count: int) -> None:
        if count:
            table[key] = table.get(key, 0) + count

    def freeze(self) -> OpBreakdown:
        def clean(m: dict[int, int]) -> dict[int, int]:
            return {k: v for k, v in sorted(m.items()) if v}
        return OpBreakdown(clean(self.mults), clean(self.adds), clean(self.accums),
                           clean(self.shifts))


def _require_pow2(n: int) -> int:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"digit count must be a power of two >= 1, got {n}")
    return n.bit_length() - 1


def _wa(k: int) -> int:
    return ceil_log2(k) if k > 1 else 0


def _mm1_base(acc: _Acc, w: int, d: int, p: int) -> None:
    # d^2 output elements, each accumulating K = d products.
    wa = _wa(d)
    acc.bump(acc.mults, w, d ** 3)
    if p == 1:
        acc.bump(acc.accums, 2 * w, d ** 3)
        return
    wp = ceil_log2(p)
    full, rem = divmod(d, p)
    narrow = full * (p - 1) + (rem - 1 if rem else 0)
    wide = full + (1 if rem else 0)
    acc.bump(acc.adds, 2 * w + wp, narrow * d * d)
    acc.bump(acc.adds, 2 * w + wa, wide * d * d)


def complexity_mm_n(n: int, w: int, d: int, p: int = 4) -> OpBreakdown:
    """Predicted counts for the conventional n-digit d x d matrix multiply.

    The base case prices d^3 multiplies plus d^3 accumulations; with p > 1
    the accumulations expand into the grouped narrow/wide additions, with
    p = 1 they stay in the accumulate vocabulary.
    """
    _require_pow2(n)
    acc = _Acc()
    _mm_rec(acc, n, w, d, p)
    return acc.freeze()


def _mm_rec(acc: _Acc, n: int, w: int, d: int, p: int) -> None:
    if n == 1:
        _mm1_base(acc, w, d, p)
        return
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    wa = _wa(d)
    _mm_rec(acc, n // 2, hw, d, p)
    for _ in range(3):
        _mm_rec(acc, n // 2, lw, d, p)
    acc.bump(acc.adds, w + wa, d * d)
    acc.bump(acc.adds, 2 * w + wa, 2 * d * d)
    # Upper-product shift amount is twice the split boundary, i.e. w when even.
    acc.bump(acc.shifts, 2 * lw, d * d)
    acc.bump(acc.shifts, lw, d * d)


def complexity_ksm_n(n: int, w: int, concat_free: bool = False) -> OpBreakdown:
    """Predicted counts for the Karatsuba n-digit scalar multiply."""
    _require_pow2(n)
    acc = _Acc()
    _ksm_rec(acc, n, w, concat_free)
    return acc.freeze()


def _ksm_rec(acc: _Acc, n: int, w: int, concat_free: bool) -> None:
    if n == 1:
        acc.bump(acc.mults, w, 1)
        return
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    _ksm_rec(acc, n // 2, hw, concat_free)
    _ksm_rec(acc, n // 2, lw + 1, concat_free)
    _ksm_rec(acc, n // 2, lw, concat_free)
    acc.bump(acc.adds, lw, 2)
    acc.bump(acc.adds, 2 * lw + 4, 2)
    acc.bump(acc.shifts, 2 * lw, 1)
    acc.bump(acc.shifts, lw, 1)
    acc.bump(acc.adds, 2 * w, 1 if (concat_free and 2 * lw <= w) else 2)


def complexity_ksmm_n(n: int, w: int, d: int, concat_free: bool = False) -> OpBreakdown:
    """Predicted counts for matrix multiply built from Karatsuba scalar products."""
    per_product = complexity_ksm_n(n, w, concat_free)
    acc = _Acc()
    for key, v in per_product.mults.items():
        acc.bump(acc.mults, key, v * d ** 3)
    for key, v in per_product.adds.items():
        acc.bump(acc.adds, key, v * d ** 3)
    for key, v in per_product.shifts.items():
        acc.bump(acc.shifts, key, v * d ** 3)
    acc.bump(acc.accums, 2 * w, d ** 3)
    return acc.freeze()


def complexity_kmm_n(n: int, w: int, d: int, p: int = 4) -> OpBreakdown:
    """Predicted counts for the Karatsuba n-digit d x d matrix multiply."""
    _require_pow2(n)
    acc = _Acc()
    _kmm_rec(acc, n, w, d, p)
    return acc.freeze()


def _kmm_rec(acc: _Acc, n: int, w: int, d: int, p: int) -> None:
    if n == 1:
        _mm1_base(acc, w, d, p)
        return
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    wa = _wa(d)
    _kmm_rec(acc, n // 2, hw, d, p)
    _kmm_rec(acc, n // 2, lw + 1, d, p)
    _kmm_rec(acc, n // 2, lw, d, p)
    acc.bump(acc.adds, lw, 2 * d * d)
    acc.bump(acc.adds, 2 * lw + 4 + wa, 2 * d * d)
    acc.bump(acc.adds, 2 * w + wa, 2 * d * d)
    acc.bump(acc.shifts, 2 * lw, d * d)
    acc.bump(acc.shifts, lw, d * d)


def arith_counts(algorithm: str, n: int, d: int) -> int:
    """Total arithmetic operations, ignoring bitwidths and operation type.

    Closed forms for the decomposed algorithms; n = 1 is the undecomposed
    base (d^3 multiplies plus d^3 accumulations) for every algorithm.
    """
    r = _require_pow2(n)
    if n == 1:
        return 2 * d ** 3
    scale = 3 ** (r - 1)  # (n/2) ** log2(3), exact for power-of-two n
    if algorithm == "mm":
        return 2 * n * n * d ** 3 + 5 * (n // 2) ** 2 * d * d
    if algorithm == "ksmm":
        return (1 + 11 * scale) * d ** 3
    if algorithm == "kmm":
        return scale * (6 * d ** 3 + 8 * d * d)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected mm, ksmm, or kmm")


# --- area model ---

@dataclass(frozen=True)
class AreaEstimate:
    """Area-unit total split into multiplier, adder, and register parts."""

    multiplier_au: float
    adder_au: float
    register_au: float

    @property
    def total_au(self) -> float:
        return self.multiplier_au + self.adder_au + self.register_au

    def __add__(self, other: "AreaEstimate") -> "AreaEstimate":
        return AreaEstimate(self.multiplier_au + other.multiplier_au,
                            self.adder_au + other.adder_au,
                            self.register_au + other.register_au)

    def scaled(self, factor: float) -> "AreaEstimate":
        return AreaEstimate(self.multiplier_au * factor, self.adder_au * factor,
                            self.register_au * factor)


def area_primitive(kind: str, w: int) -> float:
    """AU cost of one primitive: add -> w, flipflop -> 0.7*w, mult -> w**2."""
    if w < 1:
        raise BitWidthError(f"primitive width must be >= 1, got {w}")
    if kind == "add":
        return float(w)
    if kind == "flipflop":
        return FLIPFLOP_AU_PER_BIT * w
    if kind == "mult":
        return float(w * w)
    raise ValueError(f"unknown primitive {kind!r}; expected add, flipflop, or mult")


def _accumulator_au(w_in: int, x: int, p: int) -> tuple[float, float]:
    """Per-PE averaged (adder_au, register_au) of the grouped accumulator."""
    wa = _wa(x)
    wp = ceil_log2(p) if p > 1 else 0
    adder = ((p - 1) * area_primitive("add", 2 * w_in + wp)
             + area_primitive("add", 2 * w_in + wa)) / p
    register = area_primitive("flipflop", 2 * w_in + wa) / p
    return adder, register


def area_mm1_mxu(x: int, y: int, w_in: int, p: int = 4) -> AreaEstimate:
    """Area of the baseline X x Y weight-stationary MXU.

    Each PE holds one w_in-bit multiplier, three w_in-bit registers (the
    two operand buffers plus the double-buffered stationary operand), and
    a 1/p share of the grouped accumulator.
    """
    acc_add, acc_reg = _accumulator_au(w_in, x, p)
    pes = x * y
    return AreaEstimate(
        multiplier_au=pes * area_primitive("mult", w_in),
        adder_au=pes * acc_add,
        register_au=pes * (3 * area_primitive("flipflop", w_in) + acc_reg),
    )


def _ksm_multiplier_au(n: int, w: int, concat_free: bool) -> tuple[float, float]:
    """(multiplier_au, adder_au) of one n-digit Karatsuba scalar multiplier."""
    if n == 1:
        return area_primitive("mult", w), 0.0
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    adds = 2 * (area_primitive("add", 2 * lw + 4) + area_primitive("add", lw))
    adds += area_primitive("add", 2 * w)
    if not (concat_free and 2 * lw <= w):
        adds += area_primitive("add", 2 * w)
    mult = 0.0
    for sub_w in (hw, lw + 1, lw):
        m, a = _ksm_multiplier_au(n // 2, sub_w, concat_free)
        mult += m
        adds += a
    return mult, adds


def area_ksmm_mxu(x: int, y: int, n: int, w_in: int, p: int = 4,
                  concat_free: bool = False) -> AreaEstimate:
    """Area of a baseline MXU whose PEs use Karatsuba scalar multipliers.

    concat_free prices the multiplier's final lower-product addition as
    free concatenation where alignment allows; the default keeps it, which
    is the convention under which the level-selection policy settles on
    one recursion level at every swept bitwidth.  n = 1 degenerates to the
    baseline array.
    """
    _require_pow2(n)
    mult, adds = _ksm_multiplier_au(n, w_in, concat_free)
    acc_add, acc_reg = _accumulator_au(w_in, x, p)
    pes = x * y
    return AreaEstimate(
        multiplier_au=pes * mult,
        adder_au=pes * (adds + acc_add),
        register_au=pes * (3 * area_primitive("flipflop", w_in) + acc_reg),
    )


def area_kmm_mxu(x: int, y: int, n: int, w_in: int, p: int = 4) -> AreaEstimate:
    """Area of the fixed-precision Karatsuba MXU with log2(n) recursion levels.

    Each level adds 2X input adders at the digit boundary and 2Y+2Y output
    adders (the signed pre-sum pair and the two full-width merges) around
    three recursively instantiated sub-MXUs; shifts are wiring and cost
    nothing.  The recursion bottoms out in baseline MXUs, so n = 1 is the
    baseline array itself.
    """
    _require_pow2(n)
    return _kmm_mxu_rec(x, y, n, w_in, p)


def _kmm_mxu_rec(x: int, y: int, n: int, w: int, p: int) -> AreaEstimate:
    if n == 1:
        return area_mm1_mxu(x, y, w, p)
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    hw, lw = high_width(w), low_width(w)
    wa = _wa(x)
    adders = 2 * x * area_primitive("add", lw)
    adders += 2 * y * (area_primitive("add", 2 * lw + 4 + wa)
                       + area_primitive("add", 2 * w + wa))
    total = AreaEstimate(0.0, adders, 0.0)
    for sub_w in (hw, lw + 1, lw):
        total = total + _kmm_mxu_rec(x, y, n // 2, sub_w, p)
    return total


# --- efficiency roofs and recursion-level selection ---

def recursion_depth(w_in: int, w_m: int) -> int:
    """Digit-splitting levels needed to run w_in-bit inputs on w_m-bit multipliers."""
    if w_in < 1 or w_m < 1:
        raise BitWidthError("widths must be >= 1")
    return ceil_log2(-(-w_in // w_m))


def efficiency_roof(algorithm: str, r: int) -> float:
    """Peak effective multiplier utilization: 1 conventionally, (4/3)**r for Karatsuba."""
    if r < 0:
        raise ValueError(f"recursion level must be >= 0, got {r}")
    if algorithm == "mm" or r == 0:
        return 1.0
    if algorithm == "kmm":
        return (4.0 / 3.0) ** r
    raise ValueError(f"unknown algorithm {algorithm!r}; expected mm or kmm")


@dataclass(frozen=True)
class RoofModel:
    """Efficiency roof of an algorithm at a given recursion depth."""

    algorithm: str
    r: int
    roof: float

    @classmethod
    def for_depth(cls, algorithm: str, r: int) -> "RoofModel":
        return cls(algorithm, r, efficiency_roof(algorithm, r))


def select_recursion_levels(w_in: int, w_m: int, x: int, y: int, p: int = 4,
                            algorithm: str = "kmm") -> int:
    """Greedy hardware recursion depth: deepen while the modeled area shrinks.

    Always returns at least one level, even when that level costs more area
    than the undecomposed baseline MXU.
    """
    if w_in <= w_m:
        raise BitWidthError(f"w_in={w_in} already fits {w_m}-bit multipliers")
    if algorithm == "kmm":
        area = lambda r: area_kmm_mxu(x, y, 1 << r, w_in, p).total_au
    elif algorithm == "ksmm":
        area = lambda r: area_ksmm_mxu(x, y, 1 << r, w_in, p).total_au
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected kmm or ksmm")
    r = 1
    best = area(1)
    while True:
        try:
            nxt = area(r + 1)
        except BitWidthError:
            return r
        if nxt >= best:
            return r
        r, best = r + 1, nxt


# --- model-curve emitters ---

def arith_count_rows(d: int = 64, digit_counts: tuple[int, ...] = (2, 4, 8, 16, 32)):
    """Arithmetic totals per algorithm and digit count: (n, alg, arith_count)."""
    rows = []
    for n in digit_counts:
        for alg in ("mm", "ksmm", "kmm"):
            rows.append((n, alg, arith_counts(alg, n, d)))
    return rows


def mult_roof_rows(w_m: int = 8):
    """Precision-scalable efficiency roofs per input width: (w_in, alg, roof).

    The Karatsuba-capable array re-reads tiles three times in its middle
    width band and reaches 4/3 there; the conventional array roofs at 1
    everywhere.
    """
    rows = []
    for w_in in range(1, 2 * w_m + 1):
        rows.append((w_in, "ps-mm2", 1.0))
        kmm2 = w_m < w_in <= 2 * w_m - 2
        rows.append((w_in, "ps-kmm", 4.0 / 3.0 if kmm2 else 1.0))
    return rows


def au_roof_rows(x: int = 64, y: int = 64, p: int = 4,
                 widths: tuple[int, ...] = _AREA_SWEEP_WIDTHS, policy_w_m: int = 4):
    """Relative AU-efficiency roofs at selected recursion levels.

    Rows are (w_in, alg, relative_roof, levels); relative_roof is the
    baseline MXU area divided by the architecture's area at equal array
    dimensions, since equal-sized arrays share the same throughput roof.
    """
    rows = []
    for w in widths:
        base = area_mm1_mxu(x, y, w, p).total_au
        rows.append((w, "mm", 1.0, 0))
        r_ksmm = select_recursion_levels(w, policy_w_m, x, y, p, algorithm="ksmm")
        ksmm = area_ksmm_mxu(x, y, 1 << r_ksmm, w, p).total_au
        rows.append((w, "ksmm", base / ksmm, r_ksmm))
        r_kmm = select_recursion_levels(w, policy_w_m, x, y, p, algorithm="kmm")
        kmm = area_kmm_mxu(x, y, 1 << r_kmm, w, p).total_au
        rows.append((w, "kmm", base / kmm, r_kmm))
    return rows


def write_csv(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".9f")
    return str(v)
