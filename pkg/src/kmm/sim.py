"""Deterministic functional-cycle simulation of the MXU architectures.

Simulates weight-stationary X x Y systolic arrays doing tiled GEMM: the
baseline array, the fixed-precision Karatsuba array (a tree of 3**r
concurrent sub-arrays joined by input adders and a post-adder unit), and
the precision-scalable arrays that serve wide inputs by re-reading each
tile pair under different digit slices (once, three times, or four times
depending on the input width).

Timing is data independent.  A stationary tile loads while the previous
tile's rows stream, so a load is fully hidden whenever at least X rows
stream per loaded tile; the shortfall stalls.  Array fill/drain (and the
first load) are charged once as a configurable pipeline latency.  Matrix
arithmetic is evaluated a full pass at a time in whichever of float64 /
int64 / object arithmetic is exact for the configured widths, and every
simulated datapath value is checked against its register's declared
width (exhaustively on passes up to a size threshold, and by worst-case
operand bounds plus exact input/output checks above it).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .bitmat import BitWidthError, DimensionError, KmmError, UMatrix, ceil_log2, low_width, high_width
from .costmodel import recursion_depth

EXHAUSTIVE_CHECK_CELLS = 1 << 22  # pass work (M*X*Y) above this uses bound checks


class ConfigError(KmmError):
    """Simulator configuration rejected."""


class DatapathWidthError(KmmError):
    """A simulated value does not fit its register's declared width."""


class MxuVariant(enum.Enum):
    BASELINE_MM1 = "baseline"
    FIXED_KMM = "fixed-kmm"
    PS_KMM = "ps-kmm"
    PS_MM2 = "ps-mm2"


class Mode(enum.Enum):
    MM = "mm"
    MM2 = "mm2"
    KMM2 = "kmm2"


_MODE_READS = {Mode.MM: 1, Mode.KMM2: 3, Mode.MM2: 4}


@dataclass(frozen=True)
class MxuConfig:
    """Array geometry, multiplier width, accumulator grouping, and variant."""

    variant: MxuVariant
    x: int = 64
    y: int = 64
    w_m: int = 8
    p: int = 4
    pipeline_latency: int | None = None  # None -> x + y fill/drain cycles
    fixed_r: int | None = None  # FIXED_KMM tree depth; None -> derived from w_in

    def __post_init__(self) -> None:
        if self.x < 1 or self.y < 1:
            raise ConfigError(f"array dimensions must be >= 1, got {self.x}x{self.y}")
        if self.w_m < 2:
            raise ConfigError(f"multiplier width must be >= 2, got {self.w_m}")
        if self.p < 1:
            raise ConfigError(f"pre-accumulation group size must be >= 1, got {self.p}")
        if self.pipeline_latency is not None and self.pipeline_latency < 0:
            raise ConfigError("pipeline latency must be >= 0")
        if self.fixed_r is not None and self.fixed_r < 1:
            raise ConfigError("fixed Karatsuba tree depth must be >= 1")

    @property
    def latency(self) -> int:
        return self.x + self.y if self.pipeline_latency is None else self.pipeline_latency


@dataclass(frozen=True)
class PassRole:
    """One tile read: which operand digits stream and how the output folds in.

    terms are (coefficient, left-shift) pairs; the pass contributes
    sum(coeff * (P << shift)) of its raw tile product P to the external
    accumulator.
    """

    name: str
    a_src: str  # full | hi | lo | sum
    b_src: str
    terms: tuple[tuple[int, int], ...]

    def factor(self) -> int:
        return sum(c * (1 << s) for c, s in self.terms)


@dataclass(frozen=True)
class TileSchedule:
    """Read count and per-read roles for one (A tile, B tile) pair."""

    mode: Mode
    reads_per_tile: int
    pass_roles: tuple[PassRole, ...]
    split_bit: int  # digit boundary; 0 when tiles stream unsliced

    def __post_init__(self) -> None:
        if self.reads_per_tile != len(self.pass_roles):
            raise ConfigError("reads_per_tile must match the number of pass roles")


def select_mode(variant: MxuVariant, w_in: int, w_m: int) -> Mode:
    """Map an input width onto the single mode a variant runs it in."""
    if w_in < 1:
        raise BitWidthError(f"input width must be >= 1, got {w_in}")
    if variant == MxuVariant.BASELINE_MM1:
        if w_in > w_m:
            raise BitWidthError(f"baseline array needs w_in <= {w_m}, got {w_in}")
        return Mode.MM
    if variant == MxuVariant.PS_KMM:
        if w_in <= w_m:
            return Mode.MM
        if w_in <= 2 * w_m - 2:
            return Mode.KMM2
        if w_in <= 2 * w_m:
            return Mode.MM2
        raise BitWidthError(f"unsupported width {w_in}; this array serves up to {2 * w_m} bits")
    if variant == MxuVariant.PS_MM2:
        if w_in <= w_m:
            return Mode.MM
        if w_in <= 2 * w_m:
            return Mode.MM2
        raise BitWidthError(f"unsupported width {w_in}; this array serves up to {2 * w_m} bits")
    raise ConfigError(f"{variant.value} has no tile schedule; it streams each tile once")


def build_schedule(variant: MxuVariant, w_in: int, w_m: int) -> TileSchedule:
    mode = select_mode(variant, w_in, w_m)
    if mode == Mode.MM:
        roles = (PassRole("direct", "full", "full", ((1, 0),)),)
        return TileSchedule(mode, 1, roles, 0)
    if mode == Mode.KMM2:
        h = w_m - 1
        roles = (
            PassRole("c1", "hi", "hi", ((1, 2 * h), (-1, h))),
            PassRole("cs", "sum", "sum", ((1, h),)),
            PassRole("c0", "lo", "lo", ((1, 0), (-1, h))),
        )
        return TileSchedule(mode, 3, roles, h)
    h = w_m
    roles = (
        PassRole("c1", "hi", "hi", ((1, 2 * h),)),
        PassRole("c10", "hi", "lo", ((1, h),)),
        PassRole("c01", "lo", "hi", ((1, h),)),
        PassRole("c0", "lo", "lo", ((1, 0),)),
    )
    return TileSchedule(mode, 4, roles, h)


@dataclass(frozen=True)
class SimReport:
    """Cycle counts, work counters, and efficiency of one simulated GEMM."""

    variant: str
    mode: str
    reads_per_tile: int
    w_in: int
    w_m: int
    x: int
    y: int
    m: int
    k: int
    n: int
    p: int
    reps: int
    tiles_k: int
    tiles_n: int
    m_blocks: int
    n_passes: int
    pipeline_latency: int
    stream_cycles: int
    stall_cycles: int
    total_cycles: int
    r: int
    num_multipliers: int
    base_mults_performed: int
    effective_win_mults: int
    efficiency: float
    steady_state_efficiency: float
    pass_summary: tuple[tuple[str, int], ...]

    def summary_lines(self) -> list[str]:
        return [
            f"variant={self.variant} mode={self.mode} reads/tile={self.reads_per_tile}",
            f"gemm {self.m}x{self.k}x{self.n} (reps={self.reps}) on {self.x}x{self.y} "
            f"array, w_m={self.w_m}, w_in={self.w_in}, p={self.p}",
            f"tiles: {self.tiles_k} along K, {self.tiles_n} along N, "
            f"{self.m_blocks} row blocks -> {self.n_passes} passes",
            f"cycles: {self.total_cycles} total = {self.pipeline_latency} latency "
            f"+ {self.stream_cycles} streaming + {self.stall_cycles} stalled",
            f"multipliers={self.num_multipliers} base mults={self.base_mults_performed} "
            f"effective {self.w_in}-bit mults={self.effective_win_mults}",
            f"efficiency={self.efficiency:.6f} (steady state "
            f"{self.steady_state_efficiency:.6f}, r={self.r})",
        ]


# --- exact array arithmetic in float64 / int64 / object ---

def _pick_kind(max_bits: int) -> str:
    if max_bits <= 52:
        return "f"
    if max_bits <= 62:
        return "i"
    return "o"


def _as_array(rows: list[list[int]], kind: str) -> np.ndarray:
    if kind == "f":
        return np.array(rows, dtype=np.float64)
    if kind == "i":
        return np.array(rows, dtype=np.int64)
    return np.array(rows, dtype=object)


def _zeros(shape: tuple[int, int], kind: str) -> np.ndarray:
    if kind == "f":
        return np.zeros(shape, dtype=np.float64)
    if kind == "i":
        return np.zeros(shape, dtype=np.int64)
    return np.full(shape, 0, dtype=object)


def _pow2(bits: int, kind: str):
    return float(2 ** bits) if kind == "f" else (1 << bits)


def _scalar(value: int, kind: str):
    return float(value) if kind == "f" else value


def _split_digits(arr: np.ndarray, h: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    if kind == "f":
        hi = np.floor_divide(arr, float(2 ** h))
        return hi, arr - hi * float(2 ** h)
    hi = arr >> h
    return hi, arr - (hi << h)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DatapathWidthError(message)


def _check_below(arr: np.ndarray, bits: int, kind: str, what: str) -> None:
    _require(bool(arr.max() < _pow2(bits, kind)) and bool(arr.min() >= 0),
             f"{what} exceeds {bits} unsigned bits")


def _check_signed(arr: np.ndarray, bits: int, kind: str, what: str) -> None:
    bound = _pow2(bits - 1, kind)
    _require(bool(arr.max() < bound) and bool(-bound <= arr.min()),
             f"{what} exceeds signed {bits}-bit range")


def _mxu_matmul(a_win: np.ndarray, b_win: np.ndarray, mult_w: int, p: int,
                wa: int, kind: str, exhaustive: bool) -> np.ndarray:
    """One stationary-tile product with accumulator register checks.

    The physical accumulator is sized for the multiplier width: a narrow
    2*mult_w + ceil(log2 p) pre-sum register and a 2*mult_w + wa running
    sum.  Operand checks plus those sizes make overflow structurally
    impossible, and on small passes every register value is recomputed and
    checked exhaustively.
    """
    wp = ceil_log2(p) if p > 1 else 0
    prod = a_win @ b_win
    _check_below(prod, 2 * mult_w + wa, kind, "tile accumulator value")
    if exhaustive:
        kk = a_win.shape[1]
        narrow = _pow2(2 * mult_w + wp, kind)
        running = None
        for k0 in range(0, kk, p):
            part = a_win[:, k0:k0 + p] @ b_win[k0:k0 + p, :]
            _require(bool(part.max() < narrow), "pre-accumulation register overflow")
            running = part if running is None else running + part
            _check_below(running, 2 * mult_w + wa, kind, "running-sum register")
    return prod


def _tree_product(a_win: np.ndarray, b_win: np.ndarray, w: int, r: int, p: int,
                  wa: int, kind: str, exhaustive: bool) -> np.ndarray:
    """Fixed-precision Karatsuba tree: 3**r concurrent sub-arrays.

    Input adders form the digit sums ahead of the middle sub-array; the
    post-adder unit per output column merges the three sub-products.
    """
    if r == 0:
        return _mxu_matmul(a_win, b_win, w, p, wa, kind, exhaustive)
    if w < 2:
        raise BitWidthError(f"cannot split width {w} into digits")
    lw = low_width(w)
    a_hi, a_lo = _split_digits(a_win, lw, kind)
    b_hi, b_lo = _split_digits(b_win, lw, kind)
    a_sum = a_hi + a_lo
    b_sum = b_hi + b_lo
    _check_below(a_sum, lw + 1, kind, "input-adder output")
    _check_below(b_sum, lw + 1, kind, "input-adder output")
    p1 = _tree_product(a_hi, b_hi, high_width(w), r - 1, p, wa, kind, exhaustive)
    ps = _tree_product(a_sum, b_sum, lw + 1, r - 1, p, wa, kind, exhaustive)
    p0 = _tree_product(a_lo, b_lo, lw, r - 1, p, wa, kind, exhaustive)
    pre = ps - p1 - p0
    _check_signed(ps - p1, 2 * lw + 4 + wa, kind, "post-adder intermediate")
    _check_signed(pre, 2 * lw + 4 + wa, kind, "post-adder pre-sum")
    out = p1 * _pow2(2 * lw, kind) + pre * _pow2(lw, kind) + p0
    _check_below(out, 2 * w + wa, kind, "post-adder output")
    return out


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _value_bits(cfg: MxuConfig, w_in: int, tiles_k: int, reads: int,
                reps: int) -> int:
    """Worst-case bits of any simulated value, for exact-dtype selection."""
    wa = ceil_log2(cfg.x) if cfg.x > 1 else 0
    if cfg.variant == MxuVariant.FIXED_KMM:
        core = 2 * w_in + wa + 2  # post-adder shifts stay below the root width
    else:
        shift = 2 * cfg.w_m  # largest output fold-in shift across modes
        core = 2 * cfg.w_m + wa + shift + 1
    external = ceil_log2(max(2, tiles_k * reads * reps))
    return core + external + 2


def gemm_driver(cfg: MxuConfig, a: UMatrix, b: UMatrix, w_in: int,
                reps: int = 1) -> tuple[UMatrix, SimReport]:
    """Tile, stream, and externally accumulate a full GEMM on one MXU.

    B is tiled X x Y and held stationary; A streams in X-column strips,
    chunked into X-row blocks.  Precision-scalable variants re-read each
    tile pair once per pass role; partial tile products are folded into a
    full-width external accumulator, which GEMM systems provide anyway.
    """
    if a.cols != b.rows:
        raise DimensionError(
            f"inner dimensions differ: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    if a.width > w_in or b.width > w_in:
        raise BitWidthError(f"operand widths {a.width}/{b.width} exceed w_in={w_in}")
    if reps < 1:
        raise ConfigError(f"repetitions must be >= 1, got {reps}")

    mm, kk, nn = a.rows, a.cols, b.cols
    x, y = cfg.x, cfg.y
    tiles_k, tiles_n = _ceil_div(kk, x), _ceil_div(nn, y)
    wa = ceil_log2(x) if x > 1 else 0

    if cfg.variant == MxuVariant.FIXED_KMM:
        if w_in <= cfg.w_m:
            raise ConfigError(
                f"fixed Karatsuba array needs w_in > {cfg.w_m}; use the baseline array")
        r = cfg.fixed_r if cfg.fixed_r is not None else recursion_depth(w_in, cfg.w_m)
        schedule = None
        reads = 1
        mode_label = "kmm-fixed"
        num_arrays = 3 ** r
    else:
        schedule = build_schedule(cfg.variant, w_in, cfg.w_m)
        reads = schedule.reads_per_tile
        r = recursion_depth(w_in, cfg.w_m)
        mode_label = schedule.mode.value
        num_arrays = 1

    kind = _pick_kind(_value_bits(cfg, w_in, tiles_k, reads, reps))
    exhaustive = mm * x * y <= EXHAUSTIVE_CHECK_CELLS

    k_pad, n_pad = tiles_k * x, tiles_n * y
    a_rows = [row + [0] * (k_pad - kk) for row in a.to_lists()]
    b_rows = [row + [0] * (n_pad - nn) for row in b.to_lists()]
    b_rows += [[0] * n_pad for _ in range(k_pad - kk)]
    a_arr = _as_array(a_rows, kind)
    b_arr = _as_array(b_rows, kind)
    _check_below(a_arr, w_in, kind, "A element")
    _check_below(b_arr, w_in, kind, "B element")

    if schedule is not None:
        a_src = _sliced_operands(a_arr, schedule, (role.a_src for role in schedule.pass_roles), kind)
        b_src = _sliced_operands(b_arr, schedule, (role.b_src for role in schedule.pass_roles), kind)
        _check_slice_widths(a_src, b_src, schedule, cfg.w_m, w_in, kind)

    acc = _zeros((mm, n_pad), kind)
    pass_counts: dict[str, int] = {}
    for rep in range(reps):
        if rep:
            acc = _zeros((mm, n_pad), kind)  # repetitions rerun the same GEMM
        for nt in range(tiles_n):
            n0 = nt * y
            for kt in range(tiles_k):
                k0 = kt * x
                if schedule is None:
                    a_win = a_arr[:, k0:k0 + x]
                    b_win = b_arr[k0:k0 + x, n0:n0 + y]
                    acc[:, n0:n0 + y] += _tree_product(
                        a_win, b_win, w_in, r, cfg.p, wa, kind, exhaustive)
                    pass_counts["tree"] = pass_counts.get("tree", 0) + 1
                else:
                    for role in schedule.pass_roles:
                        a_win = a_src[role.a_src][:, k0:k0 + x]
                        b_win = b_src[role.b_src][k0:k0 + x, n0:n0 + y]
                        prod = _mxu_matmul(a_win, b_win, cfg.w_m, cfg.p, wa,
                                           kind, exhaustive)
                        acc[:, n0:n0 + y] += prod * _scalar(role.factor(), kind)
                        pass_counts[role.name] = pass_counts.get(role.name, 0) + 1

    result = _to_umatrix(acc[:, :nn], kind, 2 * w_in + (ceil_log2(kk) if kk > 1 else 0))

    groups = reps * tiles_n * tiles_k * reads
    m_blocks = _ceil_div(mm, x)
    stream_cycles = groups * mm
    stall_cycles = (groups - 1) * max(0, x - mm)
    total_cycles = cfg.latency + stream_cycles + stall_cycles
    num_multipliers = num_arrays * x * y
    base_mults = num_multipliers * stream_cycles
    effective = reps * mm * kk * nn
    eff = (4 ** r) * effective / (num_multipliers * total_cycles)
    steady_denominator = num_multipliers * (stream_cycles + stall_cycles)
    report = SimReport(
        variant=cfg.variant.value, mode=mode_label, reads_per_tile=reads,
        w_in=w_in, w_m=cfg.w_m, x=x, y=y, m=mm, k=kk, n=nn, p=cfg.p, reps=reps,
        tiles_k=tiles_k, tiles_n=tiles_n, m_blocks=m_blocks,
        n_passes=groups * m_blocks, pipeline_latency=cfg.latency,
        stream_cycles=stream_cycles, stall_cycles=stall_cycles,
        total_cycles=total_cycles, r=r, num_multipliers=num_multipliers,
        base_mults_performed=base_mults, effective_win_mults=effective,
        efficiency=eff,
        steady_state_efficiency=(4 ** r) * effective / steady_denominator,
        pass_summary=tuple(sorted(pass_counts.items())),
    )
    return result, report


def _sliced_operands(arr: np.ndarray, schedule: TileSchedule, srcs, kind: str):
    out: dict[str, np.ndarray] = {}
    needed = set(srcs)
    if "full" in needed:
        out["full"] = arr
    if needed - {"full"}:
        hi, lo = _split_digits(arr, schedule.split_bit, kind)
        out["hi"], out["lo"] = hi, lo
        if "sum" in needed:
            out["sum"] = hi + lo
    return out


def _check_slice_widths(a_src, b_src, schedule: TileSchedule, w_m: int, w_in: int,
                        kind: str) -> None:
    widths = {"full": min(w_in, w_m), "hi": schedule.split_bit or w_m,
              "lo": schedule.split_bit or w_m, "sum": w_m}
    if schedule.mode == Mode.KMM2:
        widths["hi"] = widths["lo"] = w_m - 1
    for src, arr in a_src.items():
        _check_below(arr, widths[src], kind, f"A {src} digit stream")
    for src, arr in b_src.items():
        _check_below(arr, widths[src], kind, f"B {src} digit stream")


def _to_umatrix(acc: np.ndarray, kind: str, width: int) -> UMatrix:
    if kind == "f":
        _require(bool(np.all(acc == np.floor(acc))), "non-integer accumulator value")
        rows = acc.astype(np.int64).tolist()
    else:
        rows = [[int(v) for v in row] for row in acc.tolist()]
    return UMatrix.from_rows(rows, width)


def simulate_mm1_mxu(cfg: MxuConfig, a: UMatrix, b: UMatrix,
                     reps: int = 1) -> tuple[UMatrix, SimReport]:
    """Baseline array; operand widths must fit the multipliers."""
    if cfg.variant != MxuVariant.BASELINE_MM1:
        raise ConfigError(f"expected baseline config, got {cfg.variant.value}")
    return gemm_driver(cfg, a, b, max(a.width, b.width), reps)


def simulate_fixed_kmm_mxu(cfg: MxuConfig, a: UMatrix, b: UMatrix, w_in: int,
                           reps: int = 1) -> tuple[UMatrix, SimReport]:
    """Fixed-precision Karatsuba array for w_in wider than the multipliers."""
    if cfg.variant != MxuVariant.FIXED_KMM:
        raise ConfigError(f"expected fixed-kmm config, got {cfg.variant.value}")
    return gemm_driver(cfg, a, b, w_in, reps)


def simulate_ps_kmm_mxu(cfg: MxuConfig, a: UMatrix, b: UMatrix, w_in: int,
                        reps: int = 1) -> tuple[UMatrix, SimReport]:
    """Precision-scalable Karatsuba array: 1, 3, or 4 reads per tile by width."""
    if cfg.variant != MxuVariant.PS_KMM:
        raise ConfigError(f"expected ps-kmm config, got {cfg.variant.value}")
    return gemm_driver(cfg, a, b, w_in, reps)


# --- plain key/value run configuration ---

@dataclass(frozen=True)
class SimRun:
    """One simulation request: array config, GEMM dims, input width, seed."""

    config: MxuConfig
    w_in: int
    m: int
    k: int
    n: int
    seed: int = 0
    reps: int = 1


def parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ConfigError(f"dims must be MxKxN, got {text!r}")
    try:
        m, k, n = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"non-integer dimension in {text!r}") from exc
    if min(m, k, n) < 1:
        raise ConfigError(f"dimensions must be >= 1, got {text!r}")
    return m, k, n


_VARIANTS = {v.value: v for v in MxuVariant}


def parse_sim_config(text: str) -> SimRun:
    """Parse the key/value run file: one `key value` pair per line, # comments."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ConfigError(f"line {lineno}: expected 'key value', got {raw!r}")
        fields[parts[0].lower()] = parts[1].strip()
    return build_sim_run(fields)


def build_sim_run(fields: dict[str, str]) -> SimRun:
    known = {"variant", "x", "y", "w_m", "w_in", "p", "pipeline_latency", "dims",
             "seed", "reps", "r"}
    unknown = set(fields) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("variant", "w_in", "dims"):
        if key not in fields:
            raise ConfigError(f"missing required config key {key!r}")
    if fields["variant"] not in _VARIANTS:
        raise ConfigError(f"unknown variant {fields['variant']!r}; "
                          f"expected one of {', '.join(sorted(_VARIANTS))}")

    def intval(key: str, default: int | None = None) -> int | None:
        if key not in fields:
            return default
        try:
            return int(fields[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key!r} must be an integer") from exc

    m, k, n = parse_dims(fields["dims"])
    cfg = MxuConfig(
        variant=_VARIANTS[fields["variant"]],
        x=intval("x", 64), y=intval("y", 64), w_m=intval("w_m", 8),
        p=intval("p", 4), pipeline_latency=intval("pipeline_latency"),
        fixed_r=intval("r"),
    )
    w_in = intval("w_in")
    assert w_in is not None
    return SimRun(cfg, w_in, m, k, n, seed=intval("seed", 0), reps=intval("reps", 1))
