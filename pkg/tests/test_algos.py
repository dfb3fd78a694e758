import pytest
from hypothesis import given, settings, strategies as st

from kmm import (
    BitWidthError,
    DigitParams,
    DimensionError,
    UMatrix,
    kmm_n,
    ksm_n,
    ksmm_n,
    matrices_equal,
    mm1,
    mm_n,
    random_matrix,
    reference_product,
    sm_n,
)

from conftest import naive_matmul, values


def base_mults(result):
    return sum(result.counts.mults.values())


class TestScalarConventional:
    def test_two_digit_example(self):
        assert sm_n(0x12, 0x10, DigitParams(2, 8)).value == 0x120

    def test_zero_annihilates(self):
        assert sm_n(0, 0xAB, DigitParams(2, 8)).value == 0

    def test_max_byte(self):
        assert sm_n(0xFF, 0xFF, DigitParams(2, 8)).value == 0xFE01  # 255 * 255

    @pytest.mark.parametrize("n,w,expected", [(1, 8, 1), (2, 8, 4), (4, 16, 16), (8, 16, 64)])
    def test_base_multiply_count_is_n_squared(self, n, w, expected):
        assert base_mults(sm_n(123 % (1 << w), 45, DigitParams(n, w))) == expected

    def test_operand_range_checked(self):
        with pytest.raises(BitWidthError):
            sm_n(256, 1, DigitParams(2, 8))


class TestScalarKaratsuba:
    def test_two_digit_example(self):
        assert ksm_n(0x12, 0x10, DigitParams(2, 8)).value == 0x120

    def test_zero_still_counts_three_base_mults(self):
        res = ksm_n(0, 0, DigitParams(2, 8))
        assert res.value == 0
        assert base_mults(res) == 3

    def test_four_digit_base_mults(self):
        assert base_mults(ksm_n(0x1234, 0x5678, DigitParams(4, 16))) == 9

    @pytest.mark.parametrize("n,w", [(2, 8), (2, 9), (4, 16), (4, 19), (8, 32), (8, 9)])
    def test_exact_and_three_pow_r_mults(self, n, w):
        a, b = (1 << w) - 3, (1 << w) - 7
        res = ksm_n(a, b, DigitParams(n, w))
        assert res.value == a * b
        assert base_mults(res) == 3 ** DigitParams(n, w).levels

    def test_two_digit_count_structure(self):
        counts = ksm_n(0, 0, DigitParams(2, 8)).counts
        assert counts.mults == {4: 2, 5: 1}
        assert counts.adds == {4: 2, 12: 2, 16: 2}
        assert counts.shifts == {4: 1, 8: 1}

    def test_concat_free_drops_one_wide_add_when_aligned(self):
        strict = ksm_n(1, 1, DigitParams(2, 8)).counts
        free = ksm_n(1, 1, DigitParams(2, 8), concat_free=True).counts
        assert strict.adds[16] - free.adds.get(16, 0) == 1

    def test_concat_not_free_for_odd_width(self):
        # low digit spans ceil(9/2)=5 bits, overlapping the shifted upper product
        strict = ksm_n(1, 1, DigitParams(2, 9)).counts
        free = ksm_n(1, 1, DigitParams(2, 9), concat_free=True).counts
        assert strict == free


class TestMm1:
    def test_identity(self):
        b = random_matrix(4, 4, 8, seed=11)
        res = mm1(UMatrix.identity(4, 8), b)
        assert matrices_equal(res.value, b)

    def test_scalar_case(self):
        res = mm1(UMatrix.from_rows([[0x12]], 8), UMatrix.from_rows([[0x10]], 8))
        assert res.value.at(0, 0) == 0x120

    def test_grouped_counts_k8_p4(self):
        a = random_matrix(1, 8, 8, seed=1)
        b = random_matrix(8, 1, 8, seed=2)
        counts = mm1(a, b, 4).counts
        assert counts.mults == {8: 8}
        assert counts.adds == {18: 6, 19: 2}  # 2w+log2(p)=18 narrow, 2w+log2(K)=19 wide

    def test_remainder_group_flushed(self):
        a = random_matrix(1, 5, 8, seed=3)
        b = random_matrix(5, 1, 8, seed=4)
        counts = mm1(a, b, 4).counts
        # groups of 4 and 1: three narrow adds, two wide adds
        assert sum(counts.adds.values()) == 5
        assert counts.adds[18] == 3

    def test_p1_keeps_accumulate_vocabulary(self):
        a = random_matrix(2, 3, 8, seed=5)
        b = random_matrix(3, 2, 8, seed=6)
        counts = mm1(a, b, 1).counts
        assert counts.accums == {16: 12}
        assert not counts.adds

    def test_grouping_never_changes_value(self):
        a = random_matrix(3, 7, 8, seed=7)
        b = random_matrix(7, 2, 8, seed=8)
        expected = naive_matmul(a, b)
        for p in (1, 2, 3, 4, 7, 10):
            assert values(mm1(a, b, p).value) == expected

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mm1(random_matrix(2, 3, 8, 1), random_matrix(2, 2, 8, 2))


class TestMatrixDigitAlgorithms:
    def test_mm_n_base_case_matches_mm1(self):
        a = random_matrix(3, 3, 8, seed=21)
        b = random_matrix(3, 3, 8, seed=22)
        direct = mm1(a, b, 4)
        via_n = mm_n(a, b, DigitParams(1, 8, 4))
        assert matrices_equal(direct.value, via_n.value)
        assert direct.counts == via_n.counts

    def test_mm_n_matches_oracle(self):
        a = random_matrix(2, 2, 16, seed=23)
        b = random_matrix(2, 2, 16, seed=24)
        assert values(mm_n(a, b, DigitParams(2, 16)).value) == naive_matmul(a, b)

    def test_mm_n_base_mult_count_4d3(self):
        d = 4
        res = mm_n(random_matrix(d, d, 16, 1), random_matrix(d, d, 16, 2), DigitParams(2, 16))
        assert base_mults(res) == 4 * d ** 3

    def test_kmm_scalar_example(self):
        res = kmm_n(UMatrix.from_rows([[0x12]], 8), UMatrix.from_rows([[0x10]], 8),
                    DigitParams(2, 8))
        assert res.value.at(0, 0) == 0x120

    def test_kmm_zero_matrix(self):
        z = UMatrix.zeros(3, 3, 16)
        b = random_matrix(3, 3, 16, seed=25)
        assert all(e == 0 for row in kmm_n(z, b, DigitParams(2, 16)).value.elems for e in row)

    def test_kmm_vs_mm_base_mults(self):
        d = 4
        a = random_matrix(d, d, 16, seed=26)
        b = random_matrix(d, d, 16, seed=27)
        assert base_mults(kmm_n(a, b, DigitParams(2, 16))) == 3 * d ** 3  # 192
        assert base_mults(mm_n(a, b, DigitParams(2, 16))) == 4 * d ** 3  # 256

    def test_ksmm_base_case_mult_count_matches_mm1(self):
        a = random_matrix(3, 3, 8, seed=28)
        b = random_matrix(3, 3, 8, seed=29)
        assert base_mults(ksmm_n(a, b, DigitParams(1, 8))) == base_mults(mm1(a, b))

    def test_ksmm_two_digit_base_mults(self):
        d = 2
        res = ksmm_n(random_matrix(d, d, 8, 30), random_matrix(d, d, 8, 31), DigitParams(2, 8))
        assert base_mults(res) == 3 * d ** 3  # 24

    def test_ksmm_matches_oracle(self):
        a = random_matrix(3, 4, 9, seed=32)
        b = random_matrix(4, 2, 9, seed=33)
        assert values(ksmm_n(a, b, DigitParams(2, 9)).value) == naive_matmul(a, b)

    def test_rectangular_kmm(self):
        a = random_matrix(5, 3, 16, seed=34)
        b = random_matrix(3, 7, 16, seed=35)
        assert values(kmm_n(a, b, DigitParams(4, 16)).value) == naive_matmul(a, b)

    def test_range_error(self):
        a = random_matrix(2, 2, 16, seed=36)
        with pytest.raises(BitWidthError):
            kmm_n(a, a, DigitParams(2, 8))

    def test_result_width_declared(self):
        a = random_matrix(2, 5, 8, seed=37)
        b = random_matrix(5, 2, 8, seed=38)
        assert kmm_n(a, b, DigitParams(2, 8)).value.width == 16 + 3


@st.composite
def algo_cases(draw):
    n = draw(st.sampled_from([1, 2, 4, 8]))
    w = draw(st.sampled_from([8, 9, 16, 32]))
    d = draw(st.integers(min_value=1, max_value=4))
    seed = draw(st.integers(min_value=0, max_value=2 ** 20))
    return n, w, d, seed


class TestAlgebraicIdentity:
    @given(algo_cases())
    @settings(max_examples=60, deadline=None)
    def test_all_algorithms_agree_with_oracle(self, case):
        n, w, d, seed = case
        params = DigitParams(n, w)
        a = random_matrix(d, d, w, seed)
        b = random_matrix(d, d, w, seed + 1)
        expected = naive_matmul(a, b)
        assert values(kmm_n(a, b, params).value) == expected
        assert values(mm_n(a, b, params).value) == expected
        assert values(ksmm_n(a, b, params).value) == expected
        assert values(reference_product(a, b)) == expected

    @given(st.sampled_from([8, 9, 16, 33, 64]), st.integers(0, 2 ** 20))
    @settings(max_examples=40, deadline=None)
    def test_scalar_algorithms_exact(self, w, seed):
        a = random_matrix(1, 1, w, seed).at(0, 0)
        b = random_matrix(1, 1, w, seed + 1).at(0, 0)
        for n in (1, 2, 4, 8):
            assert sm_n(a, b, DigitParams(n, w)).value == a * b
            assert ksm_n(a, b, DigitParams(n, w)).value == a * b


class TestDigitParams:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            DigitParams(3, 8)

    def test_rejects_width_smaller_than_digits(self):
        with pytest.raises(BitWidthError):
            DigitParams(8, 4)

    def test_levels(self):
        assert DigitParams(8, 8).levels == 3
