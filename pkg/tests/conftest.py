"""Shared test helpers: independent oracles kept free of package internals."""

from kmm import UMatrix


def naive_matmul(a: UMatrix, b: UMatrix) -> list[list[int]]:
    """Row-by-column product over plain Python ints; the test-side oracle."""
    assert a.cols == b.rows
    return [[sum(a.at(i, k) * b.at(k, j) for k in range(a.cols))
             for j in range(b.cols)]
            for i in range(a.rows)]


def values(m: UMatrix) -> list[list[int]]:
    return m.to_lists()
