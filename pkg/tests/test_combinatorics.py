import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bosonpow.combinatorics import StirlingTable, a_coefficient, bell_numbers, poisson_raw_moment, stirling2


def brute_partitions(m, r):
    """Count surjections onto r blocks divided by r!."""
    count = sum(1 for f in itertools.product(range(r), repeat=m) if len(set(f)) == r)
    return count // math.factorial(r)


@pytest.mark.parametrize("m,r,expected", [(3, 3, 1), (4, 2, 7), (1, 2, 0), (5, 1, 1), (20, 10, 5917584964655)])
def test_stirling_examples(m, r, expected):
    assert stirling2(m, r) == expected


@pytest.mark.parametrize("m", range(1, 8))
def test_stirling_matches_partition_count(m):
    for r in range(1, m + 1):
        assert stirling2(m, r) == brute_partitions(m, r)


@pytest.mark.parametrize("m,r,expected", [(2, 1, 1), (1, 2, 0), (5, 5, 1), (0, 1, 0)])
def test_a_coefficient_examples(m, r, expected):
    assert a_coefficient(m, r) == expected


def test_a_coefficient_is_exact_integer():
    assert isinstance(a_coefficient(20, 10), int)
    assert a_coefficient(40, 20) == stirling2(40, 20)


@given(st.integers(1, 60))
def test_table_recurrence_and_edges(m):
    assert stirling2(m, m) == 1
    assert stirling2(m, 1) == 1
    for r in range(1, m + 1):
        assert stirling2(m + 1, r) == r * stirling2(m, r) + stirling2(m, r - 1)


def test_row_sums_are_bell_numbers():
    bells = bell_numbers(25)
    for m in range(1, 25):
        assert sum(stirling2(m, r) for r in range(1, m + 1)) == bells[m]


def test_lazy_extension_beyond_default():
    table = StirlingTable(max_m=4)
    assert table[(70, 2)] == 2 ** 69 - 1
    assert table.max_m >= 70


@pytest.mark.parametrize("m,mu,expected", [(1, 3.0, 3.0), (2, 2.0, 6.0), (3, 0.0, 0.0)])
def test_poisson_raw_moment_examples(m, mu, expected):
    assert poisson_raw_moment(m, mu) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("m", [1, 2, 5, 10])
@pytest.mark.parametrize("mu", [0.3, 4.0, 50.0])
def test_poisson_raw_moment_matches_pmf_sum(m, mu):
    n_max = int(mu + 40 * math.sqrt(mu + 1) + 200)
    terms = [n ** m * math.exp(n * math.log(mu) - mu - math.lgamma(n + 1)) for n in range(n_max)]
    assert poisson_raw_moment(m, mu) == pytest.approx(math.fsum(terms), rel=1e-10)
