"""Exact integer combinatorics: Stirling numbers of the second kind and friends."""
from __future__ import annotations

import math
import threading

__all__ = ["StirlingTable", "stirling2", "a_coefficient", "poisson_raw_moment", "bell_numbers"]


class StirlingTable:
    """Triangular table of ``S(m, r)`` for ``0 <= r <= m <= max_m``.

    Built by the recurrence ``S(m+1, r) = r*S(m, r) + S(m, r-1)`` with Python
    integers, so entries are exact at any size.  The table grows on demand;
    growth is guarded by a lock and reads of existing rows never block.
    """

    def __init__(self, max_m: int = 64):
        self._rows: list[list[int]] = [[1]]
        self._lock = threading.Lock()
        self.extend(max_m)

    @property
    def max_m(self) -> int:
        return len(self._rows) - 1

    def extend(self, max_m: int) -> None:
        if max_m <= self.max_m:
            return
        with self._lock:
            rows = list(self._rows)
            for m in range(len(rows) - 1, max_m):
                prev = rows[m]
                row = [0] * (m + 2)
                for r in range(1, m + 2):
                    left = prev[r] if r <= m else 0
                    row[r] = r * left + prev[r - 1]
                rows.append(row)
            self._rows = rows

    def row(self, m: int) -> list[int]:
        if m > self.max_m:
            self.extend(max(m, 2 * self.max_m))
        return self._rows[m]

    def __getitem__(self, key: tuple[int, int]) -> int:
        m, r = key
        if r > m or r < 0:
            return 0
        return self.row(m)[r]


_TABLE = StirlingTable()


def stirling2(m: int, r: int) -> int:
    """Stirling number of the second kind ``S(m, r)``; zero when ``r > m``."""
    if m < 0 or r < 0:
        raise ValueError("stirling2 is defined for m, r >= 0")
    return _TABLE[m, r]


def a_coefficient(m: int, r: int) -> int:
    """Alternating sum ``(-1)^r / r! * sum_{s=1}^r (-1)^s C(r, s) s^m``.

    Evaluated exactly; the division by ``r!`` is checked to be exact.  For
    ``m = 0`` the sum without its ``s = 0`` term is not an integer, so the
    value is taken as ``S(0, r) = 0``.
    """
    if m < 0 or r < 1:
        raise ValueError("a_coefficient needs m >= 0 and r >= 1")
    if m == 0:
        return 0
    total = sum((-1) ** s * math.comb(r, s) * s ** m for s in range(1, r + 1))
    q, rem = divmod((-1) ** r * total, math.factorial(r))
    if rem:
        raise ArithmeticError(f"a_coefficient({m}, {r}) is not an integer")
    return q


def poisson_raw_moment(m: int, mu: float) -> float:
    """``E[X^m]`` for ``X ~ Poisson(mu)``, i.e. ``sum_r S(m, r) mu^r``.

    Horner evaluation on the exact integer coefficients.
    """
    if m < 1:
        raise ValueError("poisson_raw_moment needs m >= 1")
    if mu < 0:
        raise ValueError("Poisson intensity must be >= 0")
    row = _TABLE.row(m)
    acc = 0.0
    for r in range(m, 0, -1):
        acc = (acc + float(row[r])) * mu
    return acc


def bell_numbers(n: int) -> list[int]:
    """First ``n + 1`` Bell numbers from the Bell triangle."""
    bells = [1]
    row = [1]
    for _ in range(n):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
        bells.append(row[0])
    return bells
