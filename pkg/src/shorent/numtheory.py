"""Classical pre- and post-processing for order finding.

Everything here is plain integer arithmetic on Python ints; the simulator caps
N far below the point where any of it becomes expensive.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

MAX_MODULUS = 1 << 16


def gcd(a: int, b: int) -> int:
    if a < 0 or b < 0:
        raise ValueError("gcd arguments must be non-negative")
    if a == 0 and b == 0:
        raise ValueError("gcd(0, 0) is undefined")
    while b:
        a, b = b, a % b
    return a


def is_coprime(a: int, b: int) -> bool:
    return gcd(a, b) == 1


def modpow(x: int, e: int, N: int) -> int:
    """x**e mod N by right-to-left square-and-multiply."""
    if N < 2:
        raise ValueError(f"modulus must be >= 2, got {N}")
    if e < 0:
        raise ValueError("exponent must be non-negative")
    result = 1
    base = x % N
    while e:
        if e & 1:
            result = result * base % N
        base = base * base % N
        e >>= 1
    return result


def multiplicative_order(x: int, N: int) -> int:
    """Smallest r >= 1 with x**r = 1 (mod N), by brute force."""
    if N < 2:
        raise ValueError(f"modulus must be >= 2, got {N}")
    if not is_coprime(x % N, N):
        raise ValueError(f"{x} is not coprime to {N}")
    r, y = 1, x % N
    while y != 1:
        y = y * x % N
        r += 1
    return r


@dataclass(frozen=True)
class Convergent:
    numerator: int
    denominator: int

    def __float__(self) -> float:
        return self.numerator / self.denominator


def continued_fraction(c: int, M: int) -> list[int]:
    terms = []
    while M:
        q, rem = divmod(c, M)
        terms.append(q)
        c, M = M, rem
    return terms


def convergents(c: int, M: int) -> list[Convergent]:
    """Continued-fraction convergents of c/M in lowest terms.

    An empty list is returned for c == 0, which carries no period information.
    """
    if M <= 0 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    if not 0 <= c < M:
        raise ValueError(f"c must lie in [0, {M}), got {c}")
    if c == 0:
        return []
    out = []
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    for a in continued_fraction(c, M):
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        # the leading 0/1 term of c/M < 1 is not informative
        if h == 0:
            continue
        out.append(Convergent(h, k))
    return out


def recover_period(c: int, M: int, N: int, x: int, max_multiple: int = 8) -> int | None:
    """Period candidate from a measured outcome, or None.

    Convergent denominators d < N are tried in increasing order, together with
    small multiples t*d (t <= max_multiple) to cover k sharing a factor with r.
    A candidate m with x**m = 1 is a multiple of the order; it is reduced to the
    order by stripping prime factors while x**(m/p) = 1 still holds.
    """
    if not is_coprime(x % N, N):
        raise ValueError(f"{x} is not coprime to {N}")
    for conv in convergents(c, M):
        d = conv.denominator
        if d >= N:
            break
        for t in range(1, max_multiple + 1):
            if t * d >= N:
                break
            if modpow(x, t * d, N) == 1:
                return _reduce_to_order(x, t * d, N)
    return None


def _reduce_to_order(x: int, m: int, N: int) -> int:
    for p in set(small_prime_factors(m)) if m > 1 else ():
        while m % p == 0 and modpow(x, m // p, N) == 1:
            m //= p
    return m


class FactorStatus(Enum):
    FACTORED = "factored"
    ODD_PERIOD = "odd_period"
    TRIVIAL_FACTOR = "trivial_factor"
    BAD_ORDER = "bad_order"


@dataclass(frozen=True)
class FactorResult:
    status: FactorStatus
    p: int | None = None
    q: int | None = None
    m_plus: int | None = None
    m_minus: int | None = None

    @property
    def factored(self) -> bool:
        return self.status is FactorStatus.FACTORED


def extract_factors(x: int, r: int, N: int) -> FactorResult:
    """Try gcd(x**(r/2) +- 1, N) for a non-trivial factor."""
    if r % 2:
        return FactorResult(FactorStatus.ODD_PERIOD)
    half = modpow(x, r // 2, N)
    m_plus, m_minus = half + 1, half - 1
    for m in (m_plus, m_minus):
        g = gcd(m % N, N)
        if 1 < g < N:
            p, q = sorted((g, N // g))
            return FactorResult(FactorStatus.FACTORED, p, q, m_plus, m_minus)
    if half == 1:
        # x**(r/2) = 1 means r was not the order
        return FactorResult(FactorStatus.TRIVIAL_FACTOR, m_plus=m_plus, m_minus=m_minus)
    return FactorResult(FactorStatus.BAD_ORDER, m_plus=m_plus, m_minus=m_minus)


def coprimes(N: int) -> list[int]:
    return [x for x in range(2, N) if is_coprime(x, N)]


def coprimes_by_period(N: int) -> dict[int, list[int]]:
    """Map each period r to the sorted coprimes x in (1, N) of that order."""
    if N < 3:
        raise ValueError(f"N must be >= 3, got {N}")
    groups: dict[int, list[int]] = defaultdict(list)
    for x in coprimes(N):
        groups[multiplicative_order(x, N)].append(x)
    return dict(sorted(groups.items()))


def is_power_of_two(r: int) -> bool:
    return r > 0 and r & (r - 1) == 0


def small_prime_factors(N: int) -> list[int]:
    out, d = [], 2
    while d * d <= N:
        while N % d == 0:
            out.append(d)
            N //= d
        d += 1
    if N > 1:
        out.append(N)
    return out


def is_semiprime(N: int) -> bool:
    return len(small_prime_factors(N)) == 2


def register_width(N: int) -> int:
    """Lower-register width: ceil(log2 N) for non powers of two, always 2**n > N."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return N.bit_length()
