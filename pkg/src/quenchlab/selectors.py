"""Selection schemes: monotone lattice paths, uniform subsets, permutations.

Counting and inclusion probabilities are exact.  Path schemes share one
prefix/suffix counting table over the grid; waypoints and obstacles are both
expressed as forbidden cells, since a monotone path passes through ``(a, b)``
exactly when it avoids every cell strictly north-west or south-east of it.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

import gmpy2
import numpy as np
from scipy import stats

from .environments import ParameterError

# exact big-integer tables up to this many steps, log-space counts beyond
EXACT_LIMIT = 4096


class InfeasibleSchemeError(ValueError):
    """A scheme admits no configuration."""


# ---------------------------------------------------------------------------
# schemes


@dataclass(frozen=True)
class UpRightPath:
    N: int
    M: int

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ParameterError("grid sides must be >= 1")


@dataclass(frozen=True)
class UpRightPathThrough:
    N: int
    M: int
    waypoints: tuple = ()

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ParameterError("grid sides must be >= 1")
        pts = tuple((int(i), int(j)) for i, j in self.waypoints)
        object.__setattr__(self, "waypoints", pts)
        for i, j in pts:
            if not (1 <= i <= self.N and 1 <= j <= self.M):
                raise ParameterError(f"waypoint {(i, j)} outside the {self.N}x{self.M} grid")


@dataclass(frozen=True)
class UpRightPathAvoidSquare:
    N: int
    beta: float

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("grid side must be >= 1")
        if not 0 < self.beta < 1:
            raise ParameterError("beta must lie in (0, 1)")

    @property
    def M(self) -> int:
        return self.N

    @property
    def side(self) -> int:
        return math.floor(Fraction(self.beta).limit_denominator(10**9) * self.N)

    @property
    def square(self) -> tuple:
        """1-based inclusive range ``(lo, hi)`` of forbidden rows (and columns)."""
        b = self.side
        s = -((b - self.N) // 2)  # ceil((N - b) / 2)
        return s + 1, s + b


@dataclass(frozen=True)
class UniformSubset:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.m <= self.n:
            raise ParameterError("need 1 <= m <= n")


@dataclass(frozen=True)
class UniformPermutation:
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ParameterError("N must be >= 1")


PathScheme = Union[UpRightPath, UpRightPathThrough, UpRightPathAvoidSquare]
SelectionScheme = Union[PathScheme, UniformSubset, UniformPermutation]
PATH_SCHEMES = (UpRightPath, UpRightPathThrough, UpRightPathAvoidSquare)


def is_path(scheme) -> bool:
    return isinstance(scheme, PATH_SCHEMES)


def site_shape(scheme) -> tuple:
    """Layout of the ground set: ``(n,)`` or ``(N, M)``."""
    if is_path(scheme):
        return (scheme.N, scheme.M)
    if isinstance(scheme, UniformPermutation):
        return (scheme.N, scheme.N)
    return (scheme.n,)


def selection_size(scheme) -> int:
    if is_path(scheme):
        return scheme.N + scheme.M - 1
    if isinstance(scheme, UniformPermutation):
        return scheme.N
    return scheme.m


def waypoints_from_fractions(N: int, M: int, fractions: Sequence[tuple]) -> tuple:
    """Map fractions ``(zeta, xi)`` to grid points ``(ceil(zeta N), ceil(xi M))``."""
    pts = []
    for zeta, xi in fractions:
        if not (0 < zeta <= 1 and 0 < xi <= 1):
            raise ParameterError("waypoint fractions must lie in (0, 1]")
        pts.append((max(1, math.ceil(zeta * N - 1e-12)), max(1, math.ceil(xi * M - 1e-12))))
    return tuple(pts)


@dataclass
class Selection:
    """One realized selection: flat 0-based site indices in path/row order."""

    sites: np.ndarray
    shape: tuple

    @property
    def m(self) -> int:
        return len(self.sites)

    def coords(self) -> list:
        if len(self.shape) == 1:
            return [int(a) + 1 for a in self.sites]
        M = self.shape[1]
        return [(int(a) // M + 1, int(a) % M + 1) for a in self.sites]


# ---------------------------------------------------------------------------
# path counting tables


def forbidden_mask(scheme: PathScheme) -> np.ndarray:
    N, M = scheme.N, scheme.M
    mask = np.zeros((N, M), dtype=bool)
    if isinstance(scheme, UpRightPathThrough):
        r = np.arange(1, N + 1)[:, None]
        c = np.arange(1, M + 1)[None, :]
        for a, b in scheme.waypoints:
            mask |= ((r < a) & (c > b)) | ((r > a) & (c < b))
    elif isinstance(scheme, UpRightPathAvoidSquare):
        lo, hi = scheme.square
        if hi >= lo:
            mask[lo - 1 : hi, lo - 1 : hi] = True
    return mask


def _segmented_cumsum(prev: list, allowed: np.ndarray, zero):
    """Row recurrence for monotone path counts: cumulative sums of the row
    above, restarting after every forbidden cell."""
    out = [zero] * len(prev)
    c = 0
    n = len(prev)
    while c < n:
        if not allowed[c]:
            c += 1
            continue
        stop = c
        while stop < n and allowed[stop]:
            stop += 1
        out[c:stop] = itertools.accumulate(prev[c:stop])
        c = stop
    return out


def _exact_prefix(mask: np.ndarray) -> list:
    N, M = mask.shape
    zero = gmpy2.mpz(0)
    prev = [gmpy2.mpz(1)] + [zero] * (M - 1)
    rows = []
    for r in range(N):
        row = _segmented_cumsum(prev, ~mask[r], zero)
        rows.append(row)
        prev = row
    return rows


def _log_prefix(mask: np.ndarray) -> np.ndarray:
    N, M = mask.shape
    out = np.full((N, M), -np.inf)
    prev = np.full(M, -np.inf)
    prev[0] = 0.0
    for r in range(N):
        allowed = ~mask[r]
        row = np.full(M, -np.inf)
        c = 0
        while c < M:
            if not allowed[c]:
                c += 1
                continue
            stop = c
            while stop < M and allowed[stop]:
                stop += 1
            row[c:stop] = np.logaddexp.accumulate(prev[c:stop])
            c = stop
        out[r] = row
        prev = row
    return out


class PathTable:
    """Prefix and suffix path counts over an ``N x M`` grid with forbidden cells.

    ``prefix[r][c]`` counts monotone paths from the origin to cell ``(r, c)``
    (0-based), ``suffix[r][c]`` from ``(r, c)`` to the far corner.  Counts are
    exact big integers when ``N + M <= EXACT_LIMIT``; otherwise only natural
    logs are kept, which is enough for sampling.
    """

    def __init__(self, mask: np.ndarray):
        self.mask = mask
        self.N, self.M = mask.shape
        self.exact = self.N + self.M <= EXACT_LIMIT
        flipped = mask[::-1, ::-1]
        if self.exact:
            self.prefix = _exact_prefix(mask)
            self.suffix = [row[::-1] for row in reversed(_exact_prefix(flipped))]
            self.total = int(self.prefix[-1][-1])
        else:
            self.log_prefix = _log_prefix(mask)
            self.log_suffix = _log_prefix(flipped)[::-1, ::-1].copy()
            self.log_total = float(self.log_prefix[-1, -1])
            self.total = None

    @property
    def feasible(self) -> bool:
        if self.exact:
            return self.total > 0
        return np.isfinite(self.log_total)

    def through(self, r: int, c: int) -> int:
        """Number of admissible paths through 0-based cell ``(r, c)``."""
        if not self.exact:
            raise ValueError(f"exact counts unavailable beyond N + M = {EXACT_LIMIT}")
        return int(self.prefix[r][c] * self.suffix[r][c])

    def inclusion_matrix(self) -> np.ndarray:
        """Float inclusion probabilities for every cell."""
        if self.exact:
            tot = gmpy2.mpz(self.total)
            return np.array(
                [
                    [float(gmpy2.mpq(p * s, tot)) for p, s in zip(pr, sr)]
                    for pr, sr in zip(self.prefix, self.suffix)
                ]
            )
        return np.exp(self.log_prefix + self.log_suffix - self.log_total)

    def squared_inclusion_sum(self) -> Fraction:
        """Exact sum over cells of P(cell on path)^2."""
        num = gmpy2.mpz(0)
        for pr, sr in zip(self.prefix, self.suffix):
            for p, s in zip(pr, sr):
                if p:
                    num += (p * s) ** 2
        return Fraction(int(num), self.total**2)

    @functools.cached_property
    def right_probability(self) -> np.ndarray:
        """P(next step is (0, 1) | at cell), for the exactly-uniform sequential sampler."""
        N, M = self.N, self.M
        out = np.zeros((N, M))
        if self.exact:
            for r in range(N):
                sr = self.suffix[r]
                for c in range(M - 1):
                    if sr[c]:
                        out[r, c] = float(gmpy2.mpq(sr[c + 1], sr[c]))
        else:
            ls = self.log_suffix
            here = ls[:, :-1]
            with np.errstate(invalid="ignore", over="ignore"):
                ratio = np.exp(ls[:, 1:] - here)
            out[:, :-1] = np.where(np.isfinite(here), ratio, 0.0)
        out[N - 1, :] = 1.0
        return out


@functools.lru_cache(maxsize=16)
def path_table(scheme: PathScheme) -> PathTable:
    return PathTable(forbidden_mask(scheme))


def _unconstrained_right_probability(N: int, M: int) -> np.ndarray:
    r = np.arange(N)[:, None]
    c = np.arange(M)[None, :]
    right_left = (M - 1 - c).astype(np.float64)
    down_left = (N - 1 - r).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = right_left / (right_left + down_left)
    return np.nan_to_num(p, nan=1.0)


# ---------------------------------------------------------------------------
# operations


def count_configurations(scheme: SelectionScheme) -> int:
    if isinstance(scheme, UpRightPath):
        return math.comb(scheme.N + scheme.M - 2, scheme.N - 1)
    if isinstance(scheme, UpRightPathThrough):
        pts = [(1, 1), *sorted(scheme.waypoints), (scheme.N, scheme.M)]
        total = 1
        for (a, b), (c, d) in zip(pts, pts[1:]):
            if c < a or d < b:
                raise InfeasibleSchemeError(f"waypoints {scheme.waypoints} are not jointly reachable")
            total *= math.comb(c - a + d - b, c - a)
        return total
    if isinstance(scheme, UpRightPathAvoidSquare):
        table = path_table(scheme)
        if table.exact:
            total = table.total
        else:
            raise ValueError(f"exact count unavailable beyond N + M = {EXACT_LIMIT}")
        if total == 0:
            raise InfeasibleSchemeError(f"no path avoids the central square of {scheme}")
        return total
    if isinstance(scheme, UniformSubset):
        return math.comb(scheme.n, scheme.m)
    if isinstance(scheme, UniformPermutation):
        return math.factorial(scheme.N)
    raise ParameterError(f"unknown scheme {scheme!r}")


def check_feasible(scheme: SelectionScheme) -> None:
    if is_path(scheme) and not isinstance(scheme, UpRightPath):
        if not path_table(scheme).feasible:
            raise InfeasibleSchemeError(f"{scheme} admits no path")


def _walk(right: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    N, M = right.shape
    steps = N + M - 2
    out = np.empty((size, steps + 1), dtype=np.int64)
    r = np.zeros(size, dtype=np.int64)
    c = np.zeros(size, dtype=np.int64)
    out[:, 0] = 0
    for k in range(1, steps + 1):
        go_right = rng.random(size) < right[r, c]
        c += go_right
        r += ~go_right
        out[:, k] = r * M + c
    return out


def _subset_sites(n: int, m: int, rng: np.random.Generator, size: int) -> np.ndarray:
    if m * m <= 2 * n:
        # Floyd's algorithm, vectorized over draws
        out = np.empty((size, m), dtype=np.int64)
        for k, j in enumerate(range(n - m, n)):
            t = rng.integers(0, j + 1, size=size)
            if k:
                dup = (out[:, :k] == t[:, None]).any(axis=1)
                t = np.where(dup, j, t)
            out[:, k] = t
        return out
    keys = rng.random((size, n))
    return np.sort(np.argpartition(keys, m - 1, axis=1)[:, :m], axis=1)


def sample_sites(scheme: SelectionScheme, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent uniform selections as a ``(size, m)`` array of flat site indices."""
    if isinstance(scheme, UpRightPath):
        return _walk(_unconstrained_right_probability(scheme.N, scheme.M), rng, size)
    if is_path(scheme):
        table = path_table(scheme)
        if not table.feasible:
            raise InfeasibleSchemeError(f"{scheme} admits no path")
        return _walk(table.right_probability, rng, size)
    if isinstance(scheme, UniformPermutation):
        N = scheme.N
        perms = rng.permuted(np.tile(np.arange(N, dtype=np.int64), (size, 1)), axis=1)
        return np.arange(N, dtype=np.int64) * N + perms
    if isinstance(scheme, UniformSubset):
        return _subset_sites(scheme.n, scheme.m, rng, size)
    raise ParameterError(f"unknown scheme {scheme!r}")


def sample_selection(scheme: SelectionScheme, rng: np.random.Generator) -> Selection:
    return Selection(sample_sites(scheme, rng, 1)[0], site_shape(scheme))


def enumerate_selections(scheme: SelectionScheme, limit: int = 10**6) -> np.ndarray:
    """Every admissible configuration, each once, as a ``(count, m)`` array."""
    count = count_configurations(scheme)
    if count > limit:
        raise ValueError(f"{count} configurations exceeds the enumeration limit {limit}")
    if isinstance(scheme, UniformSubset):
        return np.array(list(itertools.combinations(range(scheme.n), scheme.m)), dtype=np.int64)
    if isinstance(scheme, UniformPermutation):
        N = scheme.N
        return np.array(
            [[i * N + p for i, p in enumerate(perm)] for perm in itertools.permutations(range(N))],
            dtype=np.int64,
        )
    N, M = scheme.N, scheme.M
    mask = forbidden_mask(scheme)
    paths = []

    def extend(path, r, c):
        if (r, c) == (N - 1, M - 1):
            paths.append(list(path))
            return
        for dr, dc in ((0, 1), (1, 0)):
            rr, cc = r + dr, c + dc
            if rr < N and cc < M and not mask[rr, cc]:
                path.append(rr * M + cc)
                extend(path, rr, cc)
                path.pop()

    if not mask[0, 0]:
        extend([0], 0, 0)
    return np.array(paths, dtype=np.int64).reshape(len(paths), N + M - 1)


def _site_index(scheme, site) -> tuple:
    """Validate a 1-based site and return its 0-based ``(row, col)``."""
    shape = site_shape(scheme)
    if len(shape) == 1:
        a = int(site[0]) if isinstance(site, (tuple, list)) else int(site)
        if not 1 <= a <= shape[0]:
            raise IndexError(f"site {site} outside the ground set of size {shape[0]}")
        return a - 1, 0
    i, j = site
    if not (1 <= i <= shape[0] and 1 <= j <= shape[1]):
        raise IndexError(f"site {site} outside the {shape[0]}x{shape[1]} grid")
    return i - 1, j - 1


def inclusion_probability(scheme: SelectionScheme, site) -> Fraction:
    """Exact P(site in sigma); ``site`` is 1-based ``(i, j)`` on grids, ``a`` on a ground set."""
    r, c = _site_index(scheme, site)
    if isinstance(scheme, UniformSubset):
        return Fraction(scheme.m, scheme.n)
    if isinstance(scheme, UniformPermutation):
        return Fraction(1, scheme.N)
    if isinstance(scheme, UpRightPath):
        N, M = scheme.N, scheme.M
        return Fraction(
            math.comb(r + c, r) * math.comb(N - 1 - r + M - 1 - c, N - 1 - r),
            math.comb(N + M - 2, N - 1),
        )
    table = path_table(scheme)
    if not table.exact:
        raise ValueError(f"exact inclusion probabilities need N + M <= {EXACT_LIMIT}")
    if table.total == 0:
        raise InfeasibleSchemeError(f"{scheme} admits no path")
    return Fraction(table.through(r, c), table.total)


def inclusion_float(scheme: SelectionScheme, site) -> float:
    return float(inclusion_probability(scheme, site))


def inclusion_matrix(scheme: SelectionScheme) -> np.ndarray:
    """Float inclusion probabilities laid out in ``site_shape(scheme)``."""
    if isinstance(scheme, UniformSubset):
        return np.full(scheme.n, scheme.m / scheme.n)
    if isinstance(scheme, UniformPermutation):
        return np.full((scheme.N, scheme.N), 1.0 / scheme.N)
    table = path_table(UpRightPathThrough(scheme.N, scheme.M) if isinstance(scheme, UpRightPath) else scheme)
    if not table.feasible:
        raise InfeasibleSchemeError(f"{scheme} admits no path")
    return table.inclusion_matrix()


def L_squared(scheme: SelectionScheme) -> Fraction:
    """Exact sum over the ground set of P(a in sigma)^2."""
    if isinstance(scheme, UniformSubset):
        return Fraction(scheme.m**2, scheme.n)
    if isinstance(scheme, UniformPermutation):
        return Fraction(scheme.N**2, scheme.N**2)
    table = path_table(UpRightPathThrough(scheme.N, scheme.M) if isinstance(scheme, UpRightPath) else scheme)
    if not table.exact:
        raise ValueError(f"exact L needs N + M <= {EXACT_LIMIT}")
    if table.total == 0:
        raise InfeasibleSchemeError(f"{scheme} admits no path")
    return table.squared_inclusion_sum()


def L_statistic(scheme: SelectionScheme) -> float:
    if is_path(scheme) and scheme.N + scheme.M > EXACT_LIMIT:
        return float(np.sqrt((inclusion_matrix(scheme) ** 2).sum()))
    sq = L_squared(scheme)
    # float() of a huge rational is correctly rounded; sqrt adds one more rounding
    return math.sqrt(float(sq))


@dataclass
class LambdaFit:
    slope: float
    stderr: float
    degenerate: bool
    sizes: list
    L: list


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple:
    """Least-squares slope of log y on log x with its standard error.

    Returns ``(slope, stderr, degenerate)``; constant ``y`` gives ``(0, 0, True)``.
    """
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    if len(lx) < 3:
        raise ValueError("a rate fit needs at least 3 sizes")
    if np.ptp(ly) <= 1e-12 * max(1.0, float(np.abs(ly).max())):
        return 0.0, 0.0, True
    res = stats.linregress(lx, ly)
    return float(res.slope), float(res.stderr), False


def lambda_fit(family: Callable[[int], SelectionScheme], sizes: Sequence[int]) -> LambdaFit:
    """Fit L(N) ~ N^lambda over ``sizes`` (at least 3, increasing)."""
    sizes = [int(N) for N in sizes]
    if len(sizes) < 3 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("need at least 3 increasing sizes")
    Ls = []
    for N in sizes:
        scheme = family(N)
        Ls.append(L_statistic(scheme))
        if is_path(scheme):
            path_table.cache_clear()
    slope, stderr, degenerate = loglog_fit(sizes, Ls)
    return LambdaFit(slope, stderr, degenerate, sizes, Ls)


def iter_inclusion_rows(scheme: SelectionScheme) -> Iterator[tuple]:
    """``(i, j, numerator, denominator, float)`` for every site, row-major."""
    shape = site_shape(scheme)
    if len(shape) == 1:
        for a in range(1, shape[0] + 1):
            p = inclusion_probability(scheme, a)
            yield a, 1, p.numerator, p.denominator, float(p)
        return
    for i in range(1, shape[0] + 1):
        for j in range(1, shape[1] + 1):
            p = inclusion_probability(scheme, (i, j))
            yield i, j, p.numerator, p.denominator, float(p)
