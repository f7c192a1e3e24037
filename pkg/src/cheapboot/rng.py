"""Reproducible random streams and the resampling primitives.

A :class:`RandomStream` wraps numpy's counter-based Philox generator keyed
by the pair ``(seed, stream_id)``. Because the key *is* the pair, distinct
stream ids can never collide and no coordination is needed to run
repetitions in parallel.

Stream ids for experiment work are built by :func:`stream_id` as
``index << 8 | role``, which is a bijection for ``index < 2**56`` and
``role < 256``.
"""

from dataclasses import dataclass

import numpy as np

from .distributions import normal_quantile
from .errors import DomainError

MASK64 = (1 << 64) - 1

# Role tags mixed into stream ids.
ROLE_DATA = 1
ROLE_RESAMPLE = 2
ROLE_NOISE = 3
ROLE_MN = 4
ROLE_BLB = 5
ROLE_SDB = 6
ROLE_ORACLE = 7
ROLE_PIVOT = 8
ROLE_ZETA = 9
ROLE_REGION = 10


def stream_id(index, role):
    """Pack a repetition (or block) index and a role tag into a stream id."""
    index = int(index)
    role = int(role)
    if not 0 <= role < 256 or not 0 <= index < (1 << 56):
        raise DomainError(f"stream id components out of range: index={index}, role={role}")
    return (index << 8) | role


class RandomStream:
    """Seeded, single-owner random stream.

    Parameters
    ----------
    seed : int
        64-bit seed (taken modulo 2**64).
    stream_id : int, optional
        64-bit substream identifier.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)
        self._gen = np.random.Generator(self._bitgen)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, stream_id):
        """A fresh stream sharing this stream's seed."""
        return RandomStream(self.seed, stream_id)

    def uniforms(self, size=None):
        """Uniforms on the open interval (0, 1), 53-bit resolution."""
        n = 1 if size is None else int(np.prod(size))
        raw = self._bitgen.random_raw(n)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return float(u[0]) if size is None else u.reshape(size)

    def normals(self, size=None):
        """Standard normals by inverse-CDF transform of :meth:`uniforms`."""
        return normal_quantile(self.uniforms(size))

    def chi2(self, df, size=None):
        """Chi-square variates as sums of ``df`` squared normals (``df = 0`` gives 0)."""
        if df < 0:
            raise DomainError(f"chi-square degrees must be >= 0, got {df}")
        shape = () if size is None else (size if isinstance(size, tuple) else (size,))
        if df == 0:
            out = np.zeros(shape)
        else:
            out = np.square(self.normals(shape + (df,))).sum(axis=-1)
        return float(out) if size is None else out

    def exponentials(self, rate, size=None):
        if not rate > 0:
            raise DomainError(f"exponential rate must be positive, got {rate}")
        u = self.uniforms(size)
        return -np.log(u) / rate

    def integers(self, high, size=None):
        """Uniform integers in ``[0, high)``; numpy's bounded sampler rejects, so no modulo bias."""
        return self._gen.integers(0, high, size=size)

    def choice_without_replacement(self, n, s):
        return self._gen.choice(n, size=s, replace=False)

    def multinomial(self, total, cells):
        return self._gen.multinomial(total, np.full(cells, 1.0 / cells))


def as_dataset(data):
    """Validate and return observations as a float array of shape (n,) or (n, d)."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim not in (1, 2):
        raise DomainError(f"dataset must be 1- or 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DomainError("dataset is empty")
    return arr


@dataclass(frozen=True)
class WeightedSample:
    """Rows of ``base`` with integer multiplicities ``counts`` summing to ``total``."""

    base: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if len(self.counts) != len(self.base):
            raise DomainError("one count per base row is required")
        if int(np.sum(self.counts)) != self.total:
            raise DomainError("counts must sum to total")

    def materialize(self):
        """The equivalent unweighted dataset (``total`` rows); for checks on small cases."""
        return np.repeat(self.base, self.counts, axis=0)


def resample_indices(n, m, stream):
    if n < 1:
        raise DomainError("cannot resample from an empty dataset")
    if m < 1:
        raise DomainError(f"resample size must be positive, got {m}")
    return stream.integers(n, m)


def resample_with_replacement(data, m, stream):
    """Draw ``m`` rows uniformly and independently (with replacement) from ``data``."""
    data = np.asarray(data)
    if len(data) == 0:
        raise DomainError("cannot resample from an empty dataset")
    return data[resample_indices(len(data), m, stream)]


def subsample_without_replacement(data, s, stream):
    """Draw ``s`` distinct rows; every ``s``-subset is equally likely."""
    data = np.asarray(data)
    n = len(data)
    if not 1 <= s <= n:
        raise DomainError(f"subsample size must satisfy 1 <= s <= n = {n}, got {s}")
    return data[stream.choice_without_replacement(n, s)]


def multinomial_counts(s, total, stream):
    """Equal-probability multinomial counts over ``s`` cells summing to ``total``."""
    if s < 1 or total < 1:
        raise DomainError(f"need s >= 1 and total >= 1, got s={s}, total={total}")
    return stream.multinomial(total, s)
