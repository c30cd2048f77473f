"""Toy index-space binning: a-posteriori super-bin key distillation and equivocation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from ..errors import DomainError

log = logging.getLogger(__name__)


class EveModel(str, Enum):
    STRUCTURED = "Structured"
    RANDOM = "Random"


@lru_cache(maxsize=32)
def _permutation(seed: int, frame_index: int, stream: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng([seed, frame_index, stream]).permutation(size)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(size)
    perm.setflags(write=False)
    inverse.setflags(write=False)
    return perm, inverse


@dataclass(frozen=True)
class ToyBinning:
    """
    Codebook of M indices split into B pre-bins, grouped into K super-bins.

    Both groupings are reproducible functions of (seed, frame_index), so
    Alice and Bob derive the same recipe independently. With
    ``structured=True`` the recipe is contiguous: bin = c // (M/B) and
    super-bin = bin // (B/K).
    """

    codebook_size: int
    pre_bins: int
    super_bins: int = 1
    seed: int = 0
    structured: bool = False

    def __post_init__(self):
        m, b, k = self.codebook_size, self.pre_bins, self.super_bins
        if min(m, b, k) < 1:
            raise DomainError(f"binning sizes must be positive, got M={m}, B={b}, K={k}")
        if m % b:
            raise DomainError(f"pre_bins {b} does not divide codebook_size {m}")
        if b % k:
            raise DomainError(f"super_bins {k} does not divide pre_bins {b}")

    @property
    def bin_size(self) -> int:
        return self.codebook_size // self.pre_bins

    def _resolve_super_bins(self, super_bins: Optional[int]) -> int:
        k = self.super_bins if super_bins is None else int(super_bins)
        if k < 1 or self.pre_bins % k:
            raise DomainError(f"{k} super-bins do not divide {self.pre_bins} pre-bins")
        return k

    def _codeword_perm(self, frame_index: int):
        if self.structured:
            ident = np.arange(self.codebook_size)
            return ident, ident
        return _permutation(self.seed, frame_index, 0, self.codebook_size)

    def _bin_perm(self, frame_index: int) -> np.ndarray:
        if self.structured:
            return np.arange(self.pre_bins)
        return _permutation(self.seed, frame_index, 1, self.pre_bins)[0]

    def bin_of(self, codeword, frame_index: int = 0):
        perm, _ = self._codeword_perm(frame_index)
        return perm[codeword] // self.bin_size

    def super_bin_of_bin(self, bin_index, frame_index: int = 0, super_bins: Optional[int] = None):
        k = self._resolve_super_bins(super_bins)
        return self._bin_perm(frame_index)[bin_index] // (self.pre_bins // k)

    def super_bin_of(self, codeword, frame_index: int = 0, super_bins: Optional[int] = None):
        return self.super_bin_of_bin(self.bin_of(codeword, frame_index), frame_index, super_bins)

    def codewords_in_bin(self, bin_index: int, frame_index: int = 0) -> np.ndarray:
        """Codewords of a bin, ordered by their message offset."""
        _, inverse = self._codeword_perm(frame_index)
        start = int(bin_index) * self.bin_size
        return inverse[start:start + self.bin_size]

    def bins_in_super_bin(self, super_bin: int, frame_index: int = 0, super_bins: Optional[int] = None) -> np.ndarray:
        k = self._resolve_super_bins(super_bins)
        group = self.pre_bins // k
        perm = self._bin_perm(frame_index)
        return np.flatnonzero(perm // group == super_bin)

    def message_offset(self, codeword, frame_index: int = 0):
        perm, _ = self._codeword_perm(frame_index)
        return perm[codeword] % self.bin_size


def _check_codeword(binning: ToyBinning, codeword: int) -> int:
    codeword = int(codeword)
    if not 0 <= codeword < binning.codebook_size:
        raise DomainError(f"codeword {codeword} outside 0..{binning.codebook_size - 1}")
    return codeword


def distill_key(
    binning: ToyBinning,
    transmitted_index: int,
    key_rate_bits: Optional[int] = None,
    frame_index: int = 0,
) -> int:
    """
    Super-bin index of the transmitted codeword, decided after the frame.

    Args:
        binning: Shared codebook recipe
        transmitted_index: Codeword sent by Alice (decoded by Bob)
        key_rate_bits: Key length; K = 2**key_rate_bits super-bins. Defaults
            to ``binning.super_bins``
        frame_index: Frame whose recipe is used

    Raises:
        DomainError: If K does not divide the number of pre-bins
    """
    codeword = _check_codeword(binning, transmitted_index)
    k = binning.super_bins if key_rate_bits is None else 2 ** int(key_rate_bits)
    return int(binning.super_bin_of(codeword, frame_index, k))


def encode_scheme2(
    binning: ToyBinning, encrypted_message: int, rng: np.random.Generator, frame_index: int = 0
) -> int:
    """Pick a random bin and send the codeword at the message's offset inside it."""
    if not 0 <= encrypted_message < binning.bin_size:
        raise DomainError(f"message {encrypted_message} outside 0..{binning.bin_size - 1}")
    bin_index = int(rng.integers(binning.pre_bins))
    return int(binning.codewords_in_bin(bin_index, frame_index)[encrypted_message])


def encode_scheme1(
    binning: ToyBinning,
    secret_index: int,
    encrypted_message: int,
    rng: np.random.Generator,
    frame_index: int = 0,
) -> int:
    """Send a secret chosen up front: random bin inside the secret's super-bin."""
    if not 0 <= secret_index < binning.super_bins:
        raise DomainError(f"secret {secret_index} outside 0..{binning.super_bins - 1}")
    if not 0 <= encrypted_message < binning.bin_size:
        raise DomainError(f"message {encrypted_message} outside 0..{binning.bin_size - 1}")
    bins = binning.bins_in_super_bin(secret_index, frame_index)
    bin_index = int(bins[rng.integers(len(bins))])
    return int(binning.codewords_in_bin(bin_index, frame_index)[encrypted_message])


def decode_message(binning: ToyBinning, codeword: int, frame_index: int = 0) -> int:
    codeword = _check_codeword(binning, codeword)
    return int(binning.message_offset(codeword, frame_index))


def _ambiguity_size(binning: ToyBinning, cap_bits: int) -> int:
    cap_bits = int(cap_bits)
    if cap_bits < 0:
        raise DomainError(f"cap_bits must be nonnegative, got {cap_bits}")
    cells = 2 ** cap_bits
    if binning.codebook_size % cells:
        raise DomainError(f"2**{cap_bits} does not divide codebook_size {binning.codebook_size}")
    return binning.codebook_size // cells


def _key_entropy(keys: np.ndarray, k: int) -> float:
    counts = np.bincount(keys, minlength=k)
    return float(stats.entropy(counts, base=2))


def measure_equivocation(
    binning: ToyBinning,
    cap_bits: int,
    trials: int = 1000,
    seed: int = 0,
    model=EveModel.RANDOM,
) -> float:
    """
    Empirical H(key | Eve's ambiguity set) / log2 K.

    Eve's capacity budget of ``cap_bits`` leaves her an ambiguity set of
    L = M / 2**cap_bits codewords. In the structured model she learns the
    codeword index modulo M/L under the structured recipe. In the random
    model she learns the contiguous cell of L indices around the codeword
    while the recipe is redrawn for every trial.

    Returns:
        Ratio in [0, 1]; 1.0 when K = 1, 0.0 when L = 1
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    model = EveModel(model)
    k = binning.super_bins
    size = _ambiguity_size(binning, cap_bits)
    if k == 1:
        return 1.0
    if size == 1:
        return 0.0

    rng = np.random.default_rng(seed)
    m = binning.codebook_size
    cells = m // size
    total = 0.0
    if model is EveModel.STRUCTURED:
        contiguous = ToyBinning(m, binning.pre_bins, k, binning.seed, structured=True)
        for residue in rng.integers(cells, size=trials):
            members = residue + cells * np.arange(size)
            total += _key_entropy(contiguous.super_bin_of(members), k)
    else:
        for trial in range(trials):
            start = int(rng.integers(cells)) * size
            members = np.arange(start, start + size)
            total += _key_entropy(binning.super_bin_of(members, frame_index=trial), k)
    ratio = total / trials / math.log2(k)
    log.debug("Equivocation %s model, L=%d, K=%d: %.6f", model.value, size, k, ratio)
    return min(max(ratio, 0.0), 1.0)


def _partitions(total: int, parts: int, max_part: int):
    """Nonincreasing tuples of at most ``parts`` positive entries <= max_part summing to total."""
    if total == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(total, max_part), 0, -1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def expected_equivocation(binning: ToyBinning, cap_bits: int) -> float:
    """
    Exact expectation of the random-model equivocation ratio.

    Under a uniformly random recipe the key counts inside Eve's ambiguity set
    follow a multivariate hypergeometric law with K colours of M/K codewords
    each. The expectation is summed over count profiles, grouped by their
    sorted shape.
    """
    k = binning.super_bins
    size = _ambiguity_size(binning, cap_bits)
    if k == 1:
        return 1.0
    if size == 1:
        return 0.0

    m = binning.codebook_size
    group = m // k
    norm = math.comb(m, size)
    expected = 0.0
    for shape in _partitions(size, k, group):
        counts = shape + (0,) * (k - len(shape))
        multiplicity = math.factorial(k)
        for value in set(counts):
            multiplicity //= math.factorial(counts.count(value))
        ways = multiplicity
        for c in counts:
            ways *= math.comb(group, c)
        expected += (ways / norm) * float(stats.entropy(np.array(counts), base=2))
    return expected / math.log2(k)
