"""Permutations on {0,...,N-1} and bitmask-coded subsets.

Subsets of a domain of size N <= 64 are coded as integer bitmasks; the
canonical textual rendering is the strictly increasing index list.
Permutations carry a textual cycle notation: "(0 1 2)(3 4)", identity "()".
"""

from __future__ import annotations

import re
from functools import lru_cache
from math import lcm

DOMAIN_CAP = 64


class DomainError(ValueError):
    """Subset or permutation outside the domain it is used with."""


# ---------------------------------------------------------------------------
# subset codes

def mask_of(indices, degree=None):
    m = 0
    for i in indices:
        if i < 0 or (degree is not None and i >= degree):
            raise DomainError(f"index {i} outside domain of size {degree}")
        m |= 1 << i
    return m


def bits_of(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask):
    return mask.bit_count()


def render_subset(mask):
    return ",".join(str(i) for i in bits_of(mask))


def parse_subset(text, degree=None):
    text = text.strip()
    if not text:
        return 0
    parts = [int(p) for p in text.split(",")]
    if parts != sorted(set(parts)):
        raise DomainError(f"subset rendering not strictly increasing: {text!r}")
    return mask_of(parts, degree)


def subsets_of_mask(mask, size=None):
    """All submasks of `mask`, optionally restricted to a given popcount."""
    bits = bits_of(mask)
    n = len(bits)
    for choice in range(1 << n):
        if size is not None and choice.bit_count() != size:
            continue
        sub = 0
        c = choice
        j = 0
        while c:
            if c & 1:
                sub |= 1 << bits[j]
            c >>= 1
            j += 1
        yield sub


def ksubsets(mask, k):
    """The k-element submasks of `mask` in lexicographic mask order."""
    return sorted(subsets_of_mask(mask, size=k))


# ---------------------------------------------------------------------------
# permutations

class Perm:
    """A permutation of {0,...,N-1}, stored as the tuple of images."""

    __slots__ = ("images", "_hash")

    def __init__(self, images):
        images = tuple(images)
        if sorted(images) != list(range(len(images))):
            raise DomainError(f"not a permutation: {images}")
        self.images = images
        self._hash = hash(images)

    @classmethod
    def identity(cls, degree):
        return cls(range(degree))

    @classmethod
    def from_cycles(cls, cycles, degree):
        images = list(range(degree))
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                if a >= degree or b >= degree:
                    raise DomainError(f"cycle entry outside degree {degree}")
                images[a] = b
        return cls(images)

    @classmethod
    def from_cycle_string(cls, text, degree):
        text = text.strip()
        if text in ("", "()"):
            return cls.identity(degree)
        cycles = []
        for grp in re.findall(r"\(([^()]*)\)", text):
            entries = [int(t) for t in re.split(r"[,\s]+", grp.strip()) if t]
            if entries:
                cycles.append(entries)
        return cls.from_cycles(cycles, degree)

    @property
    def degree(self):
        return len(self.images)

    def __call__(self, point):
        return self.images[point]

    def __mul__(self, other):
        """(p * q)(x) == p(q(x))."""
        im = other.images
        own = self.images
        return Perm(own[im[i]] for i in range(len(own)))

    def inverse(self):
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Perm(inv)

    def apply_mask(self, mask):
        out = 0
        im = self.images
        i = 0
        while mask:
            if mask & 1:
                out |= 1 << im[i]
            mask >>= 1
            i += 1
        return out

    def cycles(self, include_fixed=False):
        seen = [False] * len(self.images)
        out = []
        for start in range(len(self.images)):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            j = self.images[start]
            while j != start:
                cyc.append(j)
                seen[j] = True
                j = self.images[j]
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def cycle_type(self):
        return tuple(sorted((len(c) for c in self.cycles(include_fixed=True)), reverse=True))

    def order(self):
        return lcm(*(len(c) for c in self.cycles(include_fixed=True)))

    def fixed_points(self):
        return [i for i, j in enumerate(self.images) if i == j]

    def is_identity(self):
        return all(i == j for i, j in enumerate(self.images))

    def to_cycle_string(self):
        cycs = self.cycles()
        if not cycs:
            return "()"
        return "".join("(" + " ".join(str(i) for i in c) + ")" for c in cycs)

    def __eq__(self, other):
        return isinstance(other, Perm) and self.images == other.images

    def __lt__(self, other):
        return self.images < other.images

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Perm({self.to_cycle_string()!r})"


@lru_cache(maxsize=None)
def all_perms(degree):
    """Every permutation of the given degree, in lexicographic image order."""
    import itertools

    return tuple(Perm(p) for p in itertools.permutations(range(degree)))
