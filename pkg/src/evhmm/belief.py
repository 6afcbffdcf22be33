"""Belief-function arithmetic over small finite frames.

Subsets of the frame are encoded as bitmasks (bit i set <=> label i in the
subset), so a frame of N labels has a power set of 2^N masks and all
transforms run on dense float64 arrays of that length.  Mass functions are
kept sparse (focal elements only); commonalities are dense.

The open-world convention is used throughout: combinations are not
normalized, conflict stays on the empty set, and normalization happens only
inside the pignistic transform.
"""

import numpy as np

from . import _backend
from .errors import AllZeroLikelihoods, FrameMismatch, NotAMass, TotalConflict

MAX_FRAME = 16

_popcount_cache = {}


def _popcounts(n):
    try:
        return _popcount_cache[n]
    except KeyError:
        masks = np.arange(1 << n, dtype=np.uint32)
        pc = np.zeros(1 << n, dtype=np.float64)
        for i in range(n):
            pc += (masks >> i) & 1
        _popcount_cache[n] = pc
        return pc


class Frame:
    """An ordered set of distinct labels; the frame of discernment.

    Label order is fixed at construction and defines the bit layout of
    subset masks as well as every index-based tie rule in the decoders.
    At most 16 labels are supported (the power set must stay enumerable).
    """

    def __init__(self, labels):
        labels = tuple(labels)
        if not 1 <= len(labels) <= MAX_FRAME:
            raise ValueError(f"frame must have 1..{MAX_FRAME} labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ValueError("frame labels must be unique")
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}

    @property
    def size(self):
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    @property
    def num_subsets(self):
        return 1 << len(self.labels)

    @property
    def full_mask(self):
        return (1 << len(self.labels)) - 1

    def index(self, label):
        return self._index[label]

    def singleton(self, label):
        """Mask of the one-element subset {label}."""
        return 1 << self._index[label]

    def mask_of(self, labels):
        """Mask of the subset holding the given labels."""
        mask = 0
        for lab in labels:
            mask |= 1 << self._index[lab]
        return mask

    def labels_of(self, mask):
        """Labels in a mask, in frame order."""
        return tuple(lab for i, lab in enumerate(self.labels) if mask >> i & 1)

    def popcounts(self):
        return _popcounts(self.size)

    def __eq__(self, other):
        return isinstance(other, Frame) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return f"Frame({list(self.labels)!r})"


def _check_same_frame(a, b):
    if a.frame != b.frame:
        raise FrameMismatch(f"{a.frame!r} vs {b.frame!r}")


class MassFunction:
    """A basic belief assignment: subset masks -> positive masses.

    Only focal elements (strictly positive mass) are stored.  Mass on the
    empty set is allowed and meaningful (open-world conflict).
    """

    def __init__(self, frame, masses, require_normalized=True):
        self.frame = frame
        clean = {}
        for mask, value in masses.items():
            if not 0 <= mask < frame.num_subsets:
                raise ValueError(f"mask {mask} outside frame of {frame.size} labels")
            if value < 0:
                raise ValueError(f"negative mass {value} on mask {mask}")
            if value > 0:
                clean[mask] = clean.get(mask, 0.0) + value
        self.masses = clean
        if require_normalized and abs(self.total() - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {self.total()}, expected 1")

    @classmethod
    def from_subsets(cls, frame, mapping, require_normalized=True):
        """Build from a mapping whose keys are iterables of labels."""
        return cls(
            frame,
            {frame.mask_of(labels): v for labels, v in mapping.items()},
            require_normalized=require_normalized,
        )

    @classmethod
    def vacuous(cls, frame):
        return cls(frame, {frame.full_mask: 1.0})

    @classmethod
    def categorical(cls, frame, mask):
        """All mass on one subset (the empty set is allowed)."""
        return cls(frame, {mask: 1.0})

    @classmethod
    def from_dense(cls, frame, dense, require_normalized=True, zero_tol=1e-12):
        """Build from a dense power-set vector, dropping round-off noise."""
        low = dense.min()
        if low < -1e-9:
            raise ValueError(f"dense mass vector has negative entry {low}")
        masses = {int(i): float(v) for i, v in enumerate(dense) if v > zero_tol}
        return cls(frame, masses, require_normalized=require_normalized)

    def to_dense(self):
        dense = np.zeros(self.frame.num_subsets)
        for mask, value in self.masses.items():
            dense[mask] = value
        return dense

    def total(self):
        return float(sum(self.masses.values()))

    def conflict(self):
        """Mass on the empty set."""
        return self.masses.get(0, 0.0)

    def focal(self):
        """Focal masks in ascending order."""
        return sorted(self.masses)

    def is_bayesian(self):
        pc = self.frame.popcounts()
        return all(pc[mask] == 1 for mask in self.masses if mask)

    def __getitem__(self, mask):
        return self.masses.get(mask, 0.0)

    def __len__(self):
        return len(self.masses)

    def __repr__(self):
        parts = ", ".join(
            f"{{{','.join(self.frame.labels_of(m)) or ''}}}:{v:.4g}"
            for m, v in sorted(self.masses.items())
        )
        return f"MassFunction({parts})"


class Commonality:
    """Dense commonality table q over the full power set of a frame."""

    def __init__(self, frame, q):
        if q.shape != (frame.num_subsets,):
            raise ValueError("commonality table must cover the full power set")
        self.frame = frame
        self.q = q

    def __getitem__(self, mask):
        return float(self.q[mask])


class PignisticDistribution:
    """A probability distribution over the frame's singletons."""

    def __init__(self, frame, probs):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (frame.size,):
            raise ValueError("need one probability per frame label")
        if probs.min() < 0:
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")
        self.frame = frame
        self.probs = probs

    def prob(self, label):
        return float(self.probs[self.frame.index(label)])

    def argmax_index(self):
        """Index of the most probable label; ties go to the lowest index."""
        return int(np.argmax(self.probs))

    def __repr__(self):
        parts = ", ".join(f"{lab}:{p:.4g}" for lab, p in zip(self.frame.labels, self.probs))
        return f"PignisticDistribution({parts})"


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def mass_to_commonality(m):
    """q(A) = sum of m(B) over B >= A."""
    return Commonality(m.frame, _backend.zeta_superset(m.to_dense(), m.frame.size))


def commonality_to_mass(q):
    """Moebius inversion of a commonality table back to a mass function.

    Round-off negatives are clamped to zero; the result is rescaled only if
    clamping moved the total away from q(empty) by more than 1e-9.  A value
    below -1e-6 means the table was never a commonality.
    """
    dense = _backend.mobius_superset(q.q, q.frame.size)
    low = dense.min()
    if low < -1e-6:
        raise NotAMass(f"Moebius inversion produced mass {low}")
    np.clip(dense, 0.0, None, out=dense)
    expected = float(q.q[0])
    got = float(dense.sum())
    if abs(got - expected) > 1e-9 and got > 0:
        dense *= expected / got
    return MassFunction.from_dense(q.frame, dense, require_normalized=False)


def implicability(m):
    """Dense implicability table: b(A) = sum of m(B) over B <= A."""
    return _backend.zeta_subset(m.to_dense(), m.frame.size)


# ---------------------------------------------------------------------------
# combination rules
# ---------------------------------------------------------------------------

def conjunctive_combine(m1, m2):
    """Unnormalized conjunctive rule; conflict accumulates on the empty set.

    Computed as the pointwise product of commonalities.
    """
    _check_same_frame(m1, m2)
    n = m1.frame.size
    q = _backend.zeta_superset(m1.to_dense(), n) * _backend.zeta_superset(m2.to_dense(), n)
    dense = _backend.mobius_superset(q, n)
    np.clip(dense, 0.0, None, out=dense)
    return MassFunction.from_dense(m1.frame, dense, require_normalized=False)


def disjunctive_combine(m1, m2):
    """Disjunctive rule: mass flows to unions of focal elements.

    Computed as the pointwise product of implicabilities.
    """
    _check_same_frame(m1, m2)
    n = m1.frame.size
    b = _backend.zeta_subset(m1.to_dense(), n) * _backend.zeta_subset(m2.to_dense(), n)
    dense = _backend.mobius_subset(b, n)
    np.clip(dense, 0.0, None, out=dense)
    return MassFunction.from_dense(m1.frame, dense, require_normalized=False)


def renormalize(m):
    """Dempster-style closed-world helper: drop conflict, rescale to 1."""
    conflict = m.conflict()
    if conflict >= 1.0 - 1e-12:
        raise TotalConflict("all mass on the empty set")
    scale = 1.0 / (m.total() - conflict)
    masses = {mask: v * scale for mask, v in m.masses.items() if mask}
    return MassFunction(m.frame, masses)


# ---------------------------------------------------------------------------
# decisions and bba construction
# ---------------------------------------------------------------------------

def pignistic_transform(m):
    """BetP(s) = sum over A containing s of m(A) / (|A| * (1 - m(empty)))."""
    conflict = m.conflict()
    if conflict >= 1.0 - 1e-12:
        raise TotalConflict("pignistic transform undefined at total conflict")
    num = _backend.pignistic_num(m.to_dense(), m.frame.popcounts(), m.frame.size)
    return PignisticDistribution(m.frame, num / (m.total() - conflict))


def inverse_pignistic_consonant(p):
    """Least-committed consonant bba whose pignistic transform equals p.

    Singletons are sorted by descending probability (ties: lower frame
    index first); with A_k the top-k set, m(A_k) = k * (p_k - p_{k+1}).
    """
    order = sorted(range(p.frame.size), key=lambda i: (-p.probs[i], i))
    masses = {}
    mask = 0
    for rank, idx in enumerate(order, start=1):
        mask |= 1 << idx
        nxt = p.probs[order[rank]] if rank < len(order) else 0.0
        value = rank * (float(p.probs[idx]) - float(nxt))
        if value > 0:
            masses[mask] = masses.get(mask, 0.0) + value
    return MassFunction(p.frame, masses)


def bayesian_bba(p):
    """The bba whose focal elements are exactly the singletons of p."""
    masses = {1 << i: float(v) for i, v in enumerate(p.probs) if v > 0}
    return MassFunction(p.frame, masses)


def gbt_bba_from_likelihoods(frame, pl):
    """Bba over the frame built from per-singleton likelihoods.

    Likelihoods are rescaled so the maximum is 1, then
    m(A) = prod_{s in A} pl(s) * prod_{s not in A} (1 - pl(s)),
    equivalently q(A) = prod_{s in A} pl(s).
    """
    pl = np.asarray(pl, dtype=np.float64)
    if pl.shape != (frame.size,):
        raise ValueError("need one likelihood per frame label")
    top = pl.max()
    if top <= 0:
        raise AllZeroLikelihoods("no state supports the observation")
    pl = np.clip(pl / top, 0.0, 1.0)
    q = np.ones(frame.num_subsets)
    masks = np.arange(frame.num_subsets)
    for i in range(frame.size):
        q[(masks >> i) & 1 == 1] *= pl[i]
    dense = _backend.mobius_superset(q, frame.size)
    np.clip(dense, 0.0, None, out=dense)
    return MassFunction.from_dense(frame, dense)
