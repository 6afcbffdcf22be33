"""Belief-function HMMs: commonality forward propagation and credal decoding.

Models hold one conditional mass function per previous state (and one per
token, built on demand).  Propagation multiplies commonalities pointwise,
mixes them by the previous step's masses, and never renormalizes: conflict
accumulates on the empty set and only enters the decision rule through the
(1 - m(empty)) factor.  Decoding is step-greedy: each step decides one tag
by a conflict-discounted pignistic argmax and restricts the next step's
mixture to the states just decided.
"""

import numpy as np

from . import _backend
from .belief import MassFunction, bayesian_bba, gbt_bba_from_likelihoods, \
    inverse_pignistic_consonant, PignisticDistribution
from .errors import AllZeroLikelihoods, EmptyObservation, TotalConflict
from .prob import Hmm2

_MODES = ("bayesian", "consonant", "gbt")


class ObservationBbaStrategy:
    """Builds per-token observation bbas from emission likelihood columns.

    bayesian keeps the normalized column as singleton masses, consonant
    takes the least-committed nested bba with that pignistic distribution,
    gbt applies the generalized Bayesian theorem to the max-rescaled
    column.
    """

    def __init__(self, mode, hmm):
        if mode not in _MODES:
            raise ValueError(f"unknown bba mode {mode!r}")
        self.mode = mode
        self.hmm = hmm
        self._cache = {}

    def bba_for_index(self, token_index):
        cached = self._cache.get(token_index)
        if cached is not None:
            return cached
        col = self.hmm.emit[:, token_index]
        frame = self.hmm.frame
        if self.mode == "gbt":
            bba = gbt_bba_from_likelihoods(frame, col)
        else:
            total = col.sum()
            if total <= 0:
                raise AllZeroLikelihoods(
                    f"token column {token_index} has no emitting state")
            dist = PignisticDistribution(frame, col / total)
            if self.mode == "bayesian":
                bba = bayesian_bba(dist)
            else:
                bba = inverse_pignistic_consonant(dist)
        dense = bba.to_dense()
        q = _backend.zeta_superset(dense.copy(), frame.size)
        self._cache[token_index] = (bba, q)
        return bba, q

    def bba(self, token):
        return self.bba_for_index(self.hmm.map_token(token))[0]


class BeliefHmm1:
    """First-order belief model: initial, transition and observation bbas."""

    def __init__(self, frame, pi_bba, trans_bba, obs_builder):
        self.frame = frame
        self.pi_bba = pi_bba
        self.trans_bba = tuple(trans_bba)
        self.obs_builder = obs_builder
        n = frame.size
        self._n = n
        self._size = 1 << n
        self._popcount = frame.popcounts()
        self._q_pi = _backend.zeta_superset(pi_bba.to_dense().copy(), n)
        self._cond_q_cache = {}
        self._cond_m_cache = {}

    # -- conditional commonalities ------------------------------------

    def _cond_pair(self, mask):
        """(mass, commonality) of the transition bba conditioned on a subset.

        Singletons come straight from the stored table; a larger set is the
        disjunctive combination of its members' conditionals; the empty set
        maps to the all-mass-on-empty bba (conflict stays conflict).
        """
        hit = self._cond_q_cache.get(mask)
        if hit is not None:
            return self._cond_m_cache[mask], hit
        n = self._n
        if mask == 0:
            m = np.zeros(self._size)
            m[0] = 1.0
            q = np.zeros(self._size)
            q[0] = 1.0
        elif self._popcount[mask] == 1:
            m = self.trans_bba[mask.bit_length() - 1].to_dense()
            q = _backend.zeta_superset(m.copy(), n)
        else:
            b = np.ones(self._size)
            rest = mask
            while rest:
                low = rest & -rest
                dense = self.trans_bba[low.bit_length() - 1].to_dense()
                b *= _backend.zeta_subset(dense, n)
                rest ^= low
            m = np.clip(_backend.mobius_subset(b, n), 0.0, None)
            q = _backend.zeta_superset(m.copy(), n)
        self._cond_m_cache[mask] = m
        self._cond_q_cache[mask] = q
        return m, q

    def _cond_q(self, mask):
        return self._cond_pair(mask)[1]

    def _obs_q(self, token_index):
        return self.obs_builder.bba_for_index(token_index)[1]

    def _map_tokens(self, obs):
        obs = list(obs)
        if not obs:
            raise EmptyObservation("empty observation sequence")
        return [self.obs_builder.hmm.map_token(t) for t in obs]


class BeliefHmm2(BeliefHmm1):
    """Second-order belief model: adds pair-conditioned transition bbas.

    The bba conditioned on history (i, j) is built from the two single-step
    conditionals: the i-conditional pushed one step through the transition
    table, combined with the j-conditional (conjunctively by default).
    Results are cached per (i, j) focal-set pair.
    """

    def __init__(self, frame, pi_bba, trans_bba, obs_builder,
                 pair_mode="conjunctive"):
        super().__init__(frame, pi_bba, trans_bba, obs_builder)
        if pair_mode not in ("conjunctive", "disjunctive"):
            raise ValueError(f"unknown pair mode {pair_mode!r}")
        self.pair_mode = pair_mode
        self._push_q_cache = {}
        self._pair_q_cache = {}

    def _push_q(self, mask):
        """Commonality of cond(mask) propagated one transition step."""
        hit = self._push_q_cache.get(mask)
        if hit is not None:
            return hit
        m, _ = self._cond_pair(mask)
        q = np.zeros(self._size)
        for focal in np.nonzero(m > 0.0)[0]:
            q += m[focal] * self._cond_q(int(focal))
        self._push_q_cache[mask] = q
        return q

    def _pair_q(self, mask_i, mask_j):
        key = (mask_i, mask_j)
        hit = self._pair_q_cache.get(key)
        if hit is not None:
            return hit
        n = self._n
        if self.pair_mode == "conjunctive":
            q = self._push_q(mask_i) * self._cond_q(mask_j)
        else:
            mp = np.clip(_backend.mobius_superset(self._push_q(mask_i).copy(), n), 0.0, None)
            mj, _ = self._cond_pair(mask_j)
            b = _backend.zeta_subset(mp, n) * _backend.zeta_subset(mj.copy(), n)
            m = np.clip(_backend.mobius_subset(b, n), 0.0, None)
            q = _backend.zeta_superset(m, n)
        self._pair_q_cache[key] = q
        return q


class CredalTrellis:
    """Per-sentence record of the credal recursions.

    q_alpha / q_delta hold one dense commonality table per step; masses the
    matching mass tables; conflicts maps each step's conditioning focal set
    to its (weighted) conflict mass; psi and restrict hold the decided tag
    indexes and admitted-state masks of the decoding pass.
    """

    def __init__(self, order):
        self.order = order
        self.q_alpha = None
        self.q_delta = None
        self.masses = []
        self.conflicts = None
        self.psi = None
        self.restrict = None


def from_prob_hmm(h, bba_mode="bayesian", pair_mode="conjunctive"):
    """Convert an estimated probabilistic model to a belief model.

    Every probability row (initial, per-state transition) becomes a mass
    function per bba_mode; emission columns convert lazily per token.
    An Hmm2 input yields a BeliefHmm2 (its interpolated trigram tensor is
    not consulted: pair conditionals are synthesized from the one-step
    rows, which is the point of the second-order belief construction).
    """
    frame = h.frame
    pi_bba = _row_bba(frame, h.pi, bba_mode)
    trans_bba = [_row_bba(frame, h.trans[i], bba_mode) for i in range(frame.size)]
    builder = ObservationBbaStrategy(bba_mode, h)
    if isinstance(h, Hmm2):
        return BeliefHmm2(frame, pi_bba, trans_bba, builder, pair_mode=pair_mode)
    return BeliefHmm1(frame, pi_bba, trans_bba, builder)


def _row_bba(frame, row, mode):
    # a zero row (state never seen in this position) carries no evidence
    if float(np.sum(row)) <= 0.0:
        return MassFunction.vacuous(frame)
    if mode == "gbt":
        return gbt_bba_from_likelihoods(frame, row)
    dist = PignisticDistribution(frame, np.asarray(row, dtype=np.float64))
    if mode == "bayesian":
        return bayesian_bba(dist)
    if mode == "consonant":
        return inverse_pignistic_consonant(dist)
    raise ValueError(f"unknown bba mode {mode!r}")


def observation_bba(bh, token):
    """The token's emission column as a mass function, per strategy."""
    return bh.obs_builder.bba(token)


def pair_transition_bba(bh2, i, j):
    """Transition bba conditioned on the two-tag history (i, j)."""
    mask_i = bh2.frame.singleton(i)
    mask_j = bh2.frame.singleton(j)
    q = bh2._pair_q(mask_i, mask_j)
    n = bh2.frame.size
    m = np.clip(_backend.mobius_superset(q.copy(), n), 0.0, None)
    return MassFunction.from_dense(bh2.frame, m, require_normalized=False)


# ---------------------------------------------------------------------------
# forward propagation
# ---------------------------------------------------------------------------

def _initial_mass(bh, q_b0):
    q0 = bh._q_pi * q_b0
    m0 = np.clip(_backend.mobius_superset(q0.copy(), bh._n), 0.0, None)
    return q0, m0


def credal_forward1(bh, obs):
    """Propagate commonalities through the first-order model."""
    idx = bh._map_tokens(obs)
    n = bh._n
    trellis = CredalTrellis(order=1)
    trellis.q_alpha = []
    q, m = _initial_mass(bh, bh._obs_q(idx[0]))
    trellis.q_alpha.append(q)
    trellis.masses.append(m)
    for t in range(1, len(idx)):
        q_b = bh._obs_q(idx[t])
        q_next = np.zeros(bh._size)
        m_next = np.zeros(bh._size)
        for focal in np.nonzero(m > 0.0)[0]:
            w = m[int(focal)]
            q_cand = bh._cond_q(int(focal)) * q_b
            q_next += w * q_cand
            m_next += w * np.clip(
                _backend.mobius_superset(q_cand.copy(), n), 0.0, None)
        trellis.q_alpha.append(q_next)
        trellis.masses.append(m_next)
        m = m_next
    return trellis


def credal_forward2(bh2, obs):
    """Second-order forward pass.

    The trellis is kept factored by the previous step's focal set (the
    per-path history), so each portion of mass is propagated through the
    pair conditional that matches where it actually came from.
    """
    idx = bh2._map_tokens(obs)
    n = bh2._n
    trellis = CredalTrellis(order=2)
    trellis.q_alpha = []
    q, m = _initial_mass(bh2, bh2._obs_q(idx[0]))
    trellis.q_alpha.append(q)
    trellis.masses.append(m)
    if len(idx) == 1:
        return trellis

    # t=2: first-order conditioning; the new trellis slices are keyed by
    # the step-1 focal set that produced them
    q_b = bh2._obs_q(idx[1])
    slices = {}
    q_next = np.zeros(bh2._size)
    m_next = np.zeros(bh2._size)
    for focal in np.nonzero(m > 0.0)[0]:
        focal = int(focal)
        w = m[focal]
        q_cand = bh2._cond_q(focal) * q_b
        m_cand = np.clip(_backend.mobius_superset(q_cand.copy(), n), 0.0, None)
        slices[focal] = w * m_cand
        q_next += w * q_cand
        m_next += w * m_cand
    trellis.q_alpha.append(q_next)
    trellis.masses.append(m_next)

    for t in range(2, len(idx)):
        q_b = bh2._obs_q(idx[t])
        nxt = {}
        q_next = np.zeros(bh2._size)
        m_next = np.zeros(bh2._size)
        for mask_i in sorted(slices):
            sl = slices[mask_i]
            for focal in np.nonzero(sl > 0.0)[0]:
                mask_j = int(focal)
                w = sl[mask_j]
                q_cand = bh2._pair_q(mask_i, mask_j) * q_b
                m_cand = np.clip(
                    _backend.mobius_superset(q_cand.copy(), n), 0.0, None)
                acc = nxt.get(mask_j)
                if acc is None:
                    acc = nxt[mask_j] = np.zeros(bh2._size)
                acc += w * m_cand
                q_next += w * q_cand
                m_next += w * m_cand
        slices = nxt
        trellis.q_alpha.append(q_next)
        trellis.masses.append(m_next)
    return trellis


# ---------------------------------------------------------------------------
# credal viterbi
# ---------------------------------------------------------------------------

def _initial_decision(bh, q_b0, trellis):
    q0, m0 = _initial_mass(bh, q_b0)
    num = _backend.pignistic_num(m0.copy(), bh._popcount, bh._n)
    if num.max() <= 0.0:
        raise TotalConflict("initial combination leaves no plausible state")
    psi0 = int(np.argmax(num))
    trellis.q_delta.append(q0)
    trellis.masses.append(m0)
    trellis.conflicts.append({None: float(m0[0])})
    trellis.psi.append(psi0)
    trellis.restrict.append(1 << psi0)
    return m0


def _decision_step(bh, m_prev, a_prev, q_b, cond_q_of, trellis, t):
    """One restricted propagate-and-decide step shared by both orders.

    cond_q_of maps a focal mask of m_prev to the conditioning commonality
    to use for it.  Returns the summed next mass plus the per-focal
    candidate masses (for the caller's bookkeeping).
    """
    n = bh._n
    q_next = np.zeros(bh._size)
    m_next = np.zeros(bh._size)
    cand_masses = {}
    conflicts = {}
    best_score = 0.0
    best_tag = None
    decided = 0
    focals = [int(f) for f in np.nonzero(m_prev > 0.0)[0]]
    admitted = [mask for mask in focals if not mask & ~a_prev]
    if all(mask == 0 for mask in admitted):
        # the restriction left nothing to vote (e.g. a vacuous model whose
        # only focal is the whole frame): run the step unrestricted rather
        # than fail on an ignorant-but-consistent model
        admitted = focals
    for mask in admitted:
        w = m_prev[mask]
        q_cand = cond_q_of(mask) * q_b
        m_cand = np.clip(_backend.mobius_superset(q_cand.copy(), n), 0.0, None)
        cand_masses[mask] = w * m_cand
        q_next += w * q_cand
        m_next += w * m_cand
        conflicts[mask] = float(w * m_cand[0])
        if mask == 0:
            continue  # pure conflict conditions the mixture but casts no vote
        num = _backend.pignistic_num(m_cand.copy(), bh._popcount, n)
        k = int(np.argmax(num))
        score = w * num[k]
        if score <= 0.0:
            continue
        decided |= 1 << k
        if best_tag is None or score > best_score \
                or (score == best_score and k < best_tag):
            best_score = score
            best_tag = k
    if best_tag is None:
        raise TotalConflict(f"all candidates fully conflicting at step {t + 1}")
    trellis.q_delta.append(q_next)
    trellis.masses.append(m_next)
    trellis.conflicts.append(conflicts)
    trellis.psi.append(best_tag)
    trellis.restrict.append(decided)
    return m_next, cand_masses


def credal_viterbi1(bh, obs):
    """Step-greedy credal decoding; returns (tags, trellis)."""
    idx = bh._map_tokens(obs)
    trellis = CredalTrellis(order=1)
    trellis.q_delta, trellis.conflicts = [], []
    trellis.psi, trellis.restrict = [], []
    m = _initial_decision(bh, bh._obs_q(idx[0]), trellis)
    for t in range(1, len(idx)):
        m, _ = _decision_step(bh, m, trellis.restrict[t - 1],
                              bh._obs_q(idx[t]), bh._cond_q, trellis, t)
    tags = [bh.frame.labels[k] for k in trellis.psi]
    return tags, trellis


def credal_viterbi2(bh2, obs):
    """Second-order credal decoding; returns (tags, trellis).

    The pair conditional for a previous-step focal set S_j needs the state
    before that; it is resolved through a backpointer: the step-(t-1)
    focal that contributed the most mass to S_j.
    """
    idx = bh2._map_tokens(obs)
    trellis = CredalTrellis(order=2)
    trellis.q_delta, trellis.conflicts = [], []
    trellis.psi, trellis.restrict = [], []
    m = _initial_decision(bh2, bh2._obs_q(idx[0]), trellis)
    backptr = {}
    for t in range(1, len(idx)):
        if t == 1:
            cond_q_of = bh2._cond_q
        else:
            bp = backptr

            def cond_q_of(mask, _bp=bp):
                return bh2._pair_q(_bp[mask], mask)
        m, cand_masses = _decision_step(bh2, m, trellis.restrict[t - 1],
                                        bh2._obs_q(idx[t]), cond_q_of,
                                        trellis, t)
        backptr = _dominant_contributors(cand_masses)
    tags = [bh2.frame.labels[k] for k in trellis.psi]
    return tags, trellis


def _dominant_contributors(cand_masses):
    """For every focal of the summed mass, the conditioning focal that
    contributed the largest share (ties to the lowest mask)."""
    best = {}
    share = {}
    for mask_j in sorted(cand_masses):
        contrib = cand_masses[mask_j]
        for focal in np.nonzero(contrib > 0.0)[0]:
            s = int(focal)
            if s not in best or contrib[s] > share[s]:
                best[s] = mask_j
                share[s] = contrib[s]
    return best
