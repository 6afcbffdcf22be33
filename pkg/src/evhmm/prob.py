"""Classical probabilistic HMMs, first and second order.

Estimation is relative-frequency with additive smoothing; second-order
transitions interpolate trigram, bigram and unigram relative frequencies
with either per-context log-count weights ("thede") or globally tuned
deleted-interpolation weights ("brants").  Decoding runs in log space
through the compiled kernels in _backend.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .belief import Frame
from .corpus import UNK
from .errors import EmptyCounts, EmptyObservation, NoTrigrams

_NEG_INF = float("-inf")


def _safe_log(a):
    out = np.full(a.shape, _NEG_INF)
    np.log(a, out=out, where=a > 0)
    return out


@dataclass
class ProbTrellis:
    """Per-sentence dynamic-programming tables, in log space."""

    order: int
    scores: np.ndarray
    psi: np.ndarray = None


class Hmm1:
    """First-order HMM: initial, transition and emission probabilities.

    The emission matrix column order follows ``symbols``; unknown tokens
    map to the reserved ``<UNK>`` column.
    """

    def __init__(self, frame, symbols, pi, trans, emit, add_k=0.0):
        self.frame = frame
        self.symbols = tuple(symbols)
        self.sym_index = {s: i for i, s in enumerate(self.symbols)}
        self.unk_index = self.sym_index[UNK]
        self.pi = np.asarray(pi, dtype=np.float64)
        self.trans = np.asarray(trans, dtype=np.float64)
        self.emit = np.asarray(emit, dtype=np.float64)
        self.add_k = add_k
        self._log_pi = _safe_log(self.pi)
        self._log_trans = _safe_log(self.trans)
        self._log_emit = _safe_log(self.emit)

    @property
    def n_states(self):
        return len(self.frame)

    def map_token(self, token):
        return self.sym_index.get(token, self.unk_index)

    def map_tokens(self, tokens):
        return np.array([self.map_token(t) for t in tokens], dtype=np.int64)

    def known(self, token):
        return token in self.sym_index and token != UNK


class Hmm2(Hmm1):
    """Second-order HMM layered on the first-order tables.

    Carries the raw count tensors (needed by the interpolation weights),
    the interpolated transition tensor, and sparse pair-conditioned
    emission tables with first-order backoff.
    """

    def __init__(self, frame, symbols, pi, trans, emit, tri_counts, bi_counts,
                 uni_counts, total_tokens, lambda_mode="brants", brants_lambdas=None,
                 emit2_table=None, emit2_context=None, emit2_min_count=2,
                 emit2_backoff=True, add_k=0.0):
        super().__init__(frame, symbols, pi, trans, emit, add_k=add_k)
        self.tri_counts = np.asarray(tri_counts, dtype=np.int64)
        self.bi_counts = np.asarray(bi_counts, dtype=np.int64)
        self.uni_counts = np.asarray(uni_counts, dtype=np.int64)
        self.total_tokens = total_tokens
        self.lambda_mode = lambda_mode
        self.brants_lambdas = brants_lambdas
        self.emit2_table = emit2_table if emit2_table is not None else {}
        self.emit2_context = emit2_context if emit2_context is not None else {}
        self.emit2_min_count = emit2_min_count
        self.emit2_backoff = emit2_backoff

        self.trigram_hat = _row_normalize(self.tri_counts.astype(np.float64), axis=2)
        self.bigram_hat = _row_normalize(self.bi_counts.astype(np.float64), axis=1)
        if total_tokens > 0:
            self.unigram_hat = self.uni_counts.astype(np.float64) / total_tokens
        else:
            self.unigram_hat = np.zeros(len(frame))

        self.a2 = self._interpolated_tensor()
        self._log_a2 = _safe_log(self.a2)
        self._emit2_cache = {}

    def _interpolated_tensor(self):
        n = self.n_states
        if self.lambda_mode == "thede":
            k3 = _thede_weight(self.tri_counts.astype(np.float64))
            k2 = _thede_weight(self.bi_counts.astype(np.float64))
            lam1 = k3
            lam2 = (1.0 - k3) * k2[np.newaxis, :, :]
            lam3 = (1.0 - k3) * (1.0 - k2)[np.newaxis, :, :]
        else:
            l1, l2, l3 = self.brants_lambdas
            lam1 = np.full((n, n, n), l1)
            lam2 = np.full((n, n, n), l2)
            lam3 = np.full((n, n, n), l3)
        return (lam1 * self.trigram_hat
                + lam2 * self.bigram_hat[np.newaxis, :, :]
                + lam3 * self.unigram_hat[np.newaxis, np.newaxis, :])

    def emission2_matrix(self, token_index):
        """Dense (prev, state) table of P(token | state, prev), memoized."""
        cached = self._emit2_cache.get(token_index)
        if cached is not None:
            return cached
        n = self.n_states
        out = np.empty((n, n))
        for j in range(n):
            for k in range(n):
                out[j, k] = self._emission2_by_index(k, j, token_index)
        self._emit2_cache[token_index] = out
        return out

    def _emission2_by_index(self, k, j, token_index):
        ctx = self.emit2_context.get((j, k), 0)
        if ctx >= self.emit2_min_count and ctx > 0:
            return self.emit2_table.get((j, k), {}).get(token_index, 0.0)
        if self.emit2_backoff:
            return self.emit[k, token_index]
        return 0.0


def _row_normalize(table, axis):
    sums = table.sum(axis=axis, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(sums > 0, table / np.where(sums > 0, sums, 1.0), 0.0)
    return out


def _thede_weight(counts):
    # (log10(c+1)+1) / (log10(c+1)+2), elementwise
    lg = np.log10(counts + 1.0)
    return (lg + 1.0) / (lg + 2.0)


def _tag_index(frame, label, what="tag"):
    try:
        return frame.index(label)
    except KeyError:
        raise KeyError(f"unknown {what} {label!r}") from None


def estimate_hmm1(counts, add_k=0.001):
    """Build a smoothed first-order model from corpus counts."""
    if not counts.tags or counts.total_tokens == 0:
        raise EmptyCounts("no tags or tokens")
    frame = Frame(counts.tags)
    n = len(frame)
    symbols = tuple(counts.vocab.keys())
    if UNK not in symbols:
        symbols = symbols + (UNK,)
    v = len(symbols)

    pi = np.zeros(n)
    n_sent = counts.sentence_count
    for j, tag in enumerate(frame.labels):
        pi[j] = counts.initial_tags.get(tag, 0) + add_k
    den = n_sent + add_k * n
    pi = pi / den if den > 0 else pi

    trans = np.zeros((n, n))
    for (a, b), c in counts.tag_bigrams.items():
        trans[frame.index(a), frame.index(b)] = c
    trans += add_k
    row = trans.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        trans = np.where(row > 0, trans / np.where(row > 0, row, 1.0), 0.0)

    sym_index = {s: i for i, s in enumerate(symbols)}
    emit = np.zeros((n, v))
    for (tag, tok), c in counts.emissions.items():
        emit[frame.index(tag), sym_index[tok]] = c
    emit += add_k
    row = emit.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        emit = np.where(row > 0, emit / np.where(row > 0, row, 1.0), 0.0)

    return Hmm1(frame, symbols, pi, trans, emit, add_k=add_k)


def estimate_hmm2(counts, add_k=0.001, lambda_mode="brants", emit2_min_count=2,
                  emit2_backoff=True):
    """Build a second-order model (interpolated trigram transitions)."""
    base = estimate_hmm1(counts, add_k=add_k)
    frame = base.frame
    n = len(frame)

    tri = np.zeros((n, n, n), dtype=np.int64)
    for (a, b, c), v in counts.tag_trigrams.items():
        tri[frame.index(a), frame.index(b), frame.index(c)] = v
    bi = np.zeros((n, n), dtype=np.int64)
    for (a, b), v in counts.tag_bigrams.items():
        bi[frame.index(a), frame.index(b)] = v
    uni = np.zeros(n, dtype=np.int64)
    for tag, v in counts.tag_unigrams.items():
        uni[frame.index(tag)] = v

    brants = None
    if lambda_mode == "brants":
        brants = lambdas_brants(counts)

    emit2_table = {}
    emit2_context = {}
    for (prev, tag, tok), c in counts.emissions2.items():
        key = (frame.index(prev), frame.index(tag))
        emit2_context[key] = emit2_context.get(key, 0) + c
    for (prev, tag, tok), c in counts.emissions2.items():
        key = (frame.index(prev), frame.index(tag))
        emit2_table.setdefault(key, {})[base.sym_index[tok]] = c
    for key, table in emit2_table.items():
        total = emit2_context[key]
        emit2_table[key] = {tok: c / total for tok, c in table.items()}

    return Hmm2(frame, base.symbols, base.pi, base.trans, base.emit,
                tri, bi, uni, counts.total_tokens,
                lambda_mode=lambda_mode, brants_lambdas=brants,
                emit2_table=emit2_table, emit2_context=emit2_context,
                emit2_min_count=emit2_min_count, emit2_backoff=emit2_backoff,
                add_k=add_k)


def lambdas_thede_harper(counts, i, j, k):
    """Per-context interpolation weights from log-scaled counts.

    Returns (l1, l2, l3) for trigram, bigram and unigram estimates; all
    three sum to 1 and a context with no observed counts yields
    (0.5, 0.25, 0.25).
    """
    c_jk = counts.tag_bigrams.get((j, k), 0)
    c_ijk = counts.tag_trigrams.get((i, j, k), 0)
    k2 = (math.log10(c_jk + 1) + 1) / (math.log10(c_jk + 1) + 2)
    k3 = (math.log10(c_ijk + 1) + 1) / (math.log10(c_ijk + 1) + 2)
    return k3, (1 - k3) * k2, (1 - k3) * (1 - k2)


def lambdas_brants(counts):
    """Globally tuned interpolation weights by deleted counting.

    Each observed trigram type votes its full count for whichever deleted
    relative-frequency estimate is largest; ties go to the lower order.
    """
    if not counts.tag_trigrams:
        raise NoTrigrams("no trigram counts (corpus shorter than 3 tokens?)")
    acc = [0.0, 0.0, 0.0]
    total = counts.total_tokens
    for (i, j, k), c in counts.tag_trigrams.items():
        c_ij = counts.tag_bigrams.get((i, j), 0)
        c_jk = counts.tag_bigrams.get((j, k), 0)
        c_j = counts.tag_unigrams.get(j, 0)
        c_k = counts.tag_unigrams.get(k, 0)
        est_tri = (c - 1) / (c_ij - 1) if c_ij > 1 else 0.0
        est_bi = (c_jk - 1) / (c_j - 1) if c_j > 1 else 0.0
        est_uni = (c_k - 1) / (total - 1) if total > 1 else 0.0
        if est_uni >= est_bi and est_uni >= est_tri:
            acc[2] += c
        elif est_bi >= est_tri:
            acc[1] += c
        else:
            acc[0] += c
    s = sum(acc)
    return (acc[0] / s, acc[1] / s, acc[2] / s)


def trigram_prob(h2, i, j, k):
    """Interpolated P(k | i, j) by tag label."""
    return float(h2.a2[_tag_index(h2.frame, i),
                       _tag_index(h2.frame, j),
                       _tag_index(h2.frame, k)])


def emission2(h2, k, j, o):
    """P(o | state k, previous state j) with first-order backoff."""
    return float(h2._emission2_by_index(
        _tag_index(h2.frame, k), _tag_index(h2.frame, j), h2.map_token(o)))


def _require_obs(obs):
    obs = list(obs)
    if not obs:
        raise EmptyObservation("empty observation sequence")
    return obs


def forward1(h, obs):
    """Log-space forward pass; returns (trellis, log-likelihood)."""
    idx = h.map_tokens(_require_obs(obs))
    log_b = h._log_emit[:, idx].T.copy()
    alpha, loglik = _backend.forward1(h._log_pi, h._log_trans, log_b)
    return ProbTrellis(order=1, scores=alpha), float(loglik)


def viterbi1(h, obs):
    """Best single path; ties break to the lowest state index."""
    idx = h.map_tokens(_require_obs(obs))
    log_b = h._log_emit[:, idx].T.copy()
    delta, psi = _backend.viterbi1(h._log_pi, h._log_trans, log_b)
    t_len = len(idx)
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = int(np.argmax(delta[-1]))
    for t in range(t_len - 2, -1, -1):
        path[t] = psi[t + 1, path[t + 1]]
    tags = [h.frame.labels[s] for s in path]
    return tags, ProbTrellis(order=1, scores=delta, psi=psi)


def _log_b2(h2, idx):
    t_len = len(idx)
    n = h2.n_states
    out = np.full((t_len, n, n), _NEG_INF)
    for t in range(2, t_len):
        mat = h2.emission2_matrix(int(idx[t]))
        out[t] = _safe_log(mat)
    return out


def forward2(h2, obs):
    """Second-order forward over state pairs; (trellis, log-likelihood)."""
    idx = h2.map_tokens(_require_obs(obs))
    log_b1 = h2._log_emit[:, idx].T.copy()
    if len(idx) == 1:
        alpha1 = h2._log_pi + log_b1[0]
        loglik = _backend.lse(alpha1)
        return ProbTrellis(order=2, scores=alpha1[np.newaxis, :]), float(loglik)
    log_b2 = _log_b2(h2, idx)
    alpha, loglik = _backend.forward2(h2._log_pi, h2._log_trans, log_b1,
                                      h2._log_a2, log_b2)
    return ProbTrellis(order=2, scores=alpha), float(loglik)


def viterbi2(h2, obs):
    """Best path under interpolated trigram transitions."""
    idx = h2.map_tokens(_require_obs(obs))
    log_b1 = h2._log_emit[:, idx].T.copy()
    t_len = len(idx)
    if t_len == 1:
        delta1 = h2._log_pi + log_b1[0]
        best = int(np.argmax(delta1))
        return [h2.frame.labels[best]], ProbTrellis(order=2, scores=delta1[np.newaxis, :])
    log_b2 = _log_b2(h2, idx)
    delta, psi = _backend.viterbi2(h2._log_pi, h2._log_trans, log_b1,
                                   h2._log_a2, log_b2)
    flat = int(np.argmax(delta[-1]))
    n = h2.n_states
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = flat % n
    path[-2] = flat // n
    for t in range(t_len - 3, -1, -1):
        path[t] = psi[t + 2, path[t + 1], path[t + 2]]
    tags = [h2.frame.labels[s] for s in path]
    return tags, ProbTrellis(order=2, scores=delta, psi=psi)
