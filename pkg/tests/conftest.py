import io
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from evhmm import UNK, Frame, Hmm1, Hmm2
from evhmm.corpus import accumulate_counts, parse_tagged_corpus

settings.register_profile(
    "ci", deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every kernel once so jit compilation never lands in a timed test."""
    from evhmm import _backend
    n = 2
    v = np.array([0.25, 0.25, 0.25, 0.25])
    k = _backend.get_kernels(_backend.BACKEND)
    k["zeta_superset"](v.copy(), n)
    k["mobius_superset"](v.copy(), n)
    k["zeta_subset"](v.copy(), n)
    k["mobius_subset"](v.copy(), n)
    k["pignistic_num"](v.copy(), np.array([0, 1, 1, 2], dtype=np.int64), n)
    log_pi = np.log(np.array([0.6, 0.4]))
    log_a = np.log(np.array([[0.7, 0.3], [0.4, 0.6]]))
    log_b = np.log(np.full((3, 2), 0.5))
    k["forward1"](log_pi, log_a, log_b)
    k["viterbi1"](log_pi, log_a, log_b)
    log_a2 = np.log(np.full((2, 2, 2), 0.5))
    log_b2 = np.log(np.full((3, 2, 2), 0.5))
    k["forward2"](log_pi, log_a, log_b, log_a2, log_b2)
    k["viterbi2"](log_pi, log_a, log_b, log_a2, log_b2)


def random_mass_dict(rng, n, allow_empty=True):
    """Random sparse mass over a size-n frame, as a mask -> value dict."""
    space = 1 << n
    count = int(rng.integers(1, space + 1))
    lo = 0 if allow_empty else 1
    masks = rng.choice(np.arange(lo, space), size=min(count, space - lo),
                       replace=False)
    vals = rng.dirichlet(np.ones(len(masks)))
    return {int(a): float(v) for a, v in zip(masks, vals) if v > 0.0}


def random_rows(rng, rows, cols):
    return rng.dirichlet(np.ones(cols), size=rows)


def random_hmm1(rng, n=3, m=4, column_stochastic=False):
    """Random dense first-order model over tags t0.. and words w0..

    column_stochastic normalizes emission columns instead of rows, which
    makes per-token likelihood columns already sum to one.
    """
    frame = Frame([f"t{i}" for i in range(n)])
    symbols = tuple(f"w{i}" for i in range(m)) + (UNK,)
    pi = rng.dirichlet(np.ones(n))
    trans = random_rows(rng, n, n)
    emit = rng.uniform(0.05, 1.0, size=(n, m + 1))
    if column_stochastic:
        emit = emit / emit.sum(axis=0, keepdims=True)
    else:
        emit = emit / emit.sum(axis=1, keepdims=True)
    return Hmm1(frame, symbols, pi, trans, emit)


def random_hmm2(rng, n=3, m=4, column_stochastic=False):
    """Random second-order model with a dense random trigram tensor."""
    h = random_hmm1(rng, n, m, column_stochastic)
    tri = rng.integers(1, 50, size=(n, n, n))
    h2 = Hmm2(h.frame, h.symbols, h.pi, h.trans, h.emit,
              tri_counts=tri, bi_counts=tri.sum(axis=0),
              uni_counts=tri.sum(axis=(0, 1)),
              total_tokens=int(tri.sum()),
              lambda_mode="brants", brants_lambdas=(0.6, 0.3, 0.1))
    return h2


def pair_product_hmm2(rng, column_stochastic=True):
    """Random order-2 model whose trigram tensor equals the two-step
    product the belief pair conditional encodes, so both paradigms share
    identical dynamics."""
    from evhmm.prob import _safe_log
    h = random_hmm1(rng, n=3, m=4, column_stochastic=column_stochastic)
    ones = np.ones((3, 3, 3), dtype=np.int64)
    h2 = Hmm2(h.frame, h.symbols, h.pi, h.trans, h.emit,
              tri_counts=ones, bi_counts=ones.sum(axis=0),
              uni_counts=ones.sum(axis=(0, 1)), total_tokens=27,
              brants_lambdas=(1.0, 0.0, 0.0))
    h2.trigram_hat = np.einsum("ik,jk->ijk", h.trans @ h.trans, h.trans)
    h2.a2 = h2._interpolated_tensor()
    h2._log_a2 = _safe_log(h2.a2)
    return h2


def counts_from_text(text, unk_threshold=1):
    return accumulate_counts(parse_tagged_corpus(io.StringIO(text)),
                             unk_threshold=unk_threshold)


def cycle_corpus(copies=10):
    """Deterministic three-tag cycle; every decoder should nail it."""
    sent = "u\tX\nv\tY\nw\tZ\nu\tX\nv\tY\nw\tZ"
    return "\n\n".join([sent] * copies) + "\n"


def ambiguous_corpus():
    """Second-order-decidable fixture.

    The word t is emitted by tags Q and S with identical relative
    frequency.  After the bigram (R, M) the gold tag is S, but the
    one-step table prefers Q; only two-step context recovers S.
    """
    s1 = "p\tP\nm\tM\nt\tQ"
    s2 = "r\tR\nm\tM\nt\tS"
    s3 = "r\tR\nn\tN\nt\tS"
    return "\n\n".join([s1] * 4 + [s2] * 2 + [s3] * 3) + "\n"


def lambda_corpus():
    """Tag Y continues two different ways; trigram context separates them."""
    sent = "a\tX\nb\tY\nc\tZ\nd\tY\ne\tW"
    return "\n\n".join([sent] * 10) + "\n"


def run_cli(argv):
    """Call the CLI in-process; returns (exit code, stdout, stderr)."""
    from evhmm.cli import main
    out, err = io.StringIO(), io.StringIO()
    old = sys.stdout, sys.stderr
    sys.stdout, sys.stderr = out, err
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
    finally:
        sys.stdout, sys.stderr = old
    return code, out.getvalue(), err.getvalue()


def second_order_chain_corpus(seed, n_train=200, n_test=50):
    """Synthetic corpus whose tag process is genuinely two-step.

    Three tags on a noisy forward cycle, twelve word types.  The trigram
    law depends on the shape of the last transition, not just the last
    tag: after a two-step skip the chain tends to stay put, and after a
    stay it resumes the cycle harder than the bigram average.  Per tag,
    three word types are near-unambiguous and one is a contest word
    shared with the next tag at odds mild enough that transition context
    decides it.
    """
    rng = np.random.default_rng(seed)
    tags = ["A", "B", "C"]
    words = [f"w{i:02d}" for i in range(12)]
    adv, tail2, sas, resume, q, rc = 0.60, 0.25, 0.85, 0.85, 0.06, 2.3
    start = np.zeros((3, 3))
    tri = np.zeros((3, 3, 3))
    for j in range(3):
        start[j, j] = 0.15
        start[j, (j + 1) % 3] = adv
        start[j, (j + 2) % 3] = tail2
    for i in range(3):
        for j in range(3):
            if j == (i + 2) % 3:  # skip history: likely to stay put
                tri[i, j, j] = sas
                tri[i, j, (j + 1) % 3] = (1 - sas) * 0.75
                tri[i, j, (j + 2) % 3] = (1 - sas) * 0.25
            elif i == j:  # after a stay: resume the cycle
                tri[i, j, (j + 1) % 3] = resume
                tri[i, j, j] = (1 - resume) * 0.4
                tri[i, j, (j + 2) % 3] = (1 - resume) * 0.6
            else:  # plain advance history
                tri[i, j, (j + 1) % 3] = adv
                tri[i, j, j] = 0.15
                tri[i, j, (j + 2) % 3] = tail2
    # words 3u..3u+2 belong to tag u; word 9+u is contested between
    # u (strong side) and u+1 (weak side)
    emit = np.full((3, 12), 0.001)
    for u in range(3):
        for d in range(3):
            emit[u, 3 * u + d] = (1.0 - q * rc - q) / 3
        emit[u, 9 + u] = q * rc
        emit[(u + 1) % 3, 9 + u] = q
    emit = emit / emit.sum(axis=1, keepdims=True)

    def draw_sentence():
        length = int(rng.integers(8, 13))
        t1 = int(rng.integers(3))
        t2 = int(rng.choice(3, p=start[t1]))
        seq = [t1, t2]
        while len(seq) < length:
            seq.append(int(rng.choice(3, p=tri[seq[-2], seq[-1]])))
        pairs = []
        for t in seq:
            w = int(rng.choice(12, p=emit[t]))
            pairs.append((words[w], tags[t]))
        return pairs

    def block(pairs):
        return "\n".join(f"{w}\t{t}" for w, t in pairs)

    train = "\n\n".join(block(draw_sentence()) for _ in range(n_train)) + "\n"
    test = "\n\n".join(block(draw_sentence()) for _ in range(n_test)) + "\n"
    return train, test
