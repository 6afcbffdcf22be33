"""End-to-end release gate.

Each test exercises one shipped guarantee at its stated tolerance and
prints a single PASS/FAIL line (visible under ``pytest -v -s``).  Checks
accumulate their worst observed error and report once at the end, so a
FAIL line always carries the measured number that broke the bound.
"""

import io
import time

import numpy as np

import conftest
import oracles
from evhmm import (Frame, MassFunction, ModelConfig, PignisticDistribution,
                   accumulate_counts, commonality_to_mass, conjunctive_combine,
                   credal_forward1, credal_forward2, disjunctive_combine,
                   estimate_hmm2, forward1, forward2, from_prob_hmm,
                   inverse_pignistic_consonant, lambdas_brants,
                   lambdas_thede_harper, load_model, mass_to_commonality,
                   parse_tagged_corpus, pignistic_transform, save_model,
                   serialize_tagged_corpus, trigram_prob, viterbi1, viterbi2)


def _report(num, name, ok, detail=""):
    tail = f" ({detail})" if detail else ""
    line = f"check {num} {name}: {'PASS' if ok else 'FAIL'}{tail}"
    print(line)
    assert ok, line


def _pairs(sentences):
    return [[(tok, tag) for tok, tag in s] for s in sentences]


def test_01_set_calculus_matches_enumeration():
    """Mass/commonality roundtrip and both combination rules agree with a
    brute-force pass over every focal pair, on 1000 random mass functions."""
    rng = np.random.default_rng(2026)
    t0 = time.perf_counter()
    worst_rt, worst_comb = 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        f = Frame([f"s{i}" for i in range(n)])
        d1 = conftest.random_mass_dict(rng, n)
        d2 = conftest.random_mass_dict(rng, n)
        m1, m2 = MassFunction(f, d1), MassFunction(f, d2)
        back = commonality_to_mass(mass_to_commonality(m1))
        for a in range(f.num_subsets):
            worst_rt = max(worst_rt, abs(back[a] - m1[a]))
        conj = conjunctive_combine(m1, m2)
        disj = disjunctive_combine(m1, m2)
        want_c = oracles.naive_conjunctive(d1, d2)
        want_d = oracles.naive_disjunctive(d1, d2)
        for a in range(f.num_subsets):
            worst_comb = max(worst_comb, abs(conj[a] - want_c.get(a, 0.0)))
            worst_comb = max(worst_comb, abs(disj[a] - want_d.get(a, 0.0)))
    elapsed = time.perf_counter() - t0
    ok = worst_rt <= 1e-12 and worst_comb <= 1e-12 and elapsed < 5.0
    _report(1, "set calculus vs enumeration", ok,
            f"roundtrip {worst_rt:.1e}, combine {worst_comb:.1e}, {elapsed:.1f}s")


def test_02_pignistic_transform_identities():
    """BetP of any bba is a proper distribution, and the least-committed
    consonant inverse is a true right inverse, on 1000 random draws."""
    rng = np.random.default_rng(2027)
    worst_sum, worst_inv = 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        f = Frame([f"s{i}" for i in range(n)])
        d = conftest.random_mass_dict(rng, n)
        if d.get(0, 0.0) < 1.0 - 1e-9:  # transform undefined at total conflict
            betp = pignistic_transform(MassFunction(f, d))
            worst_sum = max(worst_sum, abs(betp.probs.sum() - 1.0))
        p = rng.uniform(0.01, 1.0, size=n)
        p = p / p.sum()
        dist = PignisticDistribution(f, p)
        back = pignistic_transform(inverse_pignistic_consonant(dist))
        worst_inv = max(worst_inv, float(np.abs(back.probs - p).max()))
    ok = worst_sum <= 1e-9 and worst_inv <= 1e-9
    _report(2, "pignistic identities", ok,
            f"sum {worst_sum:.1e}, invert {worst_inv:.1e}")


def test_03_decoders_match_exhaustive_search():
    """Both Viterbi orders return the exact best path and both forward
    passes the exact path-sum, against full path enumeration, on 100
    random models per order (3 tags, 5 tokens)."""
    rng = np.random.default_rng(2028)
    t0 = time.perf_counter()
    paths_ok, worst_ll = True, 0.0
    for _ in range(100):
        h = conftest.random_hmm1(rng, n=3, m=4)
        obs_idx = rng.integers(0, 4, size=5)
        toks = [f"w{i}" for i in obs_idx]
        want_path, _, want_total = oracles.enumerate_order1(
            h.pi, h.trans, h.emit, obs_idx)
        tags, _ = viterbi1(h, toks)
        paths_ok &= [h.frame.index(t) for t in tags] == want_path
        _, ll = forward1(h, toks)
        worst_ll = max(worst_ll, abs(ll - np.log(want_total)))

        h2 = conftest.random_hmm2(rng, n=3, m=4)
        obs_idx = rng.integers(0, 4, size=5)
        toks = [f"w{i}" for i in obs_idx]
        e2 = lambda k, j, o: h2._emission2_by_index(k, j, o)
        want_path, _, want_total = oracles.enumerate_order2(
            h2.pi, h2.trans, h2.emit, h2.a2, obs_idx, e2)
        tags, _ = viterbi2(h2, toks)
        paths_ok &= [h2.frame.index(t) for t in tags] == want_path
        _, ll = forward2(h2, toks)
        worst_ll = max(worst_ll, abs(ll - np.log(want_total)))
    elapsed = time.perf_counter() - t0
    ok = paths_ok and worst_ll <= 1e-10 and elapsed < 30.0
    _report(3, "decoders vs exhaustive search", ok,
            f"paths exact {paths_ok}, loglik {worst_ll:.1e}, {elapsed:.1f}s")


def test_04_bayesian_credal_forward_reduces_to_prob():
    """With purely Bayesian bbas and column-normalized emissions, the
    singleton commonalities of the credal forward pass equal the
    probabilistic forward variables, both orders, 50 models each."""
    rng = np.random.default_rng(2029)
    worst = 0.0
    for _ in range(50):
        h = conftest.random_hmm1(rng, n=3, m=4, column_stochastic=True)
        bh = from_prob_hmm(h, "bayesian")
        toks = [f"w{i}" for i in rng.integers(0, 4, size=6)]
        trellis = credal_forward1(bh, toks)
        alpha = forward1(h, toks)[0].scores
        for t, q in enumerate(trellis.q_alpha):
            singles = np.array([q[1 << k] for k in range(3)])
            worst = max(worst, float(np.abs(singles - np.exp(alpha[t])).max()))

        h2 = conftest.pair_product_hmm2(rng)
        bh2 = from_prob_hmm(h2, "bayesian")
        toks = [f"w{i}" for i in rng.integers(0, 4, size=6)]
        trellis = credal_forward2(bh2, toks)
        alpha = forward2(h2, toks)[0].scores
        for t, q in enumerate(trellis.q_alpha):
            singles = np.array([q[1 << k] for k in range(3)])
            if t == 0:
                want = np.exp(alpha[0].diagonal())
            else:
                want = np.exp(alpha[t]).sum(axis=0)
            worst = max(worst, float(np.abs(singles - want).max()))
    _report(4, "bayesian reduction of credal forward", ok=worst <= 1e-10,
            detail=f"max err {worst:.1e}")


def test_05_deterministic_corpus_tagged_perfectly(tmp_path):
    """On an unambiguous corpus every one of the four decoders reproduces
    the gold tags exactly, going through the command line."""
    text = conftest.cycle_corpus()
    train = tmp_path / "train.tsv"
    train.write_text(text)
    model = tmp_path / "model.ev"
    code, _, err = conftest.run_cli(
        ["train", str(train), str(model), "--add-k", "0"])
    assert code == 0, err

    gold = tmp_path / "gold.tsv"
    gold.write_text(text)
    code, out, err = conftest.run_cli(["compare", str(model), str(gold)])
    assert code == 0, err
    table = {row.split("\t")[0]: row.split("\t")[1]
             for row in out.splitlines()[1:]}
    table_ok = all(table[d] == "1.0000"
                   for d in ("prob-1", "prob-2", "belief-1", "belief-2"))

    gold_sents = parse_tagged_corpus(io.StringIO(text))
    plain = tmp_path / "plain.txt"
    plain.write_text(
        "\n".join(" ".join(tok for tok, _ in s) for s in gold_sents) + "\n")
    tags_ok = True
    for paradigm in ("prob", "belief"):
        for order in ("1", "2"):
            code, out, err = conftest.run_cli(
                ["tag", str(model), str(plain),
                 "--paradigm", paradigm, "--order", order])
            assert code == 0, err
            tags_ok &= _pairs(parse_tagged_corpus(io.StringIO(out))) == _pairs(gold_sents)
    _report(5, "deterministic corpus tagged perfectly",
            table_ok and tags_ok,
            f"table {table_ok}, tags exact {tags_ok}")


def test_06_interpolation_weight_arithmetic():
    """Fallback weights are exact at zero counts, corpus-level weights sum
    to one, and every seen two-tag context yields a proper next-tag
    distribution."""
    counts = conftest.counts_from_text("a\tX\nb\tY\n")
    fallback_ok = lambdas_thede_harper(counts, "X", "X", "X") == (0.5, 0.25, 0.25)

    fixtures = [conftest.cycle_corpus(), conftest.ambiguous_corpus(),
                conftest.lambda_corpus(),
                conftest.second_order_chain_corpus(0)[0],
                conftest.second_order_chain_corpus(1)[0]]
    worst_sum, worst_row = 0.0, 0.0
    for text in fixtures:
        counts = conftest.counts_from_text(text)
        l1, l2, l3 = lambdas_brants(counts)
        worst_sum = max(worst_sum, abs(l1 + l2 + l3 - 1.0))
        h2 = estimate_hmm2(counts, add_k=0.001, lambda_mode="brants")
        contexts = {(i, j) for (i, j, _) in counts.tag_trigrams}
        for i, j in contexts:
            row = sum(trigram_prob(h2, i, j, k) for k in counts.tags)
            worst_row = max(worst_row, abs(row - 1.0))
    ok = fallback_ok and worst_sum <= 1e-12 and worst_row <= 1e-9
    _report(6, "interpolation weight arithmetic", ok,
            f"fallback exact {fallback_ok}, sum {worst_sum:.1e}, row {worst_row:.1e}")


def test_07_second_order_beats_first_order(tmp_path):
    """Across 20 seeded corpora with genuinely two-step tag dynamics, the
    mean order-2 accuracy strictly exceeds order-1 in both paradigms,
    measured through the command-line compare table."""
    t0 = time.perf_counter()
    acc = {"prob-1": [], "prob-2": [], "belief-1": [], "belief-2": []}
    for seed in range(20):
        train_text, test_text = conftest.second_order_chain_corpus(seed)
        train = tmp_path / f"train{seed}.tsv"
        train.write_text(train_text)
        gold = tmp_path / f"gold{seed}.tsv"
        gold.write_text(test_text)
        model = tmp_path / f"model{seed}.ev"
        code, _, err = conftest.run_cli(["train", str(train), str(model)])
        assert code == 0, err
        code, out, err = conftest.run_cli(["compare", str(model), str(gold)])
        assert code == 0, err
        for row in out.splitlines()[1:]:
            name, overall = row.split("\t")[:2]
            acc[name].append(float(overall))
    elapsed = time.perf_counter() - t0
    mean = {k: float(np.mean(v)) for k, v in acc.items()}
    ok = (mean["prob-2"] > mean["prob-1"]
          and mean["belief-2"] > mean["belief-1"]
          and elapsed < 60.0)
    _report(7, "order 2 beats order 1 on both paradigms", ok,
            f"prob {mean['prob-1']:.4f}->{mean['prob-2']:.4f}, "
            f"belief {mean['belief-1']:.4f}->{mean['belief-2']:.4f}, "
            f"{elapsed:.1f}s")


def test_08_persistence_roundtrips_are_exact(tmp_path):
    """Corpus text survives parse/serialize/parse untouched, and a model
    file survives save/load/save byte for byte."""
    fixtures = [conftest.cycle_corpus(), conftest.ambiguous_corpus(),
                conftest.lambda_corpus(),
                conftest.second_order_chain_corpus(0)[0]]
    corpus_ok, model_ok = True, True
    for idx, text in enumerate(fixtures):
        sents = parse_tagged_corpus(io.StringIO(text))
        again = parse_tagged_corpus(io.StringIO(serialize_tagged_corpus(sents)))
        corpus_ok &= _pairs(sents) == _pairs(again)

        counts = accumulate_counts(sents, unk_threshold=2)
        cfg = ModelConfig(unk_threshold=2, add_k=0.25, lambda_mode="brants")
        first = tmp_path / f"m{idx}a.ev"
        second = tmp_path / f"m{idx}b.ev"
        save_model(counts, cfg, str(first))
        counts2, cfg2 = load_model(str(first))
        save_model(counts2, cfg2, str(second))
        model_ok &= first.read_bytes() == second.read_bytes()
    _report(8, "persistence roundtrips", corpus_ok and model_ok,
            f"corpus {corpus_ok}, model {model_ok}")
