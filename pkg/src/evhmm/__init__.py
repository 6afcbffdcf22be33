"""Sequence labeling with first and second order HMMs, in two paradigms.

The probabilistic side gives log-space forward and Viterbi decoders with
interpolation smoothing for the second order transition tensor.  The
evidential side lifts the same tables into belief mass functions over tag
sets and decodes by propagating commonalities, committing each step via the
pignistic transform.
"""

from .belief import (Commonality, Frame, MassFunction, PignisticDistribution,
                     bayesian_bba, commonality_to_mass, conjunctive_combine,
                     disjunctive_combine, gbt_bba_from_likelihoods,
                     implicability, inverse_pignistic_consonant,
                     mass_to_commonality, pignistic_transform, renormalize)
from .corpus import (CorpusCounts, ModelConfig, TaggedSentence, UNK,
                     accumulate_counts, load_model, parse_tagged_corpus,
                     save_model, serialize_tagged_corpus)
from .credal import (BeliefHmm1, BeliefHmm2, CredalTrellis, credal_forward1,
                     credal_forward2, credal_viterbi1, credal_viterbi2,
                     from_prob_hmm, observation_bba, pair_transition_bba)
from .errors import (AllZeroLikelihoods, EmptyCorpus, EmptyCounts,
                     EmptyObservation, EvhmmError, FormatError, FrameMismatch,
                     NoTrigrams, NotAMass, ParseError, TotalConflict,
                     VersionError)
from .prob import (Hmm1, Hmm2, ProbTrellis, emission2, estimate_hmm1,
                   estimate_hmm2, forward1, forward2, lambdas_brants,
                   lambdas_thede_harper, trigram_prob, viterbi1, viterbi2)

__version__ = "0.1.0"

__all__ = [
    "AllZeroLikelihoods", "BeliefHmm1", "BeliefHmm2", "Commonality",
    "CorpusCounts", "CredalTrellis", "EmptyCorpus", "EmptyCounts",
    "EmptyObservation", "EvhmmError", "FormatError", "Frame", "FrameMismatch",
    "Hmm1", "Hmm2", "MassFunction", "ModelConfig", "NoTrigrams", "NotAMass",
    "ParseError", "PignisticDistribution", "ProbTrellis", "TaggedSentence",
    "TotalConflict", "UNK", "VersionError", "accumulate_counts",
    "bayesian_bba", "commonality_to_mass", "conjunctive_combine",
    "credal_forward1", "credal_forward2", "credal_viterbi1",
    "credal_viterbi2", "disjunctive_combine", "emission2", "estimate_hmm1",
    "estimate_hmm2", "forward1", "forward2", "from_prob_hmm",
    "gbt_bba_from_likelihoods", "implicability", "inverse_pignistic_consonant",
    "lambdas_brants", "lambdas_thede_harper", "load_model",
    "mass_to_commonality", "observation_bba", "pair_transition_bba",
    "parse_tagged_corpus", "pignistic_transform", "renormalize", "save_model",
    "serialize_tagged_corpus", "trigram_prob", "viterbi1", "viterbi2",
]
