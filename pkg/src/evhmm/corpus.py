"""Corpus ingestion, count extraction, and model-file persistence.

Corpus format: two-column UTF-8 text, one ``token<TAB>tag`` per line, blank
line between sentences.  Model files are sectioned plain text holding the
raw integer counts (the only trained artifact) plus the training
configuration; probabilities are always re-derived from counts at tag time.
"""

import re
from dataclasses import dataclass

from .errors import EmptyCorpus, FormatError, ParseError, VersionError

UNK = "<UNK>"

MODEL_HEADER = "EVHMM 1"

_SECTIONS = (
    "tags",
    "vocab",
    "initial",
    "unigram",
    "bigram",
    "trigram",
    "emission",
    "emission2",
    "config",
)


@dataclass
class TaggedSentence:
    """One sentence as a sequence of (surface, tag) pairs."""

    tokens: list

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def surfaces(self):
        return [tok for tok, _ in self.tokens]

    def tags(self):
        return [tag for _, tag in self.tokens]


@dataclass
class CorpusCounts:
    """Integer n-gram and emission counts extracted from a tagged corpus.

    ``tags`` preserves first-seen order (it fixes the frame's label order
    and therefore every index tie rule downstream).  ``vocab`` maps the
    kept surface forms to their corpus frequencies, with ``<UNK>`` holding
    the number of replaced token occurrences.
    """

    tags: tuple
    vocab: dict
    initial_tags: dict
    tag_unigrams: dict
    tag_bigrams: dict
    tag_trigrams: dict
    emissions: dict
    emissions2: dict
    total_tokens: int

    @property
    def sentence_count(self):
        return sum(self.initial_tags.values())


@dataclass
class ModelConfig:
    """Training configuration echoed through the model file."""

    unk_threshold: int = 1
    add_k: float = 0.001
    lambda_mode: str = "brants"


def parse_tagged_corpus(stream):
    """Parse two-column tagged text into a list of sentences.

    ``stream`` is an iterable of lines.  Raises ParseError with the 1-based
    line number for a line without a tab, an empty token, or an empty tag.
    """
    sentences = []
    current = []
    lineno = 0
    for raw in stream:
        lineno += 1
        line = raw.rstrip("\n")
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            if current:
                sentences.append(TaggedSentence(current))
                current = []
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            reason = "missing tab" if len(parts) < 2 else "more than one tab"
            raise ParseError(lineno, reason)
        token, tag = parts
        if not token:
            raise ParseError(lineno, "empty token")
        if not tag:
            raise ParseError(lineno, "empty tag")
        current.append((token, tag))
    if current:
        sentences.append(TaggedSentence(current))
    return sentences


def serialize_tagged_corpus(sentences):
    """Inverse of parse_tagged_corpus (modulo trailing blank line)."""
    blocks = []
    for sent in sentences:
        blocks.append("\n".join(f"{tok}\t{tag}" for tok, tag in sent))
    return "\n\n".join(blocks) + "\n"


def accumulate_counts(corpus, unk_threshold=1):
    """Extract all count tables from a parsed corpus.

    Surface forms whose total corpus frequency is <= unk_threshold are
    replaced by the reserved ``<UNK>`` symbol before emission counting.
    Tag n-grams never cross sentence boundaries.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("no sentences")

    freq = {}
    for sent in corpus:
        for tok, _ in sent:
            freq[tok] = freq.get(tok, 0) + 1

    vocab = {}
    unk_count = 0
    for tok, c in freq.items():
        if c > unk_threshold:
            vocab[tok] = c
        else:
            unk_count += c
    vocab[UNK] = unk_count

    tags = []
    seen_tags = set()
    initial = {}
    unigrams = {}
    bigrams = {}
    trigrams = {}
    emissions = {}
    emissions2 = {}
    total = 0

    for sent in corpus:
        mapped = [(tok if tok in vocab and tok != UNK else UNK, tag) for tok, tag in sent]
        # a literal "<UNK>" surface is folded into the UNK bucket by the test above
        for i, (tok, tag) in enumerate(mapped):
            if tag not in seen_tags:
                seen_tags.add(tag)
                tags.append(tag)
            total += 1
            unigrams[tag] = unigrams.get(tag, 0) + 1
            emissions[(tag, tok)] = emissions.get((tag, tok), 0) + 1
            if i == 0:
                initial[tag] = initial.get(tag, 0) + 1
            else:
                prev = mapped[i - 1][1]
                bigrams[(prev, tag)] = bigrams.get((prev, tag), 0) + 1
                emissions2[(prev, tag, tok)] = emissions2.get((prev, tag, tok), 0) + 1
                if i >= 2:
                    prev2 = mapped[i - 2][1]
                    key = (prev2, prev, tag)
                    trigrams[key] = trigrams.get(key, 0) + 1

    return CorpusCounts(
        tags=tuple(tags),
        vocab=vocab,
        initial_tags=initial,
        tag_unigrams=unigrams,
        tag_bigrams=bigrams,
        tag_trigrams=trigrams,
        emissions=emissions,
        emissions2=emissions2,
        total_tokens=total,
    )


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------

_escape_re = re.compile(r"[%\s]")
_unescape_re = re.compile(r"%([0-9A-Fa-f]{2})")


def escape_label(label):
    """Percent-escape whitespace (and %) so labels are space-safe."""
    return _escape_re.sub(lambda m: f"%{ord(m.group(0)):02X}", label)


def unescape_label(text):
    return _unescape_re.sub(lambda m: chr(int(m.group(1), 16)), text)


def save_model(counts, config, path):
    """Write counts and configuration as sectioned plain text."""
    lines = [MODEL_HEADER]

    lines.append("[tags]")
    for tag in counts.tags:
        lines.append(escape_label(tag))

    lines.append("[vocab]")
    for tok, c in counts.vocab.items():
        lines.append(f"{escape_label(tok)} {c}")

    lines.append("[initial]")
    for tag, c in counts.initial_tags.items():
        lines.append(f"{escape_label(tag)} {c}")

    lines.append("[unigram]")
    for tag, c in counts.tag_unigrams.items():
        lines.append(f"{escape_label(tag)} {c}")

    lines.append("[bigram]")
    for (a, b), c in counts.tag_bigrams.items():
        lines.append(f"{escape_label(a)} {escape_label(b)} {c}")

    lines.append("[trigram]")
    for (a, b, d), c in counts.tag_trigrams.items():
        lines.append(f"{escape_label(a)} {escape_label(b)} {escape_label(d)} {c}")

    lines.append("[emission]")
    for (tag, tok), c in counts.emissions.items():
        lines.append(f"{escape_label(tag)} {escape_label(tok)} {c}")

    lines.append("[emission2]")
    for (prev, tag, tok), c in counts.emissions2.items():
        lines.append(f"{escape_label(prev)} {escape_label(tag)} {escape_label(tok)} {c}")

    lines.append("[config]")
    lines.append(f"unk_threshold {config.unk_threshold}")
    lines.append(f"add_k {config.add_k!r}")
    lines.append(f"lambda_mode {config.lambda_mode}")

    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _parse_int(value, section, lineno):
    if not re.fullmatch(r"-?\d+", value):
        raise FormatError(section, lineno, f"expected integer, got {value!r}")
    return int(value)


def load_model(path):
    """Read a model file back into (CorpusCounts, ModelConfig).

    load(save(x)) reproduces the counts bit-exactly, including table order.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    if not lines:
        raise VersionError("empty file, missing header")
    if lines[0] != MODEL_HEADER:
        raise VersionError(f"unknown header {lines[0]!r}")

    sections = {name: [] for name in _SECTIONS}
    seen = []
    current = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name not in sections:
                raise FormatError(name, lineno, "unknown section")
            if name in seen:
                raise FormatError(name, lineno, "duplicate section")
            seen.append(name)
            current = name
            continue
        if current is None:
            raise FormatError("header", lineno, "record before first section")
        sections[current].append((lineno, line))

    missing = [name for name in _SECTIONS if name not in seen]
    if missing:
        raise FormatError(missing[0], len(lines), "section missing (truncated file?)")

    def records(name, nfields):
        out = []
        for lineno, line in sections[name]:
            parts = line.split(" ")
            if len(parts) != nfields:
                raise FormatError(name, lineno, f"expected {nfields} fields, got {len(parts)}")
            out.append((lineno, parts))
        return out

    tags = tuple(unescape_label(line) for _, line in sections["tags"])

    vocab = {}
    for lineno, parts in records("vocab", 2):
        vocab[unescape_label(parts[0])] = _parse_int(parts[1], "vocab", lineno)

    initial = {}
    for lineno, parts in records("initial", 2):
        initial[unescape_label(parts[0])] = _parse_int(parts[1], "initial", lineno)

    unigrams = {}
    for lineno, parts in records("unigram", 2):
        unigrams[unescape_label(parts[0])] = _parse_int(parts[1], "unigram", lineno)

    bigrams = {}
    for lineno, parts in records("bigram", 3):
        key = (unescape_label(parts[0]), unescape_label(parts[1]))
        bigrams[key] = _parse_int(parts[2], "bigram", lineno)

    trigrams = {}
    for lineno, parts in records("trigram", 4):
        key = tuple(unescape_label(p) for p in parts[:3])
        trigrams[key] = _parse_int(parts[3], "trigram", lineno)

    emissions = {}
    for lineno, parts in records("emission", 3):
        key = (unescape_label(parts[0]), unescape_label(parts[1]))
        emissions[key] = _parse_int(parts[2], "emission", lineno)

    emissions2 = {}
    for lineno, parts in records("emission2", 4):
        key = tuple(unescape_label(p) for p in parts[:3])
        emissions2[key] = _parse_int(parts[3], "emission2", lineno)

    config = ModelConfig()
    for lineno, parts in records("config", 2):
        key, value = parts
        if key == "unk_threshold":
            config.unk_threshold = _parse_int(value, "config", lineno)
        elif key == "add_k":
            try:
                config.add_k = float(value)
            except ValueError:
                raise FormatError("config", lineno, f"bad add_k {value!r}") from None
        elif key == "lambda_mode":
            if value not in ("brants", "thede"):
                raise FormatError("config", lineno, f"bad lambda_mode {value!r}")
            config.lambda_mode = value
        else:
            raise FormatError("config", lineno, f"unknown config key {key!r}")

    counts = CorpusCounts(
        tags=tags,
        vocab=vocab,
        initial_tags=initial,
        tag_unigrams=unigrams,
        tag_bigrams=bigrams,
        tag_trigrams=trigrams,
        emissions=emissions,
        emissions2=emissions2,
        total_tokens=sum(unigrams.values()),
    )
    return counts, config
