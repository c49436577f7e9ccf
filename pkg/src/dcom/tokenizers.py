"""Character, whitespace-word, and WordPiece tokenizers over a shared vocabulary.

All three kinds share the reserved ids [PAD]=0, [UNK]=1, [SEP]=2.  The
separator text produced by the augmentation stage always maps to the single
[SEP] id.  Vocabulary files are UTF-8, one token per line, line number = id,
so standard pretrained WordPiece vocabularies load directly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import SEP_TEXT, SEP_TOKEN
from .errors import ConfigError

PAD, UNK, SEP = "[PAD]", "[UNK]", "[SEP]"
RESERVED = (PAD, UNK, SEP)
PAD_ID, UNK_ID, SEP_ID = 0, 1, 2

KINDS = ("char", "word", "wordpiece")


@dataclass(frozen=True)
class Vocabulary:
    kind: str
    tokens: tuple[str, ...]
    index: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown tokenizer kind {self.kind!r}")
        if self.tokens[:3] != RESERVED:
            raise ConfigError("vocabulary must start with [PAD], [UNK], [SEP]")
        if len(set(self.tokens)) != len(self.tokens):
            raise ConfigError("duplicate tokens in vocabulary")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for token in self.tokens:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path, kind="wordpiece"):
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh)
        return cls(kind=kind, tokens=tokens)


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray
    attention_mask: np.ndarray
    max_len: int

    @property
    def length(self) -> int:
        return int(self.attention_mask.sum())


# ---------------------------------------------------------------------------
# Vocabulary construction


def _iter_words(corpus):
    for text in corpus:
        for word in text.split():
            if word != SEP_TOKEN:
                yield word


def _train_wordpiece(word_freqs: Counter, budget: int) -> list[str]:
    """Greedy pair-merge WordPiece training.

    Words start as character splits (continuations prefixed "##"); the
    highest-scoring adjacent pair (pair frequency over the product of part
    frequencies) is merged until the budget is reached or no pairs remain.
    """
    splits = {w: [w[0]] + ["##" + c for c in w[1:]] for w in word_freqs}
    alphabet = sorted({piece for parts in splits.values() for piece in parts})
    vocab = list(alphabet)
    while len(vocab) + len(RESERVED) < budget:
        part_freq: Counter = Counter()
        pair_freq: Counter = Counter()
        for word, freq in word_freqs.items():
            parts = splits[word]
            for part in parts:
                part_freq[part] += freq
            for a, b in zip(parts, parts[1:]):
                pair_freq[(a, b)] += freq
        if not pair_freq:
            break
        best = max(
            pair_freq,
            key=lambda p: (pair_freq[p] / (part_freq[p[0]] * part_freq[p[1]]), p),
        )
        a, b = best
        merged = a + b[2:]
        for word, parts in splits.items():
            out = []
            i = 0
            while i < len(parts):
                if i + 1 < len(parts) and parts[i] == a and parts[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(parts[i])
                    i += 1
            splits[word] = out
        vocab.append(merged)
    return vocab


def build_vocab(corpus, kind: str, size_budget: int = 8000) -> Vocabulary:
    """Learn a vocabulary of at most size_budget tokens from an iterable of texts."""
    if kind not in KINDS:
        raise ConfigError(f"unknown tokenizer kind {kind!r}")
    texts = [t.replace(SEP_TEXT, " ") for t in corpus]
    if not texts:
        raise ConfigError("empty corpus")
    if kind == "char":
        counts = Counter(ch for t in texts for ch in t)
        if size_budget < len(RESERVED) + len(counts):
            raise ConfigError(
                f"budget {size_budget} below reserved + alphabet size {len(RESERVED) + len(counts)}"
            )
        learned = [c for c, _ in counts.most_common()]
    elif kind == "word":
        counts = Counter(_iter_words(texts))
        learned = [w for w, _ in counts.most_common(size_budget - len(RESERVED))]
    else:
        word_freqs = Counter(_iter_words(texts))
        alphabet_size = len({c for w in word_freqs for c in w})
        if size_budget < len(RESERVED) + alphabet_size:
            raise ConfigError(
                f"budget {size_budget} below reserved + alphabet size {len(RESERVED) + alphabet_size}"
            )
        learned = _train_wordpiece(word_freqs, size_budget)
    return Vocabulary(kind=kind, tokens=RESERVED + tuple(learned))


# ---------------------------------------------------------------------------
# Encoding


def _wordpiece_word(vocab: Vocabulary, word: str) -> list[int]:
    # Greedy longest-match-first; a word with any unmatched piece becomes [UNK].
    ids = []
    start = 0
    while start < len(word):
        end = len(word)
        piece_id = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = "##" + piece
            if piece in vocab.index:
                piece_id = vocab.index[piece]
                break
            end -= 1
        if piece_id is None:
            return [UNK_ID]
        ids.append(piece_id)
        start = end
    return ids


def _encode_segment(vocab: Vocabulary, segment: str) -> list[int]:
    if vocab.kind == "char":
        return [vocab.index.get(c, UNK_ID) for c in segment]
    ids = []
    for word in segment.split():
        if word == SEP_TOKEN:
            ids.append(SEP_ID)
        elif vocab.kind == "word":
            ids.append(vocab.index.get(word, UNK_ID))
        else:
            ids.extend(_wordpiece_word(vocab, word))
    return ids


def encode(vocab: Vocabulary, text: str, max_len: int) -> TokenSequence:
    """Encode one text to a fixed-length, padded, masked id sequence."""
    ids: list[int] = []
    for i, segment in enumerate(text.split(SEP_TEXT)):
        if i > 0:
            ids.append(SEP_ID)
        ids.extend(_encode_segment(vocab, segment))
    ids = ids[:max_len]
    mask = [1] * len(ids) + [0] * (max_len - len(ids))
    ids = ids + [PAD_ID] * (max_len - len(ids))
    return TokenSequence(
        ids=np.asarray(ids, dtype=np.int64),
        attention_mask=np.asarray(mask, dtype=np.int64),
        max_len=max_len,
    )


def decode(vocab: Vocabulary, seq: TokenSequence) -> str:
    """Best-effort inverse of encode, used for inspection and round-trip tests."""
    tokens = [vocab.tokens[i] for i, m in zip(seq.ids, seq.attention_mask) if m]
    if vocab.kind == "char":
        return "".join(SEP_TEXT if t == SEP else t for t in tokens)
    out: list[str] = []
    for token in tokens:
        if token == SEP:
            out.append(SEP_TOKEN)
        elif token.startswith("##") and out:
            out[-1] += token[2:]
        else:
            out.append(token)
    return " ".join(out)
