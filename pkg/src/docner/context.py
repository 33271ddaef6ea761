"""Per-sentence document-level context assembly.

Each sentence to tag is flanked by up to `window` subtokens of left and
right context drawn from neighboring sentences. With boundary enforcement
the context stops at the sentence's own document; without it, context
continues into adjacent documents in corpus order (the boundary itself
contributes no subtokens). The assembled transformer input is always

    [BOS] + left_ids + core_ids + right_ids + [EOS]

and contexts may cut neighboring sentences mid-way.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import Document, Sentence
from .tokenizer import SubwordEncoding, SubwordVocab, encode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContextConfig:
    window: int = 64
    enforce_boundaries: bool = False

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("context window must be >= 0")


@dataclass
class ContextualizedSentence:
    """Core sentence subtokens plus flanking context and offset bookkeeping."""

    left_ids: list[int]
    core: SubwordEncoding
    right_ids: list[int]
    core_start: int  # offset of the first core subtoken in the assembled input
    bos_id: int
    eos_id: int

    def assembled_ids(self) -> list[int]:
        return ([self.bos_id] + self.left_ids + self.core.ids
                + self.right_ids + [self.eos_id])

    @property
    def assembled_length(self) -> int:
        return 2 + len(self.left_ids) + len(self.core.ids) + len(self.right_ids)

    def shifted_alignment(self) -> list[int]:
        """Token -> first-subtoken positions within the assembled input."""
        return [self.core_start + a for a in self.core.first_subtoken_of_token]


class EncodingCache:
    """Memoizes per-sentence subword encodings, keyed by corpus position.

    Context assembly re-reads neighboring sentences constantly; caching
    keeps epoch-level shuffling cheap and guarantees the core encoding is
    identical for every window setting.
    """

    def __init__(self, vocab: SubwordVocab):
        self.vocab = vocab
        self._store: dict[tuple[int, int], SubwordEncoding] = {}

    def get(self, sentence: Sentence) -> SubwordEncoding:
        key = (sentence.doc_index, sentence.position_in_doc)
        enc = self._store.get(key)
        if enc is None:
            enc = encode(sentence.texts, self.vocab)
            self._store[key] = enc
        return enc


def _iter_before(sentence: Sentence, document: Document,
                 documents: list[Document], enforce: bool):
    """Sentences preceding `sentence`, nearest first."""
    for pos in range(sentence.position_in_doc - 1, -1, -1):
        yield document.sentences[pos]
    if enforce:
        return
    for d_idx in range(sentence.doc_index - 1, -1, -1):
        for sent in reversed(documents[d_idx].sentences):
            yield sent


def _iter_after(sentence: Sentence, document: Document,
                documents: list[Document], enforce: bool):
    """Sentences following `sentence`, nearest first."""
    for pos in range(sentence.position_in_doc + 1, len(document.sentences)):
        yield document.sentences[pos]
    if enforce:
        return
    for d_idx in range(sentence.doc_index + 1, len(documents)):
        yield from documents[d_idx].sentences


def build_context(sentence: Sentence, document: Document,
                  all_documents: list[Document], vocab: SubwordVocab,
                  config: ContextConfig,
                  cache: EncodingCache | None = None) -> ContextualizedSentence:
    """Attach up to `window` subtokens of left/right context to a sentence."""
    if cache is None:
        cache = EncodingCache(vocab)
    core = cache.get(sentence)

    left: list[int] = []
    for prev in _iter_before(sentence, document, all_documents,
                             config.enforce_boundaries):
        need = config.window - len(left)
        if need <= 0:
            break
        ids = cache.get(prev).ids
        left = (ids if len(ids) <= need else ids[-need:]) + left

    right: list[int] = []
    for nxt in _iter_after(sentence, document, all_documents,
                           config.enforce_boundaries):
        need = config.window - len(right)
        if need <= 0:
            break
        ids = cache.get(nxt).ids
        right = right + (ids if len(ids) <= need else ids[:need])

    return ContextualizedSentence(
        left_ids=left, core=core, right_ids=right,
        core_start=len(left) + 1, bos_id=vocab.bos_id, eos_id=vocab.eos_id)


def context_coverage(sentence: Sentence, document: Document,
                     all_documents: list[Document], vocab: SubwordVocab,
                     config: ContextConfig,
                     cache: EncodingCache | None = None) -> tuple[int, int]:
    """Actual (left, right) context subtoken counts for a sentence."""
    ctx = build_context(sentence, document, all_documents, vocab, config, cache)
    return len(ctx.left_ids), len(ctx.right_ids)


def fit_to_length(ctx: ContextualizedSentence, max_length: int) -> ContextualizedSentence:
    """Symmetrically trim context so the assembled input fits `max_length`.

    Core subtokens are never trimmed; if the core alone exceeds the budget
    this raises instead.
    """
    if ctx.assembled_length <= max_length:
        return ctx
    core_only = 2 + len(ctx.core.ids)
    if core_only > max_length:
        raise ValueError(
            f"core sentence needs {core_only} positions but the model allows "
            f"{max_length}; shrink the context window or raise max positions")
    budget = max_length - core_only
    left, right = list(ctx.left_ids), list(ctx.right_ids)
    while len(left) + len(right) > budget:
        if len(left) >= len(right):
            left.pop(0)
        else:
            right.pop()
    logger.warning("truncated context from %d to %d subtokens to fit %d positions",
                   ctx.assembled_length, 2 + len(left) + len(ctx.core.ids) + len(right),
                   max_length)
    return ContextualizedSentence(
        left_ids=left, core=ctx.core, right_ids=right,
        core_start=len(left) + 1, bos_id=ctx.bos_id, eos_id=ctx.eos_id)
