"""CoNLL column-format corpora: documents, sentences, tag schemes, spans.

Corpora are immutable after parsing. Tags follow either the BIO or BIOES
scheme; malformed sequences are repaired (an inside tag with no open span
is promoted to a begin tag) rather than rejected, matching the tolerant
behavior of the standard span scorer.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace

logger = logging.getLogger(__name__)

DOCSTART = "-DOCSTART-"
OUTSIDE = "O"


class TagScheme(enum.Enum):
    BIO = "bio"
    BIOES = "bioes"

    @property
    def prefixes(self) -> frozenset[str]:
        return _PREFIXES[self]


_PREFIXES = {
    TagScheme.BIO: frozenset("BIO"),
    TagScheme.BIOES: frozenset("BIOES"),
}


class ParseError(ValueError):
    """Raised on malformed CoNLL input; message carries the line number."""


@dataclass(frozen=True)
class Span:
    """A typed entity mention, inclusive token indices within one sentence."""

    entity_type: str
    start: int
    end: int


@dataclass
class Token:
    text: str
    gold_tag: str
    predicted_tag: str | None = None


@dataclass
class Sentence:
    tokens: list[Token]
    doc_index: int
    position_in_doc: int

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def gold_tags(self) -> list[str]:
        return [t.gold_tag for t in self.tokens]

    @property
    def predicted_tags(self) -> list[str]:
        return [t.predicted_tag if t.predicted_tag is not None else t.gold_tag
                for t in self.tokens]


@dataclass
class Document:
    sentences: list[Sentence]
    id: str


@dataclass
class Corpus:
    documents: list[Document]
    split: str
    label_set: frozenset[str]
    scheme: TagScheme

    def sentences(self):
        for doc in self.documents:
            yield from doc.sentences

    @property
    def num_sentences(self) -> int:
        return sum(len(d.sentences) for d in self.documents)

    @property
    def num_tokens(self) -> int:
        return sum(len(s) for s in self.sentences())


def split_tag(tag: str) -> tuple[str, str]:
    """Split 'B-LOC' into ('B', 'LOC'); the outside tag yields ('O', '')."""
    if tag == OUTSIDE:
        return OUTSIDE, ""
    prefix, _, etype = tag.partition("-")
    return prefix, etype


def _resolve_column(fields: list[str], column: int, line_no: int, what: str) -> str:
    n = len(fields)
    idx = column if column >= 0 else n + column
    if idx < 0 or idx >= n:
        raise ParseError(
            f"line {line_no}: expected at least {abs(column) if column < 0 else column + 1} "
            f"columns for the {what} column, got {n}")
    return fields[idx]


def parse_conll(text: str, token_column: int = 0, tag_column: int = -1,
                split: str = "train") -> Corpus:
    """Parse whitespace-separated CoNLL columns into a document-aware corpus.

    Blank lines separate sentences; a line whose first column is -DOCSTART-
    opens a new document (the line itself is not a sentence). Files without
    any -DOCSTART- become a single document. Negative column indices count
    from the right, so ``tag_column=-1`` reads the last column.
    """
    raw_docs: list[list[list[tuple[str, str]]]] = []
    current_doc: list[list[tuple[str, str]]] = []
    current_sent: list[tuple[str, str]] = []

    def close_sentence():
        nonlocal current_sent
        if current_sent:
            current_doc.append(current_sent)
            current_sent = []

    def close_document():
        nonlocal current_doc
        close_sentence()
        if current_doc:
            raw_docs.append(current_doc)
            current_doc = []

    for line_no, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            close_sentence()
            continue
        if fields[0] == DOCSTART:
            close_document()
            continue
        token_text = _resolve_column(fields, token_column, line_no, "token")
        tag = _resolve_column(fields, tag_column, line_no, "tag")
        _validate_tag(tag, line_no)
        current_sent.append((token_text, tag))
    close_document()

    all_tags = [tag for doc in raw_docs for sent in doc for _, tag in sent]
    scheme = detect_scheme(all_tags)
    label_set = frozenset(split_tag(t)[1] for t in all_tags if t != OUTSIDE)

    documents = []
    for d_idx, raw_doc in enumerate(raw_docs):
        sentences = [
            Sentence(tokens=[Token(text=w, gold_tag=t) for w, t in raw_sent],
                     doc_index=d_idx, position_in_doc=s_idx)
            for s_idx, raw_sent in enumerate(raw_doc)
        ]
        documents.append(Document(sentences=sentences, id=f"doc{d_idx}"))
    return Corpus(documents=documents, split=split, label_set=label_set, scheme=scheme)


def _validate_tag(tag: str, line_no: int) -> None:
    prefix, etype = split_tag(tag)
    if tag == OUTSIDE:
        return
    if prefix not in _PREFIXES[TagScheme.BIOES] or not etype:
        raise ParseError(f"line {line_no}: tag {tag!r} does not match "
                         f"<prefix>-<type> with prefix in B/I/O/E/S")


def detect_scheme(tags) -> TagScheme:
    """BIOES if any E-/S- prefix occurs, else BIO."""
    for tag in tags:
        if split_tag(tag)[0] in ("E", "S"):
            return TagScheme.BIOES
    return TagScheme.BIO


def spans_from_tags(tags: list[str], scheme: TagScheme) -> list[Span]:
    """Extract maximal non-overlapping typed spans, scorer-compatible.

    Tolerant reading: an inside/end tag that does not continue an open span
    of the same type starts a new span (the standard repair).
    """
    spans: list[Span] = []
    start = None
    current_type = None
    for i, tag in enumerate(tags):
        prefix, etype = split_tag(tag)
        continues = prefix in ("I", "E") and current_type == etype and start is not None
        if start is not None and not continues:
            spans.append(Span(current_type, start, i - 1))
            start, current_type = None, None
        if prefix == OUTSIDE:
            continue
        if not continues:
            start, current_type = i, etype
        if prefix in ("E", "S"):
            spans.append(Span(current_type, start, i))
            start, current_type = None, None
    if start is not None:
        spans.append(Span(current_type, start, len(tags) - 1))
    return spans


def tags_from_spans(spans: list[Span], length: int, scheme: TagScheme) -> list[str]:
    """Emit a tag sequence realizing `spans` under `scheme`."""
    tags = [OUTSIDE] * length
    for span in spans:
        if scheme is TagScheme.BIO:
            tags[span.start] = f"B-{span.entity_type}"
            for i in range(span.start + 1, span.end + 1):
                tags[i] = f"I-{span.entity_type}"
        else:
            if span.start == span.end:
                tags[span.start] = f"S-{span.entity_type}"
            else:
                tags[span.start] = f"B-{span.entity_type}"
                for i in range(span.start + 1, span.end):
                    tags[i] = f"I-{span.entity_type}"
                tags[span.end] = f"E-{span.entity_type}"
    return tags


def convert_scheme(tags: list[str], source: TagScheme, target: TagScheme) -> list[str]:
    """Re-encode a tag sequence in another scheme, preserving the span set.

    Invalid sequences (e.g. I-X after O) are repaired by promotion to a
    span start; a warning is logged.
    """
    if _needs_repair(tags, source):
        logger.warning("repairing malformed %s tag sequence %s", source.name, tags)
    spans = spans_from_tags(tags, source)
    return tags_from_spans(spans, len(tags), target)


def _needs_repair(tags: list[str], scheme: TagScheme) -> bool:
    prev_prefix, prev_type = OUTSIDE, ""
    for tag in tags:
        prefix, etype = split_tag(tag)
        if prefix not in scheme.prefixes:
            return True
        if prefix in ("I", "E"):
            open_ok = prev_prefix in ("B", "I") and prev_type == etype
            if not open_ok:
                return True
        prev_prefix, prev_type = prefix, etype
    return False


def with_predictions(corpus: Corpus, predictions: list[list[str]]) -> Corpus:
    """A copy of `corpus` with one predicted tag per token, in sentence order."""
    sentences = list(corpus.sentences())
    if len(predictions) != len(sentences):
        raise ValueError(f"expected {len(sentences)} prediction sequences, "
                         f"got {len(predictions)}")
    documents = []
    it = iter(predictions)
    for doc in corpus.documents:
        new_sents = []
        for sent in doc.sentences:
            tags = next(it)
            if len(tags) != len(sent):
                raise ValueError("prediction length mismatch for sentence "
                                 f"{sent.doc_index}:{sent.position_in_doc}")
            new_tokens = [replace(tok, predicted_tag=tag)
                          for tok, tag in zip(sent.tokens, tags)]
            new_sents.append(Sentence(new_tokens, sent.doc_index, sent.position_in_doc))
        documents.append(Document(new_sents, doc.id))
    return Corpus(documents, corpus.split, corpus.label_set, corpus.scheme)


def format_conll(corpus: Corpus, include_predictions: bool = False) -> str:
    """Render a corpus back to CoNLL columns (token, gold[, predicted])."""
    lines = []
    multi_doc = len(corpus.documents) > 1
    for doc in corpus.documents:
        if multi_doc:
            lines.append(f"{DOCSTART} {OUTSIDE}")
            lines.append("")
        for sent in doc.sentences:
            for tok in sent.tokens:
                cols = [tok.text, tok.gold_tag]
                if include_predictions:
                    cols.append(tok.predicted_tag if tok.predicted_tag is not None
                                else OUTSIDE)
                lines.append(" ".join(cols))
            lines.append("")
    return "\n".join(lines)
