"""Synthetic corpora for controlled experiments.

Three families:

* ``overfit_corpus`` -- small, surface-predictable entities, for sanity
  training runs that must reach ~100 F1 on their own training data.
* ``cue_corpus`` -- two-sentence documents where an ambiguous entity name
  is typed LOC or ORG purely by a cue word in the neighboring sentence.
  Without cross-sentence context the type is undecidable.
* ``adversarial_boundary_corpus`` -- like ``cue_corpus`` but the entity
  opens each document and neighboring documents alternate types, so any
  context leaking across the document boundary carries the wrong cue.

All generators emit CoNLL text blocks and parse them through the regular
corpus reader, so fixtures and real files share one code path.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, parse_conll

PER_NAMES = ["Maro", "Ilka", "Tevin", "Sorcha", "Ardo", "Lupe", "Quint", "Nessa"]
LOC_NAMES = ["Brinmore", "Caldev", "Ostia", "Vintra", "Helmsby", "Drossel"]
ORG_NAMES = ["Nordex", "Vantico", "Grelling", "Ateca", "Polunt", "Mirevo"]

AMBIGUOUS_NAMES = ["Arcadia", "Veltan", "Corusca", "Brillon", "Madrigal",
                   "Ferroway", "Solenne", "Tarquin"]

LOC_CUE_SENTENCES = [
    "the travel almanac follows .",
    "this travel chapter covers coastlines .",
]
ORG_CUE_SENTENCES = [
    "the market bulletin follows .",
    "this market digest covers earnings .",
]

ENTITY_TEMPLATES = [
    "they discussed {name} at length .",
    "we toured {name} last spring .",
    "reports about {name} kept coming .",
]


def _entity_line(token: str, tag: str) -> str:
    return f"{token} {tag}"


def _sentence_block(tokens: list[str], tags: list[str]) -> str:
    return "\n".join(_entity_line(t, g) for t, g in zip(tokens, tags))


def overfit_corpus(n_sentences: int = 50, seed: int = 0,
                   split: str = "train") -> Corpus:
    """Sentences whose entity types are recoverable from the surface alone."""
    rng = np.random.default_rng(seed)
    blocks = []
    for _ in range(n_sentences):
        kind = rng.integers(0, 3)
        if kind == 0:
            per = PER_NAMES[rng.integers(len(PER_NAMES))]
            loc = LOC_NAMES[rng.integers(len(LOC_NAMES))]
            tokens = [per, "went", "to", loc, "."]
            tags = ["B-PER", "O", "O", "B-LOC", "O"]
        elif kind == 1:
            org = ORG_NAMES[rng.integers(len(ORG_NAMES))]
            loc = LOC_NAMES[rng.integers(len(LOC_NAMES))]
            tokens = [org, "Group", "opened", "in", loc, "."]
            tags = ["B-ORG", "I-ORG", "O", "O", "B-LOC", "O"]
        else:
            per = PER_NAMES[rng.integers(len(PER_NAMES))]
            org = ORG_NAMES[rng.integers(len(ORG_NAMES))]
            tokens = [per, "joined", org, "this", "year", "."]
            tags = ["B-PER", "O", "B-ORG", "O", "O", "O"]
        blocks.append(_sentence_block(tokens, tags))
    return parse_conll("\n\n".join(blocks) + "\n", split=split)


def _cue_document(name: str, entity_type: str, cue_idx: int, template_idx: int,
                  entity_first: bool) -> str:
    cue_pool = LOC_CUE_SENTENCES if entity_type == "LOC" else ORG_CUE_SENTENCES
    cue_tokens = cue_pool[cue_idx % len(cue_pool)].split()
    cue = _sentence_block(cue_tokens, ["O"] * len(cue_tokens))

    template = ENTITY_TEMPLATES[template_idx % len(ENTITY_TEMPLATES)]
    tokens = template.format(name=name).split()
    tags = ["O"] * len(tokens)
    tags[tokens.index(name)] = f"B-{entity_type}"
    entity = _sentence_block(tokens, tags)

    first, second = (entity, cue) if entity_first else (cue, entity)
    return first + "\n\n" + second


def corpus_from_documents(documents: list[str], split: str = "train") -> Corpus:
    """Join per-document CoNLL blocks with -DOCSTART- markers and parse."""
    parts = []
    for block in documents:
        parts.append("-DOCSTART- O\n")
        parts.append(block + "\n")
    return parse_conll("\n".join(parts), split=split)


def cue_documents(n_documents: int, seed: int,
                  entity_first: bool = False) -> list[str]:
    """Documents pairing a type cue sentence with an ambiguous entity sentence."""
    rng = np.random.default_rng(seed)
    docs = []
    for _ in range(n_documents):
        name = AMBIGUOUS_NAMES[rng.integers(len(AMBIGUOUS_NAMES))]
        entity_type = "LOC" if rng.integers(2) == 0 else "ORG"
        docs.append(_cue_document(name, entity_type,
                                  cue_idx=int(rng.integers(4)),
                                  template_idx=int(rng.integers(4)),
                                  entity_first=entity_first))
    return docs


def cue_corpus(n_documents: int, seed: int, split: str = "train") -> Corpus:
    """Cue-then-entity documents; the cue is required to type the entity."""
    return corpus_from_documents(cue_documents(n_documents, seed), split=split)


def adversarial_boundary_corpus(n_documents: int, seed: int,
                                split: str = "train") -> Corpus:
    """Entity-first documents with strictly alternating types.

    Each document reads [entity sentence, cue sentence]. The in-document
    (right) cue always matches; the tail of the preceding document is a
    cue for the *other* type, so context crossing the boundary is always
    misleading.
    """
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_documents):
        name = AMBIGUOUS_NAMES[rng.integers(len(AMBIGUOUS_NAMES))]
        entity_type = "LOC" if i % 2 == 0 else "ORG"
        docs.append(_cue_document(name, entity_type,
                                  cue_idx=int(rng.integers(4)),
                                  template_idx=int(rng.integers(4)),
                                  entity_first=True))
    return corpus_from_documents(docs, split=split)
