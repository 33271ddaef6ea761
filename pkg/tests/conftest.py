import numpy as np
import pytest

from docner.corpus import parse_conll
from docner.tokenizer import train_vocab

TWO_DOC_TEXT = """-DOCSTART- O

I O
love O
Paris B-LOC

The O
city O
is O
nice O

some O
facts O
follow O

-DOCSTART- O

Berlin B-LOC
hosts O
Nordex B-ORG

visitors O
arrive O
"""


@pytest.fixture
def two_doc_corpus():
    return parse_conll(TWO_DOC_TEXT)


@pytest.fixture
def small_vocab(two_doc_corpus):
    return train_vocab(two_doc_corpus, 80)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
