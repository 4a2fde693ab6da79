import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from tempgnn.data.corpus_io import read_corpus
from tempgnn.data.events import LabeledInstance, Session, Vocabulary
from tempgnn.data.ingest import carve_validation, expand, keep_last_fraction, preprocess, restrict_to_items, \
    split_by_time

logger = logging.getLogger(__name__)


@dataclass(kw_only=True)
class PreparedCorpus:
    vocabulary: Vocabulary
    train: list[LabeledInstance]
    validation: list[LabeledInstance] = field(default_factory=list)
    test: list[LabeledInstance] = field(default_factory=list)

    @property
    def n_items(self) -> int:
        return len(self.vocabulary)


def prepare_sessions(sessions: Sequence[Session], *, min_item_count: int = 5, test_window: int,
                     last_fraction: Optional[float] = None) -> tuple[list[Session], list[Session], Vocabulary]:
    filtered, _ = preprocess(sessions, min_item_count)
    train, test = split_by_time(filtered, test_window)
    if last_fraction is not None and last_fraction < 1:
        train = keep_last_fraction(train, last_fraction)
        test = restrict_to_items(test, {item for session in train for item in session.items})
    return train, test, Vocabulary.build(train)


def prepare_instances(train: Sequence[Session], test: Sequence[Session], vocabulary: Vocabulary, *,
                      max_len: int = 10, validation_fraction: float = 0.1) -> PreparedCorpus:
    fit, held_out = carve_validation(train, validation_fraction)
    corpus = PreparedCorpus(
        vocabulary=vocabulary,
        train=expand(fit, vocabulary, max_len),
        validation=expand(held_out, vocabulary, max_len),
        test=expand(test, vocabulary, max_len),
    )
    logger.info("instances: %d train, %d validation, %d test over %d items", len(corpus.train),
                len(corpus.validation), len(corpus.test), corpus.n_items)
    return corpus


def load_prepared(train_path: Path | str, test_path: Optional[Path | str], vocab_path: Path | str, *,
                  max_len: int = 10, validation_fraction: float = 0.1) -> PreparedCorpus:
    vocabulary = Vocabulary.load(vocab_path)
    train = read_corpus(train_path, vocabulary)
    test = read_corpus(test_path, vocabulary) if test_path else []
    return prepare_instances(train, test, vocabulary, max_len=max_len, validation_fraction=validation_fraction)
