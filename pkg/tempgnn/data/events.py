from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from tempgnn.errors import DataError, VocabularyError


@dataclass(frozen=True)
class SessionEvent:
    item_id: str
    timestamp: int

    def __post_init__(self):
        if self.timestamp < 0:
            raise DataError("negative timestamp {} for item {!r}".format(self.timestamp, self.item_id))


@dataclass(frozen=True, kw_only=True)
class Session:
    session_id: str
    events: tuple[SessionEvent, ...]
    prediction_timestamp: Optional[int] = None

    def __post_init__(self):
        if not self.events:
            raise DataError("session {!r} has no events".format(self.session_id))
        timestamps = [e.timestamp for e in self.events]
        if any(b < a for a, b in zip(timestamps, timestamps[1:])):
            raise DataError("session {!r} timestamps are not sorted".format(self.session_id))
        if self.prediction_timestamp is None:
            object.__setattr__(self, "prediction_timestamp", timestamps[-1])
        elif self.prediction_timestamp < timestamps[-1]:
            raise DataError("session {!r} predicts at {} before its last event {}".format(
                self.session_id, self.prediction_timestamp, timestamps[-1]))

    def __len__(self) -> int:
        return len(self.events)

    @property
    def items(self) -> list[str]:
        return [e.item_id for e in self.events]

    @property
    def timestamps(self) -> list[int]:
        return [e.timestamp for e in self.events]

    @property
    def last_timestamp(self) -> int:
        return self.events[-1].timestamp

    def with_events(self, events: Iterable[SessionEvent]) -> "Session":
        events = tuple(events)
        return Session(session_id=self.session_id, events=events, prediction_timestamp=events[-1].timestamp)


@dataclass(frozen=True, kw_only=True)
class LabeledInstance:
    prefix: Session
    prefix_items: tuple[int, ...]
    target_item: int

    def __post_init__(self):
        if len(self.prefix_items) != len(self.prefix.events):
            raise DataError("instance of {!r}: {} item indices for {} events".format(
                self.prefix.session_id, len(self.prefix_items), len(self.prefix.events)))

    @property
    def prediction_timestamp(self) -> int:
        return self.prefix.prediction_timestamp

    @property
    def timestamps(self) -> list[int]:
        return self.prefix.timestamps

    def __len__(self) -> int:
        return len(self.prefix_items)


@dataclass
class Vocabulary:
    keys: list[str] = field(default_factory=list)
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._index = {key: i for i, key in enumerate(self.keys)}
        if len(self._index) != len(self.keys):
            raise VocabularyError("vocabulary keys are not unique")

    @classmethod
    def build(cls, sessions: Iterable[Session]) -> "Vocabulary":
        keys: dict[str, None] = {}
        for session in sorted(sessions, key=lambda s: s.session_id):
            for event in session.events:
                keys.setdefault(event.item_id, None)
        return cls(list(keys))

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def index_of(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise VocabularyError("item {!r} is not in the training vocabulary".format(key)) from None

    def key_of(self, index: int) -> str:
        if not 0 <= index < len(self.keys):
            raise VocabularyError("item index {} outside [0, {})".format(index, len(self.keys)))
        return self.keys[index]

    def save(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for index, key in enumerate(self.keys):
                handle.write("{}\t{}\n".format(key, index))

    @classmethod
    def load(cls, path: Path | str) -> "Vocabulary":
        pairs = []
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                key, _, index = line.rpartition("\t")
                if not key or not index.isdigit():
                    raise VocabularyError("malformed vocabulary row {!r}".format(line), line=line_no)
                pairs.append((int(index), key))
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise VocabularyError("vocabulary indices are not contiguous from 0")
        return cls([key for _, key in pairs])
