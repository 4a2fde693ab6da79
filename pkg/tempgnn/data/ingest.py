import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

from tempgnn.data.events import LabeledInstance, Session, SessionEvent, Vocabulary
from tempgnn.errors import AllTestError, ConfigError, DataError, EmptyCorpusError

logger = logging.getLogger(__name__)

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MILLISECOND = timedelta(milliseconds=1)
_INTEGER = re.compile(r"[+-]?\d+")
_DECIMAL = re.compile(r"[+-]?\d+\.\d*")
_DURATION = re.compile(r"(\d+(?:\.\d+)?)\s*(ms|s|m|h|d|w)?")
_UNIT_MS = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000, "d": 86_400_000, "w": 604_800_000}


@dataclass(frozen=True, kw_only=True)
class ColumnSpec:
    session: str | int = "session_id"
    timestamp: str | int = "timestamp"
    item: str | int = "item_id"
    delimiter: str = ","
    header: bool = True


def parse_timestamp(text: str) -> int:
    """Epoch milliseconds from an integer/decimal epoch-ms field or an ISO-8601 datetime."""
    text = text.strip()
    if _INTEGER.fullmatch(text):
        return int(text)
    if _DECIMAL.fullmatch(text):
        return int(round(float(text)))
    moment = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return (moment - _EPOCH) // _MILLISECOND


def parse_duration(text: str | int) -> int:
    if isinstance(text, int):
        return text
    match = _DURATION.fullmatch(str(text).strip())
    if not match:
        raise ConfigError("unreadable duration {!r}; expected e.g. 1d, 7d, 12h, 30m, 45s or milliseconds".format(text))
    value, unit = match.groups()
    return int(round(float(value) * _UNIT_MS[unit or "ms"]))


def _column(frame: pd.DataFrame, key: str | int, header: bool) -> pd.Series:
    if isinstance(key, int) or (isinstance(key, str) and key.isdigit() and key not in frame.columns):
        position = int(key)
        if position >= len(frame.columns):
            raise DataError("column position {} but the log has {} columns".format(position, len(frame.columns)))
        return frame.iloc[:, position]
    if not header:
        raise DataError("column {!r} given by name but the log has no header".format(key))
    if key not in frame.columns:
        raise DataError("column {!r} not found; header is {}".format(key, list(frame.columns)))
    return frame[key]


def parse_log(path: Path | str, columns: ColumnSpec = ColumnSpec()) -> list[Session]:
    try:
        frame = pd.read_csv(path, sep=columns.delimiter, header=0 if columns.header else None, dtype=str,
                            keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as e:
        raise DataError("malformed log {}: {}".format(path, e)) from None

    first_line = 2 if columns.header else 1
    grouped: dict[str, list[tuple[int, int, str]]] = defaultdict(list)
    rows = zip(_column(frame, columns.session, columns.header),
               _column(frame, columns.timestamp, columns.header),
               _column(frame, columns.item, columns.header))
    for order, (session_id, stamp, item_id) in enumerate(rows):
        line = first_line + order
        if not session_id or not item_id:
            raise DataError("empty session or item field", line=line)
        try:
            timestamp = parse_timestamp(stamp)
        except ValueError:
            raise DataError("unparseable timestamp {!r}".format(stamp), line=line) from None
        if timestamp < 0:
            raise DataError("negative timestamp {!r}".format(stamp), line=line)
        grouped[session_id].append((timestamp, order, item_id))

    sessions = []
    for session_id in sorted(grouped):
        # stable: equal timestamps keep log order
        events = sorted(grouped[session_id], key=lambda row: row[0])
        sessions.append(Session(session_id=session_id,
                                events=tuple(SessionEvent(item, ts) for ts, _, item in events)))
    logger.info("parsed %d sessions from %s", len(sessions), path)
    return sessions


def restrict_to_items(sessions: Iterable[Session], items: set[str] | Vocabulary) -> list[Session]:
    kept = []
    for session in sessions:
        events = [e for e in session.events if e.item_id in items]
        if len(events) < 2:
            continue
        kept.append(session if len(events) == len(session) else session.with_events(events))
    return kept


def preprocess(sessions: Iterable[Session], min_item_count: int = 5) -> tuple[list[Session], Vocabulary]:
    if min_item_count < 1:
        raise ConfigError("min_item_count must be at least 1, got {}".format(min_item_count))
    current = sorted(sessions, key=lambda s: s.session_id)
    rounds = 0
    while True:
        rounds += 1
        counts = Counter(item for session in current for item in session.items)
        frequent = {item for item, count in counts.items() if count >= min_item_count}
        kept = restrict_to_items(current, frequent)
        unchanged = len(kept) == len(current) and all(len(a) == len(b) for a, b in zip(kept, current))
        current = kept
        if unchanged:
            break
    if not current:
        raise EmptyCorpusError("every session was filtered out (min_item_count={})".format(min_item_count))
    logger.info("preprocess kept %d sessions after %d filter rounds", len(current), rounds)
    return current, Vocabulary.build(current)


def split_by_time(sessions: Sequence[Session], test_window: int) -> tuple[list[Session], list[Session]]:
    if test_window <= 0:
        raise ConfigError("test window must be positive, got {}".format(test_window))
    if not sessions:
        raise EmptyCorpusError("cannot split an empty corpus")
    cutoff = max(s.last_timestamp for s in sessions) - test_window
    train = [s for s in sessions if s.last_timestamp <= cutoff]
    test = [s for s in sessions if s.last_timestamp > cutoff]
    if not train:
        raise AllTestError("test window of {} ms covers the whole corpus".format(test_window))
    known = {item for session in train for item in session.items}
    kept_test = restrict_to_items(test, known)
    logger.info("split: %d train sessions, %d test sessions (%d dropped for unseen items)", len(train),
                len(kept_test), len(test) - len(kept_test))
    return train, kept_test


def _by_recency(sessions: Iterable[Session]) -> list[Session]:
    return sorted(sessions, key=lambda s: (s.last_timestamp, s.session_id))


def keep_last_fraction(train: Sequence[Session], fraction: float) -> list[Session]:
    if not 0 < fraction <= 1:
        raise ConfigError("keep-last fraction must lie in (0, 1], got {}".format(fraction))
    ordered = _by_recency(train)
    count = max(1, int(len(ordered) * fraction))
    return sorted(ordered[len(ordered) - count:], key=lambda s: s.session_id)


def carve_validation(train: Sequence[Session], fraction: float = 0.1) -> tuple[list[Session], list[Session]]:
    if not 0 <= fraction < 1:
        raise ConfigError("validation fraction must lie in [0, 1), got {}".format(fraction))
    ordered = _by_recency(train)
    count = int(len(ordered) * fraction)
    if count == 0:
        return sorted(ordered, key=lambda s: s.session_id), []
    fit, held_out = ordered[:-count], ordered[-count:]
    return sorted(fit, key=lambda s: s.session_id), sorted(held_out, key=lambda s: s.session_id)


def expand(sessions: Iterable[Session], vocabulary: Vocabulary, max_len: int = 10) -> list[LabeledInstance]:
    """
    One labeled instance per next click: prefix events[:j] -> item of events[j],
    predicted at events[j]'s timestamp. Prefixes keep their last ``max_len`` events.
    """
    if max_len < 1:
        raise ConfigError("max_len must be at least 1, got {}".format(max_len))
    instances = []
    for session in sorted(sessions, key=lambda s: s.session_id):
        items = [vocabulary.index_of(item) for item in session.items]
        for j in range(1, len(session)):
            start = max(0, j - max_len)
            prefix = Session(session_id=session.session_id, events=session.events[start:j],
                             prediction_timestamp=session.events[j].timestamp)
            instances.append(LabeledInstance(prefix=prefix, prefix_items=tuple(items[start:j]),
                                             target_item=items[j]))
    return instances


def corpus_stats(train: Sequence[Session], test: Sequence[Session]) -> dict[str, float]:
    sessions = list(train) + list(test)
    clicks = sum(len(s) for s in sessions)
    return {
        "clicks": clicks,
        "train_sessions": len(train),
        "test_sessions": len(test),
        "train_instances": sum(len(s) - 1 for s in train),
        "test_instances": sum(len(s) - 1 for s in test),
        "items": len({item for s in train for item in s.items}),
        "average_length": round(clicks / len(sessions), 4) if sessions else 0.0,
    }
