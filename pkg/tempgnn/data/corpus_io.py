import logging
from pathlib import Path
from typing import Iterable

import pandas as pd

from tempgnn.data.events import Session, SessionEvent, Vocabulary
from tempgnn.errors import DataError

logger = logging.getLogger(__name__)


def write_corpus(sessions: Iterable[Session], vocabulary: Vocabulary, path: Path | str) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for session in sessions:
            events = ",".join("{}:{}".format(vocabulary.index_of(e.item_id), e.timestamp) for e in session.events)
            handle.write("{}\t{}\n".format(session.session_id, events))
            count += 1
    return count


def read_corpus(path: Path | str, vocabulary: Vocabulary) -> list[Session]:
    sessions = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            session_id, _, body = line.partition("\t")
            if not body:
                raise DataError("expected 'session_id<TAB>item:ts,...'", line=line_no)
            events = []
            for token in body.split(","):
                index, _, stamp = token.partition(":")
                if not index.isdigit() or not stamp.lstrip("-").isdigit():
                    raise DataError("malformed event {!r}".format(token), line=line_no)
                events.append(SessionEvent(vocabulary.key_of(int(index)), int(stamp)))
            sessions.append(Session(session_id=session_id, events=tuple(events)))
    return sessions


def write_log(sessions: Iterable[Session], path: Path | str) -> int:
    rows = [(s.session_id, e.timestamp, e.item_id) for s in sessions for e in s.events]
    frame = pd.DataFrame(rows, columns=["session_id", "timestamp", "item_id"])
    frame.to_csv(path, index=False)
    logger.info("wrote %d events to %s", len(frame), path)
    return len(frame)
