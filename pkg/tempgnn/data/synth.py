import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from tempgnn.data.events import Session, SessionEvent
from tempgnn.errors import ConfigError

logger = logging.getLogger(__name__)

BASE_TIMESTAMP = 1_600_000_000_000

# Disjoint gap ranges in ms, from seconds to hours; consecutive ranges are at least 2x apart.
GAP_RANGES_MS: tuple[tuple[int, int], ...] = (
    (1_000, 3_000),
    (10_000, 30_000),
    (60_000, 120_000),
    (300_000, 600_000),
    (1_200_000, 1_800_000),
    (3_600_000, 5_400_000),
    (10_800_000, 14_400_000),
    (28_800_000, 36_000_000),
)


@dataclass(frozen=True, kw_only=True)
class SynthSpec:
    n_items: int
    n_sessions: int
    seed: int = 0
    temporal_signal: bool = True
    min_length: int = 2
    max_length: int = 8
    noise: float = 0.1
    span_days: float = 30.0
    gap_ranges_ms: tuple[tuple[int, int], ...] = GAP_RANGES_MS

    def validate(self) -> None:
        if self.n_items < 4:
            raise ConfigError("synthetic corpus needs at least 4 items, got {}".format(self.n_items))
        if self.n_sessions < 1:
            raise ConfigError("synthetic corpus needs at least 1 session, got {}".format(self.n_sessions))
        if not 2 <= self.min_length <= self.max_length:
            raise ConfigError("session lengths need 2 <= min_length <= max_length")
        if not 0 <= self.noise <= 1:
            raise ConfigError("noise must lie in [0, 1], got {}".format(self.noise))
        if len(self.gap_ranges_ms) < 2:
            raise ConfigError("synthetic corpus needs at least 2 gap ranges, got {}".format(len(self.gap_ranges_ms)))
        ordered = sorted(self.gap_ranges_ms)
        if any(low < 0 or low > high for low, high in ordered):
            raise ConfigError("gap ranges need 0 <= low <= high, got {}".format(list(self.gap_ranges_ms)))
        if any(prev[1] >= nxt[0] for prev, nxt in zip(ordered, ordered[1:])):
            raise ConfigError("gap ranges overlap: {}".format(list(self.gap_ranges_ms)))
        if self.temporal_signal and self.n_items < len(self.gap_ranges_ms):
            raise ConfigError("{} gap ranges need at least as many items, got {}".format(
                len(self.gap_ranges_ms), self.n_items))


@dataclass(frozen=True)
class SynthWorld:
    """
    One successor table per gap range: the range of the gap leading into the
    current item picks the next item. Without a temporal signal every range
    shares the first table.
    """

    successors: np.ndarray
    gap_ranges_ms: tuple[tuple[int, int], ...]
    temporal_signal: bool

    @property
    def n_classes(self) -> int:
        return len(self.gap_ranges_ms)

    def successor(self, item: int, gap_class: int) -> int:
        return int(self.successors[gap_class if self.temporal_signal else 0, item])

    def gap_class(self, gap_ms: int) -> Optional[int]:
        for index, (low, high) in enumerate(self.gap_ranges_ms):
            if low <= gap_ms <= high:
                return index
        return None


def synth_world(spec: SynthSpec) -> SynthWorld:
    rng = np.random.default_rng([spec.seed, 0])
    order = rng.permutation(spec.n_items)
    # shifted copies of one permutation never agree on an item's successor
    successors = np.stack([np.roll(order, shift) for shift in range(len(spec.gap_ranges_ms))])
    return SynthWorld(successors, tuple(spec.gap_ranges_ms), spec.temporal_signal)


def synth_corpus(spec: SynthSpec) -> list[Session]:
    spec.validate()
    world = synth_world(spec)
    rng = np.random.default_rng([spec.seed, 1])
    spacing = spec.span_days * 86_400_000 / spec.n_sessions

    sessions = []
    for k in range(spec.n_sessions):
        length = int(rng.integers(spec.min_length, spec.max_length + 1))
        timestamp = BASE_TIMESTAMP + int(k * spacing) + int(rng.integers(0, 60_000))
        item = int(rng.integers(spec.n_items))
        # the first click has no observable gap into it
        gap_class = int(rng.integers(world.n_classes))
        events = [SessionEvent("i{}".format(item), timestamp)]
        for _ in range(length - 1):
            following = world.successor(item, gap_class)
            if rng.random() < spec.noise:
                following = int(rng.integers(spec.n_items))
            gap_class = int(rng.integers(world.n_classes))
            low, high = world.gap_ranges_ms[gap_class]
            timestamp += int(rng.integers(low, high + 1))
            item = following
            events.append(SessionEvent("i{}".format(item), timestamp))
        sessions.append(Session(session_id="s{:06d}".format(k), events=tuple(events)))
    logger.info("synthesized %d sessions over %d items (%d gap ranges, temporal_signal=%s)", len(sessions),
                spec.n_items, world.n_classes, spec.temporal_signal)
    return sessions


def oracle_accuracy(sessions: list[Session], world: SynthWorld, gap_aware: bool) -> float:
    """
    Next-click accuracy of the generating rule. The gap-aware oracle reads the
    interval into the current click; the item-only oracle always assumes the
    first gap range. Positions without an observable incoming gap are skipped.
    """
    hits = total = 0
    for session in sessions:
        items = [int(key[1:]) for key in session.items]
        stamps = session.timestamps
        for j in range(1, len(items) - 1):
            gap_class = 0
            if gap_aware:
                gap_class = world.gap_class(stamps[j] - stamps[j - 1]) or 0
            hits += world.successor(items[j], gap_class) == items[j + 1]
            total += 1
    return hits / total if total else 0.0
