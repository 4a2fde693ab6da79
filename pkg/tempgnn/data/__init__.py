from tempgnn.data.events import LabeledInstance, Session, SessionEvent, Vocabulary
from tempgnn.data.ingest import ColumnSpec, carve_validation, corpus_stats, expand, keep_last_fraction, \
    parse_duration, parse_log, preprocess, restrict_to_items, split_by_time
from tempgnn.data.pipeline import PreparedCorpus, load_prepared, prepare_instances, prepare_sessions
from tempgnn.data.synth import SynthSpec, oracle_accuracy, synth_corpus, synth_world

__all__ = [
    "ColumnSpec", "LabeledInstance", "PreparedCorpus", "Session", "SessionEvent", "SynthSpec", "Vocabulary",
    "carve_validation", "corpus_stats", "expand", "keep_last_fraction", "load_prepared", "oracle_accuracy",
    "parse_duration", "parse_log", "prepare_instances", "prepare_sessions", "preprocess", "restrict_to_items",
    "split_by_time", "synth_corpus", "synth_world",
]
