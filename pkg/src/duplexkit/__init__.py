"""Toolkit for two-channel conversational audio: turn-taking statistics,
per-second speech-act labeling, concept graphs, rationale metrics, and
script-driven dialogue synthesis."""

from .audio_io import (
    AudioFormatError,
    CausalWindow,
    ChunkGrid,
    DuplexAudio,
    causal_window,
    chunk,
    load_duplex,
    resample,
    save_duplex,
)
from .behavior_labels import (
    ClassWeights,
    HighAct,
    LabelTimeline,
    LowAct,
    TimelinePoint,
    event_distribution,
    inverse_frequency_weights,
    low_act_classes,
    low_index,
    read_timelines,
    resolve_low_label,
    weighted_ce_loss,
    write_timelines,
)
from .detector import (
    DetectorParams,
    FeaturePair,
    TrainConfig,
    TrainResult,
    TrainingDiverged,
    extract_features,
    grad_check,
    infer_stream,
    init_params,
    load_params,
    predict_probs,
    save_params,
    train,
    window_features,
)
from .metrics import (
    MetricReport,
    ScoredPrediction,
    align_and_score,
    bleu1,
    classification_report,
    cosine_similarity,
    rouge1,
    rouge_l,
    speaking_style,
    text_similarity,
    tokenize,
)
from .stitcher import (
    ScriptError,
    ScriptUtterance,
    StitchPlan,
    emit_labels,
    parse_script,
    plan_timestamps,
    render_script,
    soft_clip,
    stitch,
)
from .thought_graph import (
    ThoughtGraph,
    Triple,
    augment_with_speech_acts,
    build_text_graph,
    deserialize,
    serialize,
    union_nodes,
)
from .vad_events import (
    CorpusStats,
    TurnEvent,
    VadMask,
    classify_events,
    compute_vad,
    corpus_stats,
    extract_events,
    merge_stats,
    segment_ipus,
    stats_report,
)

__version__ = "0.1.0"
