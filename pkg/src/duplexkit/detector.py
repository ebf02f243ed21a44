"""Per-second dialogue-act detector over hand-crafted two-channel features.

Each second yields an acoustic vector (energy, voicing, overlap, zero
crossings) and a semantic vector (token statistics); a sigmoid gate fuses
learned projections of the two routes, an optional causal context (EMA or
single-head attention over past-and-self) aggregates the sequence, and two
softmax heads emit the high- and low-level act posteriors. Training is
plain full-batch gradient descent on the class-weighted cross entropy with
hand-derived gradients; ``grad_check`` validates them against central
finite differences. Streaming inference recomputes features inside each
second's causal window, so nothing after the window's right edge can touch
an emitted posterior.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .audio_io import ChunkGrid, DuplexAudio, causal_window, chunk
from .behavior_labels import (
    N_HIGH,
    P_CLAMP,
    ClassWeights,
    HighAct,
    LabelTimeline,
    LowAct,
    TimelinePoint,
    HIGH_NAMES,
    LOW_NAMES,
    high_from_name,
    low_act_classes,
    low_from_name,
    low_index,
)
from .metrics import DEFAULT_FILLERS, count_fillers, tokenize
from .vad_events import compute_vad

ACOUSTIC_DIM = 10
SEMANTIC_DIM = 7
LOG_EPS = 1e-8

IMPERATIVE_LEXICON = frozenset({
    "go", "stop", "wait", "look", "listen", "come", "tell", "give", "take",
    "put", "let", "please", "don't", "keep", "try", "open", "close", "turn",
})
FIRST_PERSON = frozenset({
    "i", "me", "my", "mine", "we", "us", "our", "ours", "i'm", "i've",
    "i'll", "i'd",
})
SECOND_PERSON = frozenset({
    "you", "your", "yours", "you're", "you've", "you'll", "you'd",
})


@dataclass
class FeaturePair:
    """One second's acoustic and semantic feature vectors."""

    acoustic: np.ndarray
    semantic: np.ndarray

    def __post_init__(self):
        self.acoustic = np.asarray(self.acoustic, dtype=np.float64)
        self.semantic = np.asarray(self.semantic, dtype=np.float64)
        if self.acoustic.ndim != 1 or self.semantic.ndim != 1:
            raise ValueError("feature vectors must be 1-d")


def _zcr(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    return float(np.mean(np.signbit(x[1:]) != np.signbit(x[:-1])))


def _semantic_vector(text: str, seen_types: set, totals: list,
                     fillers=DEFAULT_FILLERS) -> np.ndarray:
    """Token statistics for one second. ``seen_types``/``totals`` accumulate
    across the span so the type-token ratio is over tokens seen so far."""
    tokens = tokenize(text)
    out = np.zeros(SEMANTIC_DIM)
    out[0] = len(tokens)
    if tokens:
        out[1] = count_fillers(tokens, fillers) / len(tokens)
        out[3] = sum(1 for t in tokens if t in IMPERATIVE_LEXICON) / len(tokens)
        out[4] = sum(1 for t in tokens if t in FIRST_PERSON) / len(tokens)
        out[5] = sum(1 for t in tokens if t in SECOND_PERSON) / len(tokens)
    out[2] = 1.0 if "?" in text else 0.0
    seen_types.update(tokens)
    totals[0] += len(tokens)
    out[6] = len(seen_types) / totals[0] if totals[0] else 0.0
    return out


def extract_features(
    audio: DuplexAudio,
    grid: ChunkGrid,
    transcripts=None,
    vad_threshold: float = 0.1,
    frame_ms: float = 20.0,
    fillers=DEFAULT_FILLERS,
) -> list[FeaturePair]:
    """Per-chunk feature pairs for every complete second on the grid.

    Acoustic (10): per-channel log-RMS, per-channel voiced fraction at
    ``frame_ms`` frames, both-voiced overlap fraction, per-channel
    zero-crossing rate, min/max inter-channel energy ratio, per-channel
    log-RMS delta against the previous chunk (0 for the first).

    Semantic (7): token count, filler fraction, question-mark indicator,
    imperative-lexicon fraction, first-/second-person pronoun fractions,
    cumulative type-token ratio. All zeros when ``transcripts`` is None;
    ``transcripts`` is one raw text string per second.
    """
    if grid.n_chunks == 0:
        return []
    if transcripts is not None and len(transcripts) < grid.n_chunks:
        raise ValueError(
            f"{len(transcripts)} transcript seconds for {grid.n_chunks} chunks")
    mask = compute_vad(audio, frame_ms=frame_ms, threshold=vad_threshold)
    frame_len = int(round(audio.sample_rate * frame_ms / 1000.0))

    features = []
    prev_log = (0.0, 0.0)
    seen_types: set = set()
    totals = [0]
    for i in range(1, grid.n_chunks + 1):
        lo, hi = grid.sample_span(i)
        seg_l = audio.left[lo:hi]
        seg_r = audio.right[lo:hi]
        rms_l = float(np.sqrt(np.mean(seg_l * seg_l)))
        rms_r = float(np.sqrt(np.mean(seg_r * seg_r)))
        log_l = float(np.log(rms_l + LOG_EPS))
        log_r = float(np.log(rms_r + LOG_EPS))
        f0 = -(-lo // frame_len)  # first frame fully inside the chunk
        f1 = min(hi // frame_len, mask.n_frames)
        if f1 > f0:
            vl = mask.left[f0:f1]
            vr = mask.right[f0:f1]
            voiced_l = float(vl.mean())
            voiced_r = float(vr.mean())
            overlap = float((vl & vr).mean())
        else:
            voiced_l = voiced_r = overlap = 0.0
        ratio = (min(rms_l, rms_r) + LOG_EPS) / (max(rms_l, rms_r) + LOG_EPS)
        delta_l = log_l - prev_log[0] if i > 1 else 0.0
        delta_r = log_r - prev_log[1] if i > 1 else 0.0
        prev_log = (log_l, log_r)
        acoustic = np.array([
            log_l, log_r, voiced_l, voiced_r, overlap,
            _zcr(seg_l), _zcr(seg_r), ratio, delta_l, delta_r,
        ])
        if transcripts is None:
            semantic = np.zeros(SEMANTIC_DIM)
        else:
            semantic = _semantic_vector(transcripts[i - 1], seen_types, totals,
                                        fillers)
        features.append(FeaturePair(acoustic=acoustic, semantic=semantic))
    return features


# ---------------------------------------------------------------------------
# model parameters

CONTEXT_MODES = ("none", "ema", "attention")


@dataclass
class DetectorParams:
    """Gate, projections, context config, and the two head matrices."""

    mode: str
    gamma: float
    w_gate_a: np.ndarray
    w_gate_s: np.ndarray
    proj_a: np.ndarray
    proj_s: np.ndarray
    w_hi: np.ndarray
    b_hi: np.ndarray
    w_lo: np.ndarray
    b_lo: np.ndarray
    attn_q: np.ndarray | None = None
    attn_k: np.ndarray | None = None
    attn_v: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in CONTEXT_MODES:
            raise ValueError(f"unknown context mode {self.mode!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        d = self.proj_a.shape[0]
        d_a = self.proj_a.shape[1]
        d_s = self.proj_s.shape[1]
        expected = {
            "w_gate_a": (d, d_a), "w_gate_s": (d, d_s),
            "proj_a": (d, d_a), "proj_s": (d, d_s),
            "w_hi": (N_HIGH, d), "b_hi": (N_HIGH,),
            "w_lo": (self.w_lo.shape[0], d), "b_lo": (self.w_lo.shape[0],),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, "
                                 f"expected {shape}")
        if self.w_lo.shape[0] not in (3, 4):
            raise ValueError("low head must have 3 or 4 classes")
        if self.mode == "attention":
            for name in ("attn_q", "attn_k", "attn_v"):
                mat = getattr(self, name)
                if mat is None or mat.shape != (d, d):
                    raise ValueError(f"{name} must be a {d}x{d} matrix in attention mode")

    @property
    def d_model(self) -> int:
        return self.proj_a.shape[0]

    @property
    def d_acoustic(self) -> int:
        return self.proj_a.shape[1]

    @property
    def d_semantic(self) -> int:
        return self.proj_s.shape[1]

    @property
    def n_lo_classes(self) -> int:
        return self.w_lo.shape[0]

    def trainable_names(self) -> tuple:
        names = ("w_gate_a", "w_gate_s", "proj_a", "proj_s",
                 "w_hi", "b_hi", "w_lo", "b_lo")
        if self.mode == "attention":
            names = names + ("attn_q", "attn_k", "attn_v")
        return names


def init_params(
    d_acoustic: int,
    d_semantic: int,
    d_model: int = 16,
    n_lo_classes: int = 4,
    mode: str = "none",
    gamma: float = 0.9,
    seed: int = 42,
) -> DetectorParams:
    """Seeded Gaussian init, scaled by 1/sqrt(fan-in); biases start at zero."""
    rng = np.random.default_rng(seed)

    def mat(rows, cols):
        return rng.standard_normal((rows, cols)) / np.sqrt(cols)

    attn = {}
    if mode == "attention":
        attn = {
            "attn_q": mat(d_model, d_model),
            "attn_k": mat(d_model, d_model),
            "attn_v": mat(d_model, d_model),
        }
    return DetectorParams(
        mode=mode,
        gamma=gamma,
        w_gate_a=mat(d_model, d_acoustic),
        w_gate_s=mat(d_model, d_semantic),
        proj_a=mat(d_model, d_acoustic),
        proj_s=mat(d_model, d_semantic),
        w_hi=mat(N_HIGH, d_model),
        b_hi=np.zeros(N_HIGH),
        w_lo=mat(n_lo_classes, d_model),
        b_lo=np.zeros(n_lo_classes),
        **attn,
    )


# ---------------------------------------------------------------------------
# forward / backward

def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _stack(features) -> tuple[np.ndarray, np.ndarray]:
    if not features:
        raise ValueError("empty feature sequence")
    A = np.stack([f.acoustic for f in features])
    S = np.stack([f.semantic for f in features])
    return A, S


def _forward(params: DetectorParams, A: np.ndarray, S: np.ndarray) -> dict:
    if A.shape[1] != params.d_acoustic or S.shape[1] != params.d_semantic:
        raise ValueError(
            f"feature dims ({A.shape[1]}, {S.shape[1]}) do not match params "
            f"({params.d_acoustic}, {params.d_semantic})")
    G = A @ params.w_gate_a.T + S @ params.w_gate_s.T
    lam = expit(G)
    U = A @ params.proj_a.T
    V = S @ params.proj_s.T
    F = (1.0 - lam) * U + lam * V
    cache = {"A": A, "S": S, "G": G, "lam": lam, "U": U, "V": V, "F": F}
    if params.mode == "none":
        Z = F
    elif params.mode == "ema":
        Z = np.empty_like(F)
        Z[0] = F[0]
        for i in range(1, len(F)):
            Z[i] = (1.0 - params.gamma) * F[i] + params.gamma * Z[i - 1]
    else:
        n, d = F.shape
        Qf = F @ params.attn_q.T
        Kf = F @ params.attn_k.T
        Vf = F @ params.attn_v.T
        scores = (Qf @ Kf.T) / np.sqrt(d)
        mask = np.tril(np.ones((n, n), dtype=bool))
        scores = np.where(mask, scores, -np.inf)
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        alpha = e / e.sum(axis=1, keepdims=True)
        Z = F + alpha @ Vf
        cache.update({"Qf": Qf, "Kf": Kf, "Vf": Vf, "alpha": alpha})
    cache["Z"] = Z
    cache["logits_hi"] = Z @ params.w_hi.T + params.b_hi
    cache["logits_lo"] = Z @ params.w_lo.T + params.b_lo
    cache["p_hi"] = _softmax(cache["logits_hi"])
    cache["p_lo"] = _softmax(cache["logits_lo"])
    return cache


def predict_probs(params: DetectorParams, features) -> tuple[np.ndarray, np.ndarray]:
    """Full-sequence posteriors (n, 4) and (n, k) under the causal context."""
    A, S = _stack(features)
    cache = _forward(params, A, S)
    return cache["p_hi"], cache["p_lo"]


def _label_arrays(timeline, n_lo_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gold labels as int arrays, -1 where missing."""
    y_hi, y_lo = [], []
    for p in timeline:
        y_hi.append(int(p.hi) if p.hi is not None else -1)
        y_lo.append(low_index(p.lo, n_lo_classes) if p.lo is not None else -1)
    return np.array(y_hi, dtype=np.int64), np.array(y_lo, dtype=np.int64)


def _head_loss_grad(p, y, class_w, scale):
    """Weighted NLL over labeled rows and its gradient w.r.t. the logits."""
    n = len(y)
    labeled = y >= 0
    loss = 0.0
    dlogits = np.zeros_like(p)
    if labeled.any():
        rows = np.flatnonzero(labeled)
        gold = y[rows]
        w = scale * class_w[gold]
        picked = np.clip(p[rows, gold], P_CLAMP, None)
        loss = float(np.sum(w * -np.log(picked)))
        dlogits[rows] = w[:, None] * p[rows]
        dlogits[rows, gold] -= w
    return loss, dlogits


def loss_and_grads(
    params: DetectorParams, features, timeline, weights: ClassWeights,
    alpha: float | None = None, beta: float | None = None,
) -> tuple[float, dict]:
    """Class-weighted cross entropy over the sequence and analytic gradients
    for every trainable matrix. Seconds with a missing label skip that head."""
    if weights.n_lo_classes != params.n_lo_classes:
        raise ValueError("weights and params disagree on low-class count")
    points = list(timeline)
    if len(points) != len(features):
        raise ValueError(f"{len(features)} features for {len(points)} labeled seconds")
    alpha = weights.alpha if alpha is None else alpha
    beta = weights.beta if beta is None else beta
    A, S = _stack(features)
    cache = _forward(params, A, S)
    y_hi, y_lo = _label_arrays(points, params.n_lo_classes)

    loss_hi, dlogits_hi = _head_loss_grad(cache["p_hi"], y_hi, weights.w_hi, alpha)
    loss_lo, dlogits_lo = _head_loss_grad(cache["p_lo"], y_lo, weights.w_lo, beta)
    loss = loss_hi + loss_lo

    Z = cache["Z"]
    grads = {
        "w_hi": dlogits_hi.T @ Z, "b_hi": dlogits_hi.sum(axis=0),
        "w_lo": dlogits_lo.T @ Z, "b_lo": dlogits_lo.sum(axis=0),
    }
    dZ = dlogits_hi @ params.w_hi + dlogits_lo @ params.w_lo

    F = cache["F"]
    if params.mode == "none":
        dF = dZ
    elif params.mode == "ema":
        g = params.gamma
        dF = np.empty_like(dZ)
        carry = np.zeros(dZ.shape[1])
        for i in range(len(dZ) - 1, 0, -1):
            carry = dZ[i] + g * carry
            dF[i] = (1.0 - g) * carry
        dF[0] = dZ[0] + g * carry
    else:
        alpha_w = cache["alpha"]
        Qf, Kf, Vf = cache["Qf"], cache["Kf"], cache["Vf"]
        d = F.shape[1]
        dF = dZ.copy()
        dC = dZ
        dAlpha = dC @ Vf.T
        dVf = alpha_w.T @ dC
        # softmax rows: masked positions have alpha 0, hence zero gradient
        dScores = alpha_w * (dAlpha - np.sum(alpha_w * dAlpha, axis=1, keepdims=True))
        dQf = dScores @ Kf / np.sqrt(d)
        dKf = dScores.T @ Qf / np.sqrt(d)
        grads["attn_q"] = dQf.T @ F
        grads["attn_k"] = dKf.T @ F
        grads["attn_v"] = dVf.T @ F
        dF += dQf @ params.attn_q + dKf @ params.attn_k + dVf @ params.attn_v

    lam, U, V = cache["lam"], cache["U"], cache["V"]
    dLam = dF * (V - U)
    dU = dF * (1.0 - lam)
    dV = dF * lam
    dG = dLam * lam * (1.0 - lam)
    grads["w_gate_a"] = dG.T @ A
    grads["w_gate_s"] = dG.T @ S
    grads["proj_a"] = dU.T @ A
    grads["proj_s"] = dV.T @ S
    return loss, grads


def loss_value(params: DetectorParams, features, timeline, weights: ClassWeights,
               alpha: float | None = None, beta: float | None = None) -> float:
    points = list(timeline)
    alpha = weights.alpha if alpha is None else alpha
    beta = weights.beta if beta is None else beta
    A, S = _stack(features)
    cache = _forward(params, A, S)
    y_hi, y_lo = _label_arrays(points, params.n_lo_classes)
    loss_hi, _ = _head_loss_grad(cache["p_hi"], y_hi, weights.w_hi, alpha)
    loss_lo, _ = _head_loss_grad(cache["p_lo"], y_lo, weights.w_lo, beta)
    return loss_hi + loss_lo


def grad_check(params: DetectorParams, features, timeline, weights: ClassWeights,
               eps: float = 1e-5) -> float:
    """Max relative disagreement between analytic gradients and central
    finite differences, over every entry of every trainable parameter."""
    _, grads = loss_and_grads(params, features, timeline, weights)
    worst = 0.0
    for name in params.trainable_names():
        mat = getattr(params, name)
        flat = mat.reshape(-1)
        g_flat = grads[name].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss_value(params, features, timeline, weights)
            flat[idx] = orig - eps
            down = loss_value(params, features, timeline, weights)
            flat[idx] = orig
            fd = (up - down) / (2.0 * eps)
            rel = abs(g_flat[idx] - fd) / max(1e-8, abs(g_flat[idx]) + abs(fd))
            worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainConfig:
    learning_rate: float = 3e-4
    epochs: int = 10
    seed: int = 42
    alpha: float = 1.0
    beta: float = 1.0
    grad_clip: float = 1.0
    context: str = "none"
    gamma: float = 0.9
    d_model: int = 16
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.context not in CONTEXT_MODES:
            raise ValueError(f"unknown context mode {self.context!r}")
        if self.epochs < 0 or self.learning_rate < 0 or self.grad_clip <= 0:
            raise ValueError("epochs/learning_rate must be >= 0, grad_clip > 0")


@dataclass
class TrainResult:
    params: DetectorParams
    losses: list
    config: TrainConfig


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, losses: list):
        super().__init__(
            f"non-finite loss at epoch {epoch}; trace: {losses[-5:]}")
        self.epoch = epoch
        self.losses = losses


def train(features, timeline, weights: ClassWeights, config: TrainConfig) -> TrainResult:
    """Full-batch gradient descent with global gradient-norm clipping.

    The loss trace holds one entry per epoch (pre-update) plus the final
    post-training loss. A non-finite loss aborts with the trace attached.
    """
    if not features:
        raise ValueError("empty feature sequence")
    params = init_params(
        d_acoustic=len(features[0].acoustic),
        d_semantic=len(features[0].semantic),
        d_model=config.d_model,
        n_lo_classes=weights.n_lo_classes,
        mode=config.context,
        gamma=config.gamma,
        seed=config.seed,
    )
    losses: list[float] = []
    for epoch in range(config.epochs):
        loss, grads = loss_and_grads(params, features, timeline, weights,
                                     alpha=config.alpha, beta=config.beta)
        if not np.isfinite(loss):
            raise TrainingDiverged(epoch, losses + [loss])
        losses.append(loss)
        if config.weight_decay:
            for name in params.trainable_names():
                grads[name] = grads[name] + config.weight_decay * getattr(params, name)
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        scale = config.grad_clip / norm if norm > config.grad_clip else 1.0
        for name in params.trainable_names():
            getattr(params, name)[...] -= config.learning_rate * scale * grads[name]
    final = loss_value(params, features, timeline, weights,
                       alpha=config.alpha, beta=config.beta)
    if not np.isfinite(final):
        raise TrainingDiverged(config.epochs, losses + [final])
    losses.append(final)
    return TrainResult(params=params, losses=losses, config=config)


# ---------------------------------------------------------------------------
# streaming inference

def window_features(
    audio: DuplexAudio,
    index: int,
    window_s: float,
    lookahead_s: float,
    transcripts=None,
    vad_threshold: float = 0.1,
    frame_ms: float = 20.0,
    fillers=DEFAULT_FILLERS,
) -> list[FeaturePair]:
    """Features of the complete chunks inside second ``index``'s causal
    window, computed from that slice alone. Empty when the window holds no
    complete chunk (the very first second with no lookahead)."""
    win = causal_window(audio, index, window_s, lookahead_s)
    rate = audio.sample_rate
    if win.n_samples < rate:
        return []
    sub = DuplexAudio(rate, audio.left[win.start:win.end],
                      audio.right[win.start:win.end])
    grid = chunk(sub)
    sub_transcripts = None
    if transcripts is not None:
        first = win.start // rate
        sub_transcripts = [
            transcripts[first + j] if first + j < len(transcripts) else ""
            for j in range(grid.n_chunks)
        ]
    return extract_features(sub, grid, sub_transcripts,
                            vad_threshold=vad_threshold, frame_ms=frame_ms,
                            fillers=fillers)


def infer_stream(
    audio: DuplexAudio,
    transcripts,
    params: DetectorParams,
    window_s: float = 30.0,
    lookahead_s: float = 0.0,
    vad_threshold: float = 0.1,
    frame_ms: float = 20.0,
    fillers=DEFAULT_FILLERS,
    audio_id: str = "audio",
) -> LabelTimeline:
    """Argmax labels and posteriors for every complete second of the stream.

    Second i sees only its causal window: features, VAD normalization, and
    the context aggregation all run inside the window slice, and the last
    position's posteriors are emitted. A window with no complete chunk
    contributes a single all-zero feature pair.
    """
    grid = chunk(audio)
    lo_classes = low_act_classes(params.n_lo_classes)
    points = []
    for i in range(1, grid.n_chunks + 1):
        feats = window_features(audio, i, window_s, lookahead_s, transcripts,
                                vad_threshold=vad_threshold, frame_ms=frame_ms,
                                fillers=fillers)
        if not feats:
            feats = [FeaturePair(np.zeros(params.d_acoustic),
                                 np.zeros(params.d_semantic))]
        A, S = _stack(feats)
        cache = _forward(params, A, S)
        p_hi = cache["p_hi"][-1]
        p_lo = cache["p_lo"][-1]
        points.append(TimelinePoint(
            t=i - 1,
            hi=HighAct(int(p_hi.argmax())),
            lo=lo_classes[int(p_lo.argmax())],
            p_hi=p_hi,
            p_lo=p_lo,
        ))
    return LabelTimeline(audio_id=audio_id, points=points)


# ---------------------------------------------------------------------------
# serialization

_CANONICAL_JSON = {"sort_keys": True, "separators": (",", ":")}


def params_to_json(params: DetectorParams) -> str:
    matrices = {}
    for name in params.trainable_names():
        mat = getattr(params, name)
        matrices[name] = {"shape": list(mat.shape),
                          "data": [float(v) for v in mat.reshape(-1)]}
    obj = {
        "kind": "detector-params",
        "version": 1,
        "mode": params.mode,
        "gamma": params.gamma,
        "d_model": params.d_model,
        "d_acoustic": params.d_acoustic,
        "d_semantic": params.d_semantic,
        "n_lo_classes": params.n_lo_classes,
        "matrices": matrices,
    }
    return json.dumps(obj, **_CANONICAL_JSON)


def save_params(params: DetectorParams, path) -> None:
    with open(path, "w") as fh:
        fh.write(params_to_json(params) + "\n")


def load_params(path) -> DetectorParams:
    with open(path) as fh:
        obj = json.load(fh)
    if obj.get("kind") != "detector-params":
        raise ValueError(f"{path} is not a detector checkpoint")
    mats = {}
    for name, rec in obj["matrices"].items():
        arr = np.array(rec["data"], dtype=np.float64)
        mats[name] = arr.reshape(rec["shape"])
    return DetectorParams(mode=obj["mode"], gamma=obj["gamma"], **mats)


def write_features(feature_map, path) -> None:
    """feature_map: mapping audio_id -> list[FeaturePair]."""
    with open(path, "w") as fh:
        for audio_id, feats in feature_map.items():
            for t, f in enumerate(feats):
                fh.write(json.dumps({
                    "audio_id": audio_id, "t": t,
                    "acoustic": [float(v) for v in f.acoustic],
                    "semantic": [float(v) for v in f.semantic],
                }) + "\n")


def read_features(path) -> "OrderedDict[str, list[FeaturePair]]":
    """Feature JSONL import (for externally computed embeddings); per audio,
    t must run 0, 1, 2, ... and vector sizes must be consistent."""
    groups: OrderedDict[str, list] = OrderedDict()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                item = (int(rec["t"]), FeaturePair(rec["acoustic"], rec["semantic"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed feature record: {exc}") from exc
            groups.setdefault(rec["audio_id"], []).append(item)
    out: OrderedDict[str, list[FeaturePair]] = OrderedDict()
    for audio_id, items in groups.items():
        items.sort(key=lambda it: it[0])
        feats = [f for _, f in items]
        if [t for t, _ in items] != list(range(len(items))):
            raise ValueError(f"{path}: {audio_id}: t values not consecutive from 0")
        dims = {(len(f.acoustic), len(f.semantic)) for f in feats}
        if len(dims) > 1:
            raise ValueError(f"{path}: {audio_id}: inconsistent feature dims {dims}")
        out[audio_id] = feats
    return out


def write_inference(timelines, path) -> None:
    """Posterior-carrying timeline records {audio_id, t, hi, lo, p_hi, p_lo}."""
    with open(path, "w") as fh:
        for tl in timelines:
            for p in tl.points:
                fh.write(json.dumps({
                    "audio_id": tl.audio_id,
                    "t": p.t,
                    "hi": HIGH_NAMES[p.hi] if p.hi is not None else None,
                    "lo": LOW_NAMES[p.lo] if p.lo is not None else None,
                    "p_hi": [float(v) for v in p.p_hi] if p.p_hi is not None else None,
                    "p_lo": [float(v) for v in p.p_lo] if p.p_lo is not None else None,
                }) + "\n")


def read_inference(path) -> "OrderedDict[str, LabelTimeline]":
    groups: OrderedDict[str, list[TimelinePoint]] = OrderedDict()
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                point = TimelinePoint(
                    t=int(rec["t"]),
                    hi=high_from_name(rec["hi"]) if rec.get("hi") is not None else None,
                    lo=low_from_name(rec["lo"]) if rec.get("lo") is not None else None,
                    p_hi=np.array(rec["p_hi"]) if rec.get("p_hi") is not None else None,
                    p_lo=np.array(rec["p_lo"]) if rec.get("p_lo") is not None else None,
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed record: {exc}") from exc
            groups.setdefault(rec["audio_id"], []).append(point)
    out: OrderedDict[str, LabelTimeline] = OrderedDict()
    for audio_id, points in groups.items():
        points.sort(key=lambda p: p.t)
        out[audio_id] = LabelTimeline(audio_id=audio_id, points=points)
    return out
