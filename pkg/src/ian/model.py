"""Model variants for aspect-level sentiment classification.

The full model ("ian") encodes the sentence and the aspect term with two
LSTMs, averages each side, attends each sequence with the other side's
average as the query, concatenates the two pooled vectors and classifies
with a tanh layer plus softmax.

Ablations share the same pieces wired differently:

  no_target       one LSTM over the sentence, attended with the average of
                  the raw target word embeddings; classifier sees only the
                  pooled sentence vector.
  no_interaction  both LSTMs, but each side is attended by its own average
                  instead of the other side's.
  target2content  sentence attended by the target average; the target side
                  contributes its plain LSTM average, unattended.
  lstm_avg        one LSTM over the sentence, mean-pooled, no attention.
  td_lstm         two LSTMs meeting at the target: left-to-right up to the
                  end of the target span, right-to-left down to its start;
                  final hidden states are concatenated.
  majority        predicts the training label distribution, ignoring text.

Class order everywhere: positive=0, neutral=1, negative=2.
"""

from __future__ import annotations

import json

import numpy as np

from .attention import AttentionParams, attend
from .embeddings import PAD_INDEX, PAD_TOKEN, Vocabulary, lookup, random_embeddings
from .lstm import LstmParams, lstm_forward
from .numerics import Rng, softmax_stable, tanh, uniform_init

LABELS = ("positive", "neutral", "negative")
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}

VARIANTS = (
    "ian",
    "no_target",
    "no_interaction",
    "target2content",
    "lstm_avg",
    "td_lstm",
    "majority",
)

# which structural pieces each variant owns
_HAS_TGT_LSTM = {"ian", "no_interaction", "target2content", "td_lstm"}
_HAS_CTX_ATTN = {"ian", "no_target", "no_interaction", "target2content"}
_HAS_TGT_ATTN = {"ian", "no_interaction"}
_TWO_PART_FEATURES = {"ian", "no_interaction", "target2content", "td_lstm"}

CHECKPOINT_FORMAT = 1


class ModelParams:
    """All trainable arrays for one variant, plus the vocabulary.

    Construction draws from the rng in a fixed order (embeddings, context
    LSTM, target LSTM, context attention, target attention, classifier),
    so a given seed and configuration always yields the same model.
    """

    def __init__(
        self,
        rng: Rng,
        vocab: Vocabulary,
        variant: str = "ian",
        embed_dim: int = 300,
        hidden_dim: int = 300,
        n_classes: int = len(LABELS),
        tie_attention: bool = False,
        embeddings=None,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
        if tie_attention and variant not in _HAS_TGT_ATTN:
            raise ValueError(f"variant {variant!r} has no second attention to tie")
        self.variant = variant
        self.vocab = vocab
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.n_classes = n_classes
        self.tie_attention = tie_attention

        self.embeddings = None
        self.ctx_lstm = None
        self.tgt_lstm = None
        self.ctx_attn = None
        self.tgt_attn = None
        self.W_l = None
        self.b_l = None
        self.class_priors = None

        if variant == "majority":
            self.class_priors = np.full(n_classes, 1.0 / n_classes)
            return

        if embeddings is not None:
            embeddings = np.asarray(embeddings, dtype=np.float64)
            if embeddings.shape != (len(vocab), embed_dim):
                raise ValueError(
                    f"embedding table shape {embeddings.shape} does not match "
                    f"vocab {len(vocab)} x dim {embed_dim}"
                )
            self.embeddings = embeddings.copy()
            self.embeddings[PAD_INDEX] = 0.0
        else:
            self.embeddings = random_embeddings(rng, vocab, embed_dim)

        self.ctx_lstm = LstmParams(rng, embed_dim, hidden_dim)
        if variant in _HAS_TGT_LSTM:
            self.tgt_lstm = LstmParams(rng, embed_dim, hidden_dim)
        if variant in _HAS_CTX_ATTN:
            # the no_target query is an embedding average, so its score
            # matrix is hidden_dim x embed_dim instead of square
            qdim = embed_dim if variant == "no_target" else hidden_dim
            self.ctx_attn = AttentionParams(rng, hidden_dim, qdim)
        if variant in _HAS_TGT_ATTN:
            if tie_attention:
                self.tgt_attn = self.ctx_attn
            else:
                self.tgt_attn = AttentionParams(rng, hidden_dim, hidden_dim)

        feat = self.feature_dim()
        self.W_l = uniform_init(rng, n_classes, feat)
        self.b_l = np.zeros(n_classes)

    def feature_dim(self) -> int:
        if self.variant in _TWO_PART_FEATURES:
            return 2 * self.hidden_dim
        return self.hidden_dim

    def named_arrays(self, trainable_only: bool = True):
        """Yield (name, array) for every distinct parameter array.

        Tied attention arrays appear once, under the context name.
        """
        if self.embeddings is not None:
            yield "embeddings", self.embeddings
        if self.ctx_lstm is not None:
            yield from self.ctx_lstm.named_arrays("ctx_lstm.")
        if self.tgt_lstm is not None:
            yield from self.tgt_lstm.named_arrays("tgt_lstm.")
        if self.ctx_attn is not None:
            yield from self.ctx_attn.named_arrays("ctx_attn.")
        if self.tgt_attn is not None and self.tgt_attn is not self.ctx_attn:
            yield from self.tgt_attn.named_arrays("tgt_attn.")
        if self.W_l is not None:
            yield "W_l", self.W_l
            yield "b_l", self.b_l
        if not trainable_only and self.class_priors is not None:
            yield "class_priors", self.class_priors

    def weight_matrix_names(self):
        """Names of the arrays subject to weight decay (2-D maps only:
        no biases, and embeddings are handled row-wise elsewhere)."""
        return [
            name
            for name, arr in self.named_arrays()
            if arr.ndim == 2 and name != "embeddings"
        ]


def masked_mean(rows: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Mean over the rows where mask is True."""
    count = int(mask.sum())
    if count == 0:
        raise ValueError("masked_mean over an empty selection")
    return rows[mask].sum(axis=0) / count


def _classify(params: ModelParams, features: np.ndarray, dropout_mask, trace: dict):
    if dropout_mask is not None:
        dropped = features * dropout_mask
    else:
        dropped = features
    x = tanh(params.W_l @ dropped + params.b_l)
    probs = softmax_stable(x)
    trace.update(
        features=features, dropout_mask=dropout_mask, dropped=dropped, x=x, probs=probs
    )
    return probs


def forward(params: ModelParams, ctx_idx, tgt_idx, span=None, dropout_mask=None):
    """Run one instance through the model.

    ctx_idx / tgt_idx are int index arrays (padding index 0 allowed and
    masked out); span is the (start, end) token range of the target inside
    the context, needed only by td_lstm. dropout_mask, when given, is a
    feature_dim vector multiplied onto the classifier input (training
    only). Returns (probs, trace).
    """
    variant = params.variant
    if variant == "majority":
        return params.class_priors.copy(), {"variant": variant}

    ctx_idx = np.asarray(ctx_idx, dtype=np.int64)
    tgt_idx = np.asarray(tgt_idx, dtype=np.int64)
    ctx_mask = ctx_idx != PAD_INDEX
    trace = {"variant": variant, "ctx_idx": ctx_idx, "tgt_idx": tgt_idx,
             "ctx_mask": ctx_mask, "span": span}

    ctx_emb = lookup(params.embeddings, ctx_idx)

    if variant == "td_lstm":
        if span is None:
            raise ValueError("td_lstm needs the target span inside the context")
        start, end = span
        left = ctx_emb[:end]
        right = ctx_emb[start:][::-1]
        left_h, left_trace = lstm_forward(params.ctx_lstm, left)
        right_h, right_trace = lstm_forward(params.tgt_lstm, right)
        features = np.concatenate([left_h[-1], right_h[-1]])
        trace.update(ctx_emb=ctx_emb, left_trace=left_trace, right_trace=right_trace,
                     left_len=left.shape[0], right_len=right.shape[0])
        probs = _classify(params, features, dropout_mask, trace)
        return probs, trace

    ctx_h, ctx_lstm_trace = lstm_forward(params.ctx_lstm, ctx_emb)
    trace.update(ctx_emb=ctx_emb, ctx_lstm_trace=ctx_lstm_trace, ctx_h=ctx_h)

    if variant == "lstm_avg":
        features = masked_mean(ctx_h, ctx_mask)
        probs = _classify(params, features, dropout_mask, trace)
        return probs, trace

    tgt_mask = tgt_idx != PAD_INDEX
    tgt_emb = lookup(params.embeddings, tgt_idx)
    trace.update(tgt_mask=tgt_mask, tgt_emb=tgt_emb)

    if variant == "no_target":
        query = masked_mean(tgt_emb, tgt_mask)
        c_r, ctx_weights, ctx_attn_trace = attend(params.ctx_attn, ctx_h, query, ctx_mask)
        trace.update(tgt_emb_avg=query, ctx_attn_trace=ctx_attn_trace, ctx_weights=ctx_weights)
        probs = _classify(params, c_r, dropout_mask, trace)
        return probs, trace

    tgt_h, tgt_lstm_trace = lstm_forward(params.tgt_lstm, tgt_emb)
    c_avg = masked_mean(ctx_h, ctx_mask)
    t_avg = masked_mean(tgt_h, tgt_mask)
    trace.update(tgt_lstm_trace=tgt_lstm_trace, tgt_h=tgt_h, c_avg=c_avg, t_avg=t_avg)

    if variant == "ian":
        c_r, ctx_weights, ctx_attn_trace = attend(params.ctx_attn, ctx_h, t_avg, ctx_mask)
        t_r, tgt_weights, tgt_attn_trace = attend(params.tgt_attn, tgt_h, c_avg, tgt_mask)
    elif variant == "no_interaction":
        c_r, ctx_weights, ctx_attn_trace = attend(params.ctx_attn, ctx_h, c_avg, ctx_mask)
        t_r, tgt_weights, tgt_attn_trace = attend(params.tgt_attn, tgt_h, t_avg, tgt_mask)
    elif variant == "target2content":
        c_r, ctx_weights, ctx_attn_trace = attend(params.ctx_attn, ctx_h, t_avg, ctx_mask)
        t_r, tgt_weights, tgt_attn_trace = t_avg, None, None
    else:  # pragma: no cover - VARIANTS is closed above
        raise ValueError(f"unhandled variant {variant!r}")

    trace.update(ctx_attn_trace=ctx_attn_trace, tgt_attn_trace=tgt_attn_trace,
                 ctx_weights=ctx_weights, tgt_weights=tgt_weights, c_r=c_r, t_r=t_r)
    features = np.concatenate([c_r, t_r])
    probs = _classify(params, features, dropout_mask, trace)
    return probs, trace


def predict_index(params: ModelParams, ctx_idx, tgt_idx, span=None) -> int:
    """Label index of the most probable class (lowest index on ties)."""
    probs, _ = forward(params, ctx_idx, tgt_idx, span=span)
    return int(np.argmax(probs))


def touched_rows(ctx_idx, tgt_idx) -> np.ndarray:
    """Distinct non-pad embedding rows an instance reads."""
    both = np.concatenate([np.asarray(ctx_idx), np.asarray(tgt_idx)])
    rows = np.unique(both)
    return rows[rows != PAD_INDEX]


def save_checkpoint(path: str, params: ModelParams, config: dict | None = None):
    """Write every parameter array plus a json metadata record to one npz."""
    arrays = {name: arr for name, arr in params.named_arrays(trainable_only=False)}
    meta = {
        "format": CHECKPOINT_FORMAT,
        "variant": params.variant,
        "tie_attention": params.tie_attention,
        "embed_dim": params.embed_dim,
        "hidden_dim": params.hidden_dim,
        "n_classes": params.n_classes,
        "vocab": list(params.vocab.tokens) if params.embeddings is not None else [],
        "config": config or {},
    }
    arrays["__meta__"] = np.array(json.dumps(meta))
    np.savez(path, **arrays)


def load_checkpoint(path: str):
    """Rebuild (params, meta) from a checkpoint written by save_checkpoint."""
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["__meta__"]))
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {meta.get('format')!r}")
    tokens = meta["vocab"]
    if tokens:
        if tokens[0] != PAD_TOKEN:
            raise ValueError("checkpoint vocabulary does not start with the pad token")
        vocab = Vocabulary(tokens[1:])
    else:
        vocab = Vocabulary()
    params = ModelParams(
        Rng(0),
        vocab,
        variant=meta["variant"],
        embed_dim=meta["embed_dim"],
        hidden_dim=meta["hidden_dim"],
        n_classes=meta["n_classes"],
        tie_attention=meta["tie_attention"],
    )
    for name, arr in params.named_arrays(trainable_only=False):
        if name not in data:
            raise ValueError(f"checkpoint is missing array {name!r}")
        stored = data[name]
        if stored.shape != arr.shape:
            raise ValueError(
                f"checkpoint array {name!r} has shape {stored.shape}, expected {arr.shape}"
            )
        arr[...] = stored
    return params, meta
