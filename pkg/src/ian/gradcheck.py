"""Finite-difference verification of the hand-derived backward pass.

Compares every analytic parameter gradient of the one-case training loss
against central differences, grouped by component, and reports the worst
relative error per group. A deliberate-corruption hook exists so tests can
prove the check actually catches wrong gradients.
"""

from __future__ import annotations

import time

import numpy as np

from .embeddings import Vocabulary
from .model import ModelParams
from .numerics import Rng
from .training import case_loss, loss_and_grads

GROUPS = ("embeddings", "ctx_lstm", "tgt_lstm", "ctx_attn", "tgt_attn", "classifier")


def group_of(name: str) -> str:
    if name == "embeddings":
        return "embeddings"
    if name in ("W_l", "b_l"):
        return "classifier"
    return name.split(".", 1)[0]


def numeric_gradient(objective, arr: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar objective() w.r.t. arr, in place."""
    grad = np.zeros_like(arr)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        arr[idx] = old + eps
        hi = objective()
        arr[idx] = old - eps
        lo = objective()
        arr[idx] = old
        grad[idx] = (hi - lo) / (2.0 * eps)
    return grad


def worst_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradient_check(params: ModelParams, ctx_idx, tgt_idx, span, label,
                   l2: float = 0.0, eps: float = 1e-5,
                   corrupt_group: str | None = None, corrupt_scale: float = 2.0,
                   details: dict | None = None):
    """Max relative error of analytic vs numeric gradients, per group.

    corrupt_group scales that group's analytic gradients so the check must
    flag it; leave it None for a real verification. When a details dict is
    passed, it is filled with the worst coordinate per group as
    (parameter name, index, analytic, numeric).
    """
    _, grads = loss_and_grads(params, ctx_idx, tgt_idx, span, label, l2=l2)
    if corrupt_group is not None:
        if corrupt_group not in GROUPS:
            raise ValueError(f"unknown gradient group {corrupt_group!r}")
        for name, arr in grads.arrays():
            if group_of(name) == corrupt_group:
                arr *= corrupt_scale

    def objective():
        return case_loss(params, ctx_idx, tgt_idx, span, label, l2=l2)

    errors: dict[str, float] = {}
    for name, arr in params.named_arrays():
        numeric = numeric_gradient(objective, arr, eps=eps)
        analytic = grads[name]
        err = worst_relative_error(analytic, numeric)
        group = group_of(name)
        if err >= errors.get(group, -1.0):
            errors[group] = max(errors.get(group, 0.0), err)
            if details is not None:
                denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
                rel = np.abs(analytic - numeric) / denom
                idx = np.unravel_index(int(np.argmax(rel)), rel.shape) if rel.shape else ()
                details[group] = (name, idx, float(np.asarray(analytic)[idx]),
                                  float(np.asarray(numeric)[idx]))
    return errors


def check_tiny_model(seed: int, embed_dim: int, hidden_dim: int,
                     n_ctx: int = 4, n_tgt: int = 2, vocab_size: int = 8,
                     variant: str = "ian", tie_attention: bool = False,
                     l2: float = 0.01, eps: float = 1e-5,
                     corrupt_group: str | None = None, details: dict | None = None):
    """Build a small random model and instance, then run gradient_check.

    Returns (errors, elapsed_seconds). The instance's target words are a
    slice of the context so every variant, span included, is exercised.
    """
    rng = Rng(seed)
    vocab = Vocabulary([f"w{i}" for i in range(vocab_size)])
    params = ModelParams(rng, vocab, variant=variant, embed_dim=embed_dim,
                         hidden_dim=hidden_dim, tie_attention=tie_attention)
    ctx_idx = rng.integers(1, vocab_size + 1, n_ctx)
    start = int(rng.integers(0, n_ctx - n_tgt + 1))
    span = (start, start + n_tgt)
    tgt_idx = ctx_idx[start:start + n_tgt]
    label = int(rng.integers(0, params.n_classes))
    began = time.perf_counter()
    errors = gradient_check(params, ctx_idx, tgt_idx, span, label, l2=l2,
                            eps=eps, corrupt_group=corrupt_group, details=details)
    return errors, time.perf_counter() - began
