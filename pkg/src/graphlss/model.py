"""Heterogeneous graph attention classifier with hand-rolled backprop.

The network runs on plain numpy in 64-bit floats. Node features are
first projected per node type into a shared hidden width. Each attention
layer then works per relation channel: the four stored edge types expand
into five directed channels (sentence order ``ns``, sentence similarity
``ss``, and word similarity ``ww`` flow both ways; word-in-sentence
splits into ``ws`` word→sentence and ``sw`` sentence→word), each with
its own per-head source/destination projections and attention vectors.

Per channel, attention logits pass through a leaky ReLU and a softmax
over each destination's incoming edges, so coefficients sum to one per
destination per head; messages are the attended source projections
scaled by the edge weight. A destination averages the aggregated
messages over the channels that actually touch it; heads concatenate in
hidden layers and average in the last one, keeping width constant. ELU
sits between layers, inverted dropout follows every layer in train mode,
and a sigmoid classifier reads out sentence states. Nodes with no active
neighbors keep their incoming state unchanged, so ablated or degenerate
graphs stay well defined.

Gradients are reverse-accumulated through the whole stack by hand; the
Adam step, the adaptive positive-class weight of the loss, the training
loop with early stopping, and checkpoint persistence live here too.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from graphlss.errors import DataError, NumericError
from graphlss.graph import HeteroGraph

log = logging.getLogger(__name__)

HEADS = 4
LEAKY_SLOPE = 0.2
PROB_EPS = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
CHECKPOINT_VERSION = 1

# Directed message channels: (name, source node type, destination node type).
RELATIONS = (
    ("ns", "sent", "sent"),
    ("ss", "sent", "sent"),
    ("ws", "word", "sent"),
    ("sw", "sent", "word"),
    ("ww", "word", "word"),
)


def relation_edges(graph: HeteroGraph) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Directed (src, dst, weight) arrays per channel.

    Undirected same-type edges contribute both directions; the stored
    word-sentence incidences feed ``ws`` as-is and ``sw`` reversed.
    """
    out = {}
    for edge_type in ("ns", "ss", "ww"):
        index, weights = graph.edges[edge_type]
        src = index[:, 0].astype(np.int64)
        dst = index[:, 1].astype(np.int64)
        w = weights.astype(np.float64)
        out[edge_type] = (
            np.concatenate([src, dst]),
            np.concatenate([dst, src]),
            np.concatenate([w, w]),
        )
    index, weights = graph.edges["ws"]
    words = index[:, 0].astype(np.int64)
    sents = index[:, 1].astype(np.int64)
    w = weights.astype(np.float64)
    out["ws"] = (words, sents, w)
    out["sw"] = (sents, words, w)
    return out


@dataclass
class ModelParams:
    """All trainable tensors, keyed by a stable naming scheme.

    Keys: ``in.sent`` / ``in.word`` input projections, then per layer L
    and channel R ``l{L}.{R}.w_src`` (heads, hidden, head_dim), matching
    ``w_dst``, and attention vectors ``a_src`` / ``a_dst`` (heads,
    head_dim); finally ``cls.w`` and ``cls.b``.
    """

    sent_dim: int
    word_dim: int
    hidden: int
    num_layers: int
    tensors: dict[str, np.ndarray]
    heads: int = HEADS

    def head_dim(self, layer: int) -> int:
        # hidden layers concatenate heads, the final layer averages them
        return self.hidden if layer == self.num_layers - 1 else self.hidden // self.heads

    def is_final(self, layer: int) -> bool:
        return layer == self.num_layers - 1

    def names(self) -> list[str]:
        return sorted(self.tensors)

    def copy(self) -> "ModelParams":
        return ModelParams(
            sent_dim=self.sent_dim,
            word_dim=self.word_dim,
            hidden=self.hidden,
            num_layers=self.num_layers,
            tensors={name: tensor.copy() for name, tensor in self.tensors.items()},
            heads=self.heads,
        )


def _glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = shape[-2], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(
    sent_dim: int,
    word_dim: int,
    hidden: int = 64,
    num_layers: int = 2,
    seed: int = 0,
) -> ModelParams:
    """Seeded Glorot-uniform initialization of every tensor."""
    if num_layers not in (1, 2):
        raise ValueError(f"num_layers must be 1 or 2, got {num_layers}")
    if num_layers > 1 and hidden % HEADS != 0:
        raise ValueError(f"hidden={hidden} must be divisible by {HEADS} heads for stacked layers")
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {
        "in.sent": _glorot(rng, (sent_dim, hidden)),
        "in.word": _glorot(rng, (word_dim, hidden)),
    }
    for layer in range(num_layers):
        head_dim = hidden if layer == num_layers - 1 else hidden // HEADS
        for rel, _, _ in RELATIONS:
            prefix = f"l{layer}.{rel}"
            tensors[f"{prefix}.w_src"] = _glorot(rng, (HEADS, hidden, head_dim))
            tensors[f"{prefix}.w_dst"] = _glorot(rng, (HEADS, hidden, head_dim))
            tensors[f"{prefix}.a_src"] = _glorot(rng, (HEADS, head_dim, 1))[..., 0]
            tensors[f"{prefix}.a_dst"] = _glorot(rng, (HEADS, head_dim, 1))[..., 0]
    tensors["cls.w"] = _glorot(rng, (hidden, 1))[:, 0]
    tensors["cls.b"] = np.zeros(1)
    return ModelParams(sent_dim, word_dim, hidden, num_layers, tensors)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(x))


def _elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, np.exp(x))


def _segment_softmax(
    logits: np.ndarray, dst: np.ndarray, num_dst: int
) -> tuple[np.ndarray, np.ndarray]:
    """Softmax over each destination's incoming edges, per head.

    ``logits`` is (heads, edges); returns alpha of the same shape plus
    the flattened (head, destination) group index used again in backward.
    """
    heads, edges = logits.shape
    flat = (np.arange(heads)[:, None] * num_dst + dst[None, :]).reshape(-1)
    values = logits.reshape(-1)
    maxes = np.full(heads * num_dst, -np.inf)
    np.maximum.at(maxes, flat, values)
    exp = np.exp(values - maxes[flat])
    sums = np.zeros(heads * num_dst)
    np.add.at(sums, flat, exp)
    alpha = exp / sums[flat]
    return alpha.reshape(heads, edges), flat


def _segment_sum(values: np.ndarray, flat: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    np.add.at(out, flat, values.reshape(-1))
    return out


def forward(
    graph: HeteroGraph,
    params: ModelParams,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    dropout_keep: float = 0.7,
) -> tuple[np.ndarray, dict]:
    """Run the network; returns per-sentence probabilities and the
    activation cache consumed by :func:`loss_and_grads`.

    ``cache["attention"]`` maps (layer, channel) to the attention
    coefficients with their destination indices, for invariant checks.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be train or eval, got {mode!r}")
    if mode == "train" and rng is None:
        raise ValueError("train mode needs an rng for dropout")
    if graph.sentence_features.shape[1] != params.sent_dim:
        raise DataError(
            f"graph {graph.doc_id!r}: sentence feature dim {graph.sentence_features.shape[1]} "
            f"!= model {params.sent_dim}"
        )
    if graph.m and graph.word_features.shape[1] != params.word_dim:
        raise DataError(
            f"graph {graph.doc_id!r}: word feature dim {graph.word_features.shape[1]} "
            f"!= model {params.word_dim}"
        )
    tensors = params.tensors
    inputs = {
        "sent": graph.sentence_features.astype(np.float64),
        "word": graph.word_features.astype(np.float64),
    }
    states = {
        "sent": inputs["sent"] @ tensors["in.sent"],
        "word": inputs["word"] @ tensors["in.word"] if graph.m else np.zeros((0, params.hidden)),
    }
    rels = relation_edges(graph)
    counts = {"sent": graph.n, "word": graph.m}
    cache: dict = {"inputs": inputs, "rels": rels, "layers": [], "attention": {}}

    for layer in range(params.num_layers):
        head_dim = params.head_dim(layer)
        final = params.is_final(layer)
        agg = {t: np.zeros((HEADS, counts[t], head_dim)) for t in ("sent", "word")}
        touch = {t: np.zeros(counts[t], dtype=np.int64) for t in ("sent", "word")}
        rel_caches: dict[str, dict | None] = {}
        for rel, src_type, dst_type in RELATIONS:
            src, dst, weight = rels[rel]
            if src.shape[0] == 0:
                rel_caches[rel] = None
                continue
            w_src = tensors[f"l{layer}.{rel}.w_src"]
            w_dst = tensors[f"l{layer}.{rel}.w_dst"]
            a_src = tensors[f"l{layer}.{rel}.a_src"]
            a_dst = tensors[f"l{layer}.{rel}.a_dst"]
            z_src = np.einsum("nh,khd->knd", states[src_type], w_src)
            z_dst = np.einsum("nh,khd->knd", states[dst_type], w_dst)
            score_src = np.einsum("knd,kd->kn", z_src, a_src)
            score_dst = np.einsum("knd,kd->kn", z_dst, a_dst)
            raw = score_src[:, src] + score_dst[:, dst]
            logits = np.where(raw > 0, raw, LEAKY_SLOPE * raw)
            alpha, flat = _segment_softmax(logits, dst, counts[dst_type])
            coeff = alpha * weight[None, :]
            gathered = z_src[:, src, :]
            for k in range(HEADS):
                np.add.at(agg[dst_type][k], dst, coeff[k][:, None] * gathered[k])
            touch[dst_type] += (np.bincount(dst, minlength=counts[dst_type]) > 0).astype(np.int64)
            rel_caches[rel] = {
                "z_src": z_src,
                "z_dst": z_dst,
                "raw": raw,
                "alpha": alpha,
                "coeff": coeff,
            }
            cache["attention"][(layer, rel)] = (alpha, dst, counts[dst_type])

        layer_cache: dict = {
            "rels": rel_caches,
            "touch": touch,
            "in": states,
            "merged": {},
            "isolated": {t: touch[t] == 0 for t in ("sent", "word")},
        }
        new_states = {}
        for node_type in ("sent", "word"):
            denom = np.maximum(touch[node_type], 1).astype(np.float64)
            mean_types = agg[node_type] / denom[None, :, None]
            if final:
                merged = mean_types.mean(axis=0)
            else:
                merged = np.transpose(mean_types, (1, 0, 2)).reshape(
                    counts[node_type], HEADS * head_dim
                )
            layer_cache["merged"][node_type] = merged
            value = merged if final else _elu(merged)
            isolated = layer_cache["isolated"][node_type]
            if isolated.any():
                value = value.copy()
                value[isolated] = states[node_type][isolated]
            new_states[node_type] = value
        if mode == "train":
            masks = {}
            for node_type in ("sent", "word"):
                mask = (
                    rng.random(new_states[node_type].shape) < dropout_keep
                ).astype(np.float64) / dropout_keep
                masks[node_type] = mask
                new_states[node_type] = new_states[node_type] * mask
            layer_cache["dropout"] = masks
        states = new_states
        layer_cache["out"] = states
        cache["layers"].append(layer_cache)

    logits = states["sent"] @ tensors["cls.w"] + tensors["cls.b"][0]
    probs = _sigmoid(logits)
    cache["final_states"] = states
    cache["probs"] = probs
    return probs, cache


@dataclass(frozen=True)
class ClassWeightState:
    """Adaptive positive-class weight plus the static negative weight."""

    lambda_pos: float
    lambda_neg: float = 1.0
    tau: float = 0.0
    epoch: int = 0
    lambda_min: float = 0.5


def update_class_weight(state: ClassWeightState, tau: float) -> ClassWeightState:
    """One epoch-level weight update.

    For tau strictly inside (0, 1) the positive weight decreases by
    tau - tau/ln(tau), floored at lambda_min; the decrement is strictly
    positive there, so the weight never grows. Degenerate tau (0 or 1)
    leaves the weight unchanged. The negative weight is static.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    lambda_pos = state.lambda_pos
    if 0.0 < tau < 1.0:
        decrement = tau - tau / np.log(tau)
        lambda_pos = min(lambda_pos, max(lambda_pos - decrement, state.lambda_min))
    return replace(state, lambda_pos=float(lambda_pos), tau=float(tau), epoch=state.epoch + 1)


def weighted_bce(probs: np.ndarray, labels: np.ndarray, weights: ClassWeightState) -> float:
    """Class-weighted binary cross-entropy, probabilities clamped to
    [eps, 1-eps] with eps = 1e-7."""
    probs = np.clip(np.asarray(probs, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
    y = np.asarray(labels, dtype=np.float64)
    terms = weights.lambda_pos * y * np.log(probs) + weights.lambda_neg * (1.0 - y) * np.log(
        1.0 - probs
    )
    return float(-terms.mean())


def loss_and_grads(
    graph: HeteroGraph,
    params: ModelParams,
    weights: ClassWeightState,
    mode: str = "train",
    rng: np.random.Generator | None = None,
    dropout_keep: float = 0.7,
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Forward pass, weighted BCE, and reverse-mode gradients.

    Gradients use the exact unclamped derivative of the loss in the
    classifier logit, valid wherever the clamp is inactive; training
    operates far from the clamp boundary.
    """
    probs, cache = forward(graph, params, mode=mode, rng=rng, dropout_keep=dropout_keep)
    labels = graph.labels.astype(np.float64)
    loss = weighted_bce(probs, labels, weights)
    n_sent = labels.shape[0]

    grads = {name: np.zeros_like(tensor) for name, tensor in params.tensors.items()}
    tensors = params.tensors
    d_logits = (
        weights.lambda_neg * (1.0 - labels) * probs - weights.lambda_pos * labels * (1.0 - probs)
    ) / n_sent

    final_sent = cache["final_states"]["sent"]
    grads["cls.w"] = final_sent.T @ d_logits
    grads["cls.b"] = np.array([d_logits.sum()])
    d_states = {
        "sent": np.outer(d_logits, tensors["cls.w"]),
        "word": np.zeros_like(cache["final_states"]["word"]),
    }

    for layer in range(params.num_layers - 1, -1, -1):
        layer_cache = cache["layers"][layer]
        head_dim = params.head_dim(layer)
        final = params.is_final(layer)
        states_in = layer_cache["in"]
        counts = {t: states_in[t].shape[0] for t in ("sent", "word")}
        touch = layer_cache["touch"]

        d_next = {t: np.zeros_like(states_in[t]) for t in ("sent", "word")}
        d_agg = {}
        for node_type in ("sent", "word"):
            d_out = d_states[node_type]
            if mode == "train":
                d_out = d_out * layer_cache["dropout"][node_type]
            isolated = layer_cache["isolated"][node_type]
            if isolated.any():
                d_next[node_type][isolated] += d_out[isolated]
            d_merged = d_out.copy()
            if not final:
                d_merged *= _elu_grad(layer_cache["merged"][node_type])
            if isolated.any():
                d_merged[isolated] = 0.0
            if final:
                d_mean_types = np.repeat(d_merged[None, :, :], HEADS, axis=0) / HEADS
            else:
                d_mean_types = np.transpose(
                    d_merged.reshape(counts[node_type], HEADS, head_dim), (1, 0, 2)
                )
            denom = np.maximum(touch[node_type], 1).astype(np.float64)
            d_agg[node_type] = d_mean_types / denom[None, :, None]

        for rel, src_type, dst_type in RELATIONS:
            rel_cache = layer_cache["rels"][rel]
            if rel_cache is None:
                continue
            src, dst, weight = cache["rels"][rel]
            z_src = rel_cache["z_src"]
            z_dst = rel_cache["z_dst"]
            alpha = rel_cache["alpha"]
            coeff = rel_cache["coeff"]
            raw = rel_cache["raw"]
            a_src = tensors[f"l{layer}.{rel}.a_src"]
            a_dst = tensors[f"l{layer}.{rel}.a_dst"]
            w_src = tensors[f"l{layer}.{rel}.w_src"]
            w_dst = tensors[f"l{layer}.{rel}.w_dst"]

            d_message_dst = d_agg[dst_type][:, dst, :]
            gathered_src = z_src[:, src, :]
            d_coeff = (d_message_dst * gathered_src).sum(axis=2)
            d_z_src = np.zeros_like(z_src)
            for k in range(HEADS):
                np.add.at(d_z_src[k], src, coeff[k][:, None] * d_message_dst[k])

            d_alpha = d_coeff * weight[None, :]
            flat = (np.arange(HEADS)[:, None] * counts[dst_type] + dst[None, :]).reshape(-1)
            inner = _segment_sum(alpha * d_alpha, flat, HEADS * counts[dst_type])
            d_logit = alpha * (d_alpha - inner[flat].reshape(HEADS, -1))
            d_raw = d_logit * np.where(raw > 0, 1.0, LEAKY_SLOPE)

            d_score_src = np.zeros((HEADS, counts[src_type]))
            d_score_dst = np.zeros((HEADS, counts[dst_type]))
            for k in range(HEADS):
                np.add.at(d_score_src[k], src, d_raw[k])
                np.add.at(d_score_dst[k], dst, d_raw[k])

            grads[f"l{layer}.{rel}.a_src"] += np.einsum("kn,knd->kd", d_score_src, z_src)
            grads[f"l{layer}.{rel}.a_dst"] += np.einsum("kn,knd->kd", d_score_dst, z_dst)
            d_z_src += d_score_src[:, :, None] * a_src[:, None, :]
            d_z_dst = d_score_dst[:, :, None] * a_dst[:, None, :]

            grads[f"l{layer}.{rel}.w_src"] += np.einsum("nh,knd->khd", states_in[src_type], d_z_src)
            grads[f"l{layer}.{rel}.w_dst"] += np.einsum("nh,knd->khd", states_in[dst_type], d_z_dst)
            d_next[src_type] += np.einsum("knd,khd->nh", d_z_src, w_src)
            d_next[dst_type] += np.einsum("knd,khd->nh", d_z_dst, w_dst)

        d_states = d_next

    grads["in.sent"] = cache["inputs"]["sent"].T @ d_states["sent"]
    if cache["inputs"]["word"].shape[0]:
        grads["in.word"] = cache["inputs"]["word"].T @ d_states["word"]
    return loss, grads, probs


@dataclass
class AdamState:
    """First/second moment estimates plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={name: np.zeros_like(tensor) for name, tensor in params.tensors.items()},
            v={name: np.zeros_like(tensor) for name, tensor in params.tensors.items()},
        )


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """Bias-corrected Adam update, in place, fixed parameter order."""
    state.t += 1
    bias1 = 1.0 - ADAM_BETA1**state.t
    bias2 = 1.0 - ADAM_BETA2**state.t
    for name in params.names():
        grad = grads[name]
        state.m[name] = ADAM_BETA1 * state.m[name] + (1.0 - ADAM_BETA1) * grad
        state.v[name] = ADAM_BETA2 * state.v[name] + (1.0 - ADAM_BETA2) * grad * grad
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        params.tensors[name] -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; defaults mirror the reference setup."""

    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 20
    patience: int | None = 7
    dropout_keep: float = 0.7
    lambda_pos: float | None = None
    lambda_neg: float = 1.0
    lambda_min: float = 0.5
    hidden: int = 64
    num_layers: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("learning rate, batch size, and max epochs must be positive")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError(f"dropout_keep must be in (0, 1], got {self.dropout_keep}")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1 (or None to disable early stopping)")


@dataclass
class TrainResult:
    params: ModelParams
    history: list[dict]
    best_epoch: int
    best_val_loss: float
    class_weights: ClassWeightState


def _mean_eval_loss(
    graphs: Sequence[HeteroGraph], params: ModelParams, weights: ClassWeightState
) -> float:
    losses = []
    for graph in graphs:
        probs, _ = forward(graph, params, mode="eval")
        losses.append(weighted_bce(probs, graph.labels, weights))
    return float(np.mean(losses))


def _predicted_positive_fraction(graphs: Sequence[HeteroGraph], params: ModelParams) -> float:
    positive = 0
    total = 0
    for graph in graphs:
        probs, _ = forward(graph, params, mode="eval")
        positive += int((probs >= 0.5).sum())
        total += probs.shape[0]
    return positive / total if total else 0.0


def initial_lambda_pos(graphs: Iterable[HeteroGraph]) -> float:
    """Inverse-frequency prior: negatives over positives on the split."""
    positives = 0
    negatives = 0
    for graph in graphs:
        positives += int(graph.labels.sum())
        negatives += int(graph.labels.shape[0] - graph.labels.sum())
    if positives == 0:
        return 1.0
    return negatives / positives


def train(
    train_graphs: Sequence[HeteroGraph],
    val_graphs: Sequence[HeteroGraph],
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Seeded mini-batch training with per-epoch adaptive class weights.

    After each epoch the validation loss decides early stopping (strict
    improvement, ``patience`` non-improving epochs allowed) and the
    fraction of training sentences predicted relevant drives the
    class-weight update. The returned parameters are the best-validation
    snapshot.
    """
    train_graphs = list(train_graphs)
    val_graphs = list(val_graphs)
    if not train_graphs or not val_graphs:
        raise DataError("training and validation splits must be nonempty")
    sent_dim = train_graphs[0].sentence_features.shape[1]
    word_dim = train_graphs[0].word_features.shape[1]
    for graph in list(train_graphs) + list(val_graphs):
        if graph.sentence_features.shape[1] != sent_dim or (
            graph.m and graph.word_features.shape[1] != word_dim
        ):
            raise DataError(f"graph {graph.doc_id!r} feature dims differ from the first graph")

    rng = np.random.default_rng(config.seed)
    params = init_params(sent_dim, word_dim, config.hidden, config.num_layers, config.seed)
    lambda_pos = (
        config.lambda_pos if config.lambda_pos is not None else initial_lambda_pos(train_graphs)
    )
    weights = ClassWeightState(
        lambda_pos=float(lambda_pos),
        lambda_neg=config.lambda_neg,
        lambda_min=config.lambda_min,
    )
    adam = AdamState.for_params(params)
    history: list[dict] = []
    best_val = np.inf
    best_params = params.copy()
    best_epoch = 0
    stale = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_graphs))
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads: dict[str, np.ndarray] | None = None
            for graph_index in batch:
                loss, grads, _ = loss_and_grads(
                    train_graphs[int(graph_index)],
                    params,
                    weights,
                    mode="train",
                    rng=rng,
                    dropout_keep=config.dropout_keep,
                )
                epoch_losses.append(loss)
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name in params.names():
                        batch_grads[name] += grads[name]
            assert batch_grads is not None
            scale = 1.0 / len(batch)
            for name in params.names():
                batch_grads[name] *= scale
            adam_step(params, batch_grads, adam, config.learning_rate)

        train_loss = float(np.mean(epoch_losses))
        if not np.isfinite(train_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch}: {train_loss}")
        val_loss = _mean_eval_loss(val_graphs, params, weights)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}: {val_loss}")
        tau = _predicted_positive_fraction(train_graphs, params)
        history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "val_loss": val_loss,
                "tau": tau,
                "lambda_pos": weights.lambda_pos,
            }
        )
        weights = update_class_weight(weights, tau)

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                log.info("early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    return TrainResult(
        params=best_params,
        history=history,
        best_epoch=best_epoch,
        best_val_loss=float(best_val),
        class_weights=weights,
    )


def predict_summary(
    graph: HeteroGraph,
    params: ModelParams,
    selection: str = "threshold",
    k: int = 3,
) -> list[int]:
    """Sentence indices of the predicted summary, in document order.

    Threshold mode takes probabilities >= 0.5 and falls back to the
    single best sentence when none qualify; top-k takes the k most
    probable sentences, ties resolved toward lower indices.
    """
    probs, _ = forward(graph, params, mode="eval")
    if selection == "threshold":
        chosen = [i for i, p in enumerate(probs) if p >= 0.5]
        if not chosen:
            chosen = [int(np.argmax(probs))]
        return chosen
    if selection == "topk":
        order = np.argsort(-probs, kind="stable")[: max(k, 0)]
        return sorted(int(i) for i in order)
    raise ValueError(f"unknown selection mode {selection!r}")


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    weights: ClassWeightState,
    adam: AdamState | None = None,
    epoch: int = 0,
    extra: dict | None = None,
) -> None:
    """Persist parameters, moments, and class-weight state as one file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": CHECKPOINT_VERSION,
        "sent_dim": params.sent_dim,
        "word_dim": params.word_dim,
        "hidden": params.hidden,
        "num_layers": params.num_layers,
        "heads": params.heads,
        "epoch": epoch,
        "class_weights": {
            "lambda_pos": weights.lambda_pos,
            "lambda_neg": weights.lambda_neg,
            "tau": weights.tau,
            "epoch": weights.epoch,
            "lambda_min": weights.lambda_min,
        },
        "extra": extra or {},
    }
    arrays = {f"param__{name}": tensor for name, tensor in params.tensors.items()}
    if adam is not None:
        arrays.update({f"adam_m__{name}": tensor for name, tensor in adam.m.items()})
        arrays.update({f"adam_v__{name}": tensor for name, tensor in adam.v.items()})
        meta["adam_t"] = adam.t
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as handle:
        np.savez(handle, meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8), **arrays)
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> tuple[ModelParams, ClassWeightState, AdamState | None, dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        meta = json.loads(bytes(archive["meta"]).decode("utf-8"))
    except (KeyError, ValueError) as exc:
        raise DataError(f"checkpoint {path} has no readable metadata") from exc
    if meta.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {meta.get('version')}")
    tensors = {
        name[len("param__") :]: archive[name]
        for name in archive.files
        if name.startswith("param__")
    }
    params = ModelParams(
        sent_dim=int(meta["sent_dim"]),
        word_dim=int(meta["word_dim"]),
        hidden=int(meta["hidden"]),
        num_layers=int(meta["num_layers"]),
        tensors=tensors,
        heads=int(meta["heads"]),
    )
    cw = meta["class_weights"]
    weights = ClassWeightState(
        lambda_pos=float(cw["lambda_pos"]),
        lambda_neg=float(cw["lambda_neg"]),
        tau=float(cw["tau"]),
        epoch=int(cw["epoch"]),
        lambda_min=float(cw["lambda_min"]),
    )
    adam = None
    if "adam_t" in meta:
        adam = AdamState(
            m={
                name[len("adam_m__") :]: archive[name]
                for name in archive.files
                if name.startswith("adam_m__")
            },
            v={
                name[len("adam_v__") :]: archive[name]
                for name in archive.files
                if name.startswith("adam_v__")
            },
            t=int(meta["adam_t"]),
        )
    return params, weights, adam, meta
