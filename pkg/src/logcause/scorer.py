"""Attention-based root-cause scorer trained with a PU objective.

The model embeds token-id sequences, runs one self-attention encoder block,
and maps the mean over real (non-pad) position representations to an output
vector z. A line's root-cause score is ||z||. The objective drives ||z||
toward zero for positive-class lines and rewards large ||z|| for
unknown-class lines:

    loss = (1/m) * sum_i [ (1 - y_i) * ||z_i||^2  +  y_i * q^2 / ||z_i|| ]

with y_i = 0 for P, 1 for U and q = |P| / (|P| + |U|) over the (balanced)
training multiset. Everything is float64 numpy with hand-written
backpropagation; a finite-difference gradient check validates the graph.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .balance import BalancedDataset
from .corpus import InvestigationWindow, LogCorpus
from .errors import DataError, TrainingDiverged
from .tokenizer import TokenizerConfig, Vocabulary, encode, tokenize

NORM_EPS = 1e-8  # clamp for the 1/||z|| singularity
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
CHECKPOINT_MAGIC = b"LRCA"
CHECKPOINT_VERSION = 1

#: Parameter names in checkpoint block order.
PARAM_ORDER = (
    "emb",
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
    "w1", "b1", "w2", "b2",
    "wz", "bz",
)


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 128
    attention_heads: int = 2
    hidden_units: int = 256
    output_dim: int = 64
    max_len: int = 24
    epochs: int = 5
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.embed_dim % self.attention_heads != 0:
            raise DataError(
                f"embed_dim {self.embed_dim} not divisible by "
                f"attention_heads {self.attention_heads}"
            )

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "attention_heads": self.attention_heads,
            "hidden_units": self.hidden_units,
            "output_dim": self.output_dim,
            "max_len": self.max_len,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


@dataclass(frozen=True)
class ScoredLine:
    line_id: int
    score: float


def positional_encoding(max_len: int, dim: int) -> np.ndarray:
    """Fixed sinusoidal position table (max_len, dim)."""
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    idx = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * np.floor(idx / 2.0)) / dim)
    table = np.zeros((max_len, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table


class ScorerModel:
    """Embedding table + one encoder block + output head, all float64."""

    def __init__(self, config: ModelConfig, vocab_size: int, rng: np.random.Generator | None = None):
        self.config = config
        self.vocab_size = vocab_size
        d, f, o = config.embed_dim, config.hidden_units, config.output_dim
        self.head_dim = d // config.attention_heads
        self.pos = positional_encoding(config.max_len, d)
        # embeddings are scaled up to the positional table's magnitude,
        # matching the usual sqrt(d) convention for sinusoidal encodings
        self.emb_scale = float(np.sqrt(d))
        if rng is None:
            rng = np.random.default_rng(config.seed)
        bound = 1.0 / np.sqrt(d)

        def init(*shape):
            return rng.uniform(-bound, bound, size=shape)

        self.params: dict[str, np.ndarray] = {
            "emb": init(vocab_size, d),
            "wq": init(d, d), "bq": init(d),
            "wk": init(d, d), "bk": init(d),
            "wv": init(d, d), "bv": init(d),
            "wo": init(d, d), "bo": init(d),
            "w1": init(d, f), "b1": init(f),
            "w2": init(f, d), "b2": init(d),
            "wz": init(d, o), "bz": init(o),
        }

    # -- forward / backward ------------------------------------------------

    def _split_heads(self, x: np.ndarray) -> np.ndarray:
        b, s, _ = x.shape
        return x.reshape(b, s, self.config.attention_heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge_heads(self, x: np.ndarray) -> np.ndarray:
        b, h, s, dk = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, s, h * dk)

    def forward(self, ids: np.ndarray, pad_id: int = 0, want_cache: bool = False):
        """Return z vectors (batch, output_dim); optionally the backward cache.

        ``[PAD]`` positions are masked out of attention as keys; the class
        token at position 0 guarantees every query row attends to something.
        """
        if ids.ndim != 2:
            raise DataError(f"expected a 2-d id batch, got shape {ids.shape}")
        if int(ids.max(initial=0)) >= self.vocab_size:
            raise DataError("token id out of range for the embedding table")
        p = self.params
        b, s = ids.shape
        scale = 1.0 / np.sqrt(self.head_dim)
        pad_mask = ids == pad_id  # (b, s) True where padded

        x0 = p["emb"][ids] * self.emb_scale + self.pos[None, :s, :]
        q = self._split_heads(x0 @ p["wq"] + p["bq"])
        k = self._split_heads(x0 @ p["wk"] + p["bk"])
        v = self._split_heads(x0 @ p["wv"] + p["bv"])
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores = np.where(pad_mask[:, None, None, :], -1e30, scores)
        scores -= scores.max(axis=-1, keepdims=True)
        att = np.exp(scores)
        att /= att.sum(axis=-1, keepdims=True)
        ctx = self._merge_heads(att @ v)
        attn_out = ctx @ p["wo"] + p["bo"]
        x1 = x0 + attn_out
        hpre = x1 @ p["w1"] + p["b1"]
        hidden = np.maximum(hpre, 0.0)
        x2 = x1 + hidden @ p["w2"] + p["b2"]
        # masked mean over real positions: every token keeps a direct residual
        # path into z, which the class-token position alone does not give
        keep = (~pad_mask).astype(np.float64)
        count = keep.sum(axis=1, keepdims=True)
        pooled = (x2 * keep[:, :, None]).sum(axis=1) / count
        z = pooled @ p["wz"] + p["bz"]
        if not want_cache:
            return z
        cache = {
            "ids": ids, "x0": x0, "q": q, "k": k, "v": v, "att": att,
            "ctx": ctx, "x1": x1, "hpre": hpre, "hidden": hidden,
            "pooled": pooled, "keep": keep, "count": count, "scale": scale,
        }
        return z, cache

    def backward(self, cache: dict, dz: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of the loss w.r.t. every parameter, given dL/dz."""
        p = self.params
        ids, x0, x1 = cache["ids"], cache["x0"], cache["x1"]
        att, q, k, v, ctx = cache["att"], cache["q"], cache["k"], cache["v"], cache["ctx"]
        hpre, hidden, scale = cache["hpre"], cache["hidden"], cache["scale"]
        pooled, keep, count = cache["pooled"], cache["keep"], cache["count"]
        b, s, d = x0.shape

        grads = {}
        grads["wz"] = pooled.T @ dz
        grads["bz"] = dz.sum(axis=0)
        dpooled = dz @ p["wz"].T
        dx2 = dpooled[:, None, :] * (keep / count)[:, :, None]

        # feed-forward + residual
        dff = dx2
        dff_flat = dff.reshape(-1, d)
        grads["w2"] = hidden.reshape(-1, self.config.hidden_units).T @ dff_flat
        grads["b2"] = dff_flat.sum(axis=0)
        dhpre = (dff @ p["w2"].T) * (hpre > 0)
        dhpre_flat = dhpre.reshape(-1, self.config.hidden_units)
        grads["w1"] = x1.reshape(-1, d).T @ dhpre_flat
        grads["b1"] = dhpre_flat.sum(axis=0)
        dx1 = dx2 + dhpre @ p["w1"].T

        # attention + residual
        dattn_out = dx1
        dattn_flat = dattn_out.reshape(-1, d)
        grads["wo"] = ctx.reshape(-1, d).T @ dattn_flat
        grads["bo"] = dattn_flat.sum(axis=0)
        dctx = self._split_heads(dattn_out @ p["wo"].T)
        datt = dctx @ v.transpose(0, 1, 3, 2)
        dv = att.transpose(0, 1, 3, 2) @ dctx
        dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
        dscores *= scale  # masked entries have att == 0, hence zero gradient
        dq = dscores @ k
        dk = dscores.transpose(0, 1, 3, 2) @ q
        dq_m, dk_m, dv_m = (self._merge_heads(g).reshape(-1, d) for g in (dq, dk, dv))
        x0_flat = x0.reshape(-1, d)
        grads["wq"] = x0_flat.T @ dq_m
        grads["bq"] = dq_m.sum(axis=0)
        grads["wk"] = x0_flat.T @ dk_m
        grads["bk"] = dk_m.sum(axis=0)
        grads["wv"] = x0_flat.T @ dv_m
        grads["bv"] = dv_m.sum(axis=0)
        dx0 = dx1 + (dq_m @ p["wq"].T + dk_m @ p["wk"].T + dv_m @ p["wv"].T).reshape(b, s, d)

        # embedding scatter: segment-sum is much faster than np.add.at here
        demb = np.zeros_like(p["emb"])
        flat_ids = ids.reshape(-1)
        order = np.argsort(flat_ids, kind="stable")
        sorted_ids = flat_ids[order]
        uniq, starts = np.unique(sorted_ids, return_index=True)
        demb[uniq] = np.add.reduceat(dx0.reshape(-1, d)[order], starts, axis=0)
        demb *= self.emb_scale
        grads["emb"] = demb
        return grads

    def scores(self, ids: np.ndarray, pad_id: int = 0) -> np.ndarray:
        z = self.forward(ids, pad_id=pad_id)
        return np.linalg.norm(z, axis=1)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Versioned binary container: header, then float64 LE param blocks."""
        header = dict(self.config.to_dict(), vocab_size=self.vocab_size)
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)))
            fh.write(header_bytes)
            for name in PARAM_ORDER:
                block = np.ascontiguousarray(self.params[name], dtype="<f8")
                fh.write(block.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ScorerModel":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != CHECKPOINT_MAGIC:
                raise DataError(f"not a checkpoint file: bad magic {magic!r}")
            version, header_len = struct.unpack("<II", fh.read(8))
            if version != CHECKPOINT_VERSION:
                raise DataError(f"unsupported checkpoint version {version}")
            header = json.loads(fh.read(header_len).decode("utf-8"))
            vocab_size = header.pop("vocab_size")
            config = ModelConfig.from_dict(header)
            model = cls(config, vocab_size)
            for name in PARAM_ORDER:
                shape = model.params[name].shape
                count = int(np.prod(shape))
                buf = fh.read(count * 8)
                if len(buf) != count * 8:
                    raise DataError("truncated checkpoint")
                model.params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        return model


# -- objective ---------------------------------------------------------------


def pu_loss(z: np.ndarray, labels: np.ndarray, q: float, m: int | None = None) -> float:
    """Mean PU objective over a batch of output vectors.

    Positive samples (label 0) contribute ||z||^2, unknown samples (label 1)
    contribute q^2 / ||z||; norms below :data:`NORM_EPS` are clamped since the
    second term is singular at zero.
    """
    loss, _, _ = _pu_loss_detail(z, labels, q, m)
    return loss


def _pu_loss_detail(z: np.ndarray, labels: np.ndarray, q: float, m: int | None = None):
    """Loss plus dL/dz and the clamp mask (True where a U norm was clamped)."""
    if not 0.0 < q < 1.0:
        raise DataError(f"q must lie in (0, 1), got {q}")
    m = int(m) if m is not None else z.shape[0]
    labels = np.asarray(labels, dtype=np.float64)
    norms = np.linalg.norm(z, axis=1)
    clamped = (norms < NORM_EPS) & (labels > 0.5)
    safe = np.maximum(norms, NORM_EPS)
    per_sample = (1.0 - labels) * norms**2 + labels * (q * q) / safe
    loss = float(per_sample.sum() / m)

    # dL/dz: P term 2z/m; U term -q^2 z / ||z||^3 / m, zero where clamped
    dz = np.empty_like(z)
    p_mask = labels <= 0.5
    dz[p_mask] = 2.0 * z[p_mask]
    u_mask = ~p_mask
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(clamped[u_mask], 0.0, -(q * q) / safe[u_mask] ** 3)
    dz[u_mask] = coef[:, None] * z[u_mask]
    dz /= m
    return loss, dz, clamped


# -- training ------------------------------------------------------------------


def _encode_contents(
    contents: Sequence[str],
    vocab: Vocabulary,
    tok_config: TokenizerConfig,
    max_len: int,
) -> np.ndarray:
    """Encode with a per-unique-content cache; identical lines share a row."""
    enc_config = TokenizerConfig(
        max_len=max_len,
        num_threshold=tok_config.num_threshold,
        addr_pattern=tok_config.addr_pattern,
    )
    cache: dict[str, np.ndarray] = {}
    rows = np.empty((len(contents), max_len), dtype=np.int64)
    for i, content in enumerate(contents):
        row = cache.get(content)
        if row is None:
            row = encode(tokenize(content, enc_config), vocab, enc_config)
            cache[content] = row
        rows[i] = row
    return rows


def train(
    dataset: BalancedDataset,
    corpus: LogCorpus,
    vocab: Vocabulary,
    tok_config: TokenizerConfig,
    model_config: ModelConfig,
) -> tuple[ScorerModel, list[dict]]:
    """Mini-batch Adam over seeded shuffles of P + U samples.

    Adaptive per-parameter steps matter here: the unknown class is a small
    fraction of every batch, so the embeddings of rare root-cause tokens see
    gradients orders of magnitude smaller than the bulk parameters.

    Returns the model and a per-epoch training log with mean loss and
    wallclock. Raises :class:`TrainingDiverged` on a non-finite loss.
    """
    if not dataset.positives or not dataset.unknown_multiset:
        raise DataError("training requires both classes to be non-empty")
    line_ids = list(dataset.positives) + list(dataset.unknown_multiset)
    labels = np.concatenate([
        np.zeros(len(dataset.positives)),
        np.ones(len(dataset.unknown_multiset)),
    ])
    contents = [corpus.get(i).content for i in line_ids]
    ids = _encode_contents(contents, vocab, tok_config, model_config.max_len)

    rng = np.random.default_rng(model_config.seed)
    model = ScorerModel(model_config, len(vocab), rng=rng)
    moment1 = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    moment2 = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    step = 0
    n = ids.shape[0]
    pad_id = vocab.pad_id
    log: list[dict] = []
    for epoch in range(model_config.epochs):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, model_config.batch_size):
            batch_idx = perm[start : start + model_config.batch_size]
            batch_ids = ids[batch_idx]
            batch_labels = labels[batch_idx]
            # overflow here is diagnosed via the loss check, not warnings
            with np.errstate(over="ignore", invalid="ignore"):
                z, cache = model.forward(batch_ids, pad_id=pad_id, want_cache=True)
                loss, dz, _ = _pu_loss_detail(z, batch_labels, dataset.q)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at epoch {epoch}, batch offset {start}"
                )
            with np.errstate(over="ignore", invalid="ignore"):
                grads = model.backward(cache, dz)
            step += 1
            correction = np.sqrt(1.0 - ADAM_BETA2**step) / (1.0 - ADAM_BETA1**step)
            for name, grad in grads.items():
                m1, m2 = moment1[name], moment2[name]
                m1 *= ADAM_BETA1
                m1 += (1.0 - ADAM_BETA1) * grad
                m2 *= ADAM_BETA2
                m2 += (1.0 - ADAM_BETA2) * grad * grad
                model.params[name] -= model_config.learning_rate * correction * m1 / (
                    np.sqrt(m2) + ADAM_EPS
                )
            total += loss * len(batch_idx)
        for name, arr in model.params.items():
            if not np.all(np.isfinite(arr)):
                raise TrainingDiverged(f"non-finite values in parameter {name!r} after epoch {epoch}")
        log.append({
            "epoch": epoch,
            "mean_loss": total / n,
            "wallclock_ms": int(round((time.perf_counter() - t0) * 1000)),
        })
    return model, log


# -- scoring -------------------------------------------------------------------


def score_contents(
    model: ScorerModel,
    contents: Sequence[str],
    vocab: Vocabulary,
    tok_config: TokenizerConfig,
    batch_size: int = 1024,
) -> np.ndarray:
    """Scores for raw content strings, order preserved."""
    seen: dict[str, int] = {}
    uniq: list[str] = []
    inverse = np.empty(len(contents), dtype=np.int64)
    for i, content in enumerate(contents):
        slot = seen.get(content)
        if slot is None:
            slot = len(uniq)
            seen[content] = slot
            uniq.append(content)
        inverse[i] = slot
    if not uniq:
        return np.zeros(0, dtype=np.float64)
    rows = _encode_contents(uniq, vocab, tok_config, model.config.max_len)
    uniq_scores = np.empty(len(uniq), dtype=np.float64)
    for start in range(0, len(uniq), batch_size):
        chunk = rows[start : start + batch_size]
        uniq_scores[start : start + len(chunk)] = model.scores(chunk, pad_id=vocab.pad_id)
    return uniq_scores[inverse]


def score_window(
    model: ScorerModel,
    window: InvestigationWindow,
    corpus: LogCorpus,
    vocab: Vocabulary,
    tok_config: TokenizerConfig,
) -> list[ScoredLine]:
    """One ScoredLine per window line, window order preserved."""
    contents = [corpus.get(i).content for i in window.line_ids]
    values = score_contents(model, contents, vocab, tok_config)
    return [ScoredLine(line_id=i, score=float(v)) for i, v in zip(window.line_ids, values)]


# -- gradient verification -------------------------------------------------------


@dataclass
class GradientCheckResult:
    max_rel_error: float
    coords_checked: int
    coords_skipped: int
    clamped_samples: int
    worst_coord: tuple[str, int] | None = None

    def __str__(self) -> str:
        return (
            f"max_rel_error={self.max_rel_error:.3e} over {self.coords_checked} coords "
            f"({self.coords_skipped} skipped near clamp, {self.clamped_samples} clamped samples)"
        )


def gradient_check(
    model: ScorerModel,
    ids: np.ndarray,
    labels: np.ndarray,
    q: float,
    epsilon: float = 1e-4,
    num_coords: int = 200,
    seed: int = 0,
    pad_id: int = 0,
) -> GradientCheckResult:
    """Central finite differences vs analytic gradients on random coordinates.

    Coordinates whose +/- epsilon evaluations disagree on the norm-clamp state
    are skipped and counted: the objective is non-differentiable across that
    boundary, so a finite-difference comparison is meaningless there.
    """
    z, cache = model.forward(ids, pad_id=pad_id, want_cache=True)
    _, dz, clamped = _pu_loss_detail(z, labels, q)
    analytic = model.backward(cache, dz)

    sizes = [(name, model.params[name].size) for name in PARAM_ORDER]
    total = sum(s for _, s in sizes)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(num_coords, total), replace=False)

    def loss_and_clamp(flat_index: int, delta: float):
        offset = flat_index
        for name, size in sizes:
            if offset < size:
                break
            offset -= size
        param = model.params[name]
        old = param.flat[offset]
        param.flat[offset] = old + delta
        z_pert = model.forward(ids, pad_id=pad_id)
        loss, _, clamp = _pu_loss_detail(z_pert, labels, q)
        param.flat[offset] = old
        return name, offset, loss, clamp

    max_rel = 0.0
    worst = None
    checked = skipped = 0
    for flat_index in chosen:
        name, offset, loss_plus, clamp_plus = loss_and_clamp(int(flat_index), epsilon)
        _, _, loss_minus, clamp_minus = loss_and_clamp(int(flat_index), -epsilon)
        if not (np.array_equal(clamp_plus, clamped) and np.array_equal(clamp_minus, clamped)):
            skipped += 1
            continue
        fd = (loss_plus - loss_minus) / (2.0 * epsilon)
        an = float(analytic[name].flat[offset])
        rel = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
        checked += 1
        if rel > max_rel:
            max_rel = rel
            worst = (name, int(offset))
    return GradientCheckResult(
        max_rel_error=max_rel,
        coords_checked=checked,
        coords_skipped=skipped,
        clamped_samples=int(clamped.sum()),
        worst_coord=worst,
    )
