"""Statistical comparison scorer: TF-IDF vectors + a single decision tree.

Lines are encoded as tf-idf over placeholder-abstracted tokens (for parity
with the attention scorer's input) and a CART tree is grown on the P/U
labels. A line's score is the fraction of U-class training weight in the
leaf it falls into, which ranks root-cause likelihood in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .tokenizer import CLS, PAD, TokenSequence, TokenizerConfig, tokenize

_EXCLUDED = {CLS, PAD}


@dataclass(frozen=True)
class TfIdfModel:
    """Token -> feature index plus smoothed idf weights.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, strictly positive for any df <= N.
    """

    feature_index: dict[str, int]
    idf: np.ndarray
    num_docs: int

    @property
    def num_features(self) -> int:
        return len(self.feature_index)

    def transform(self, seq: TokenSequence) -> dict[int, float]:
        """Sparse tf*idf vector; tokens unseen at fit time are ignored."""
        counts: dict[int, int] = {}
        for token in seq.tokens:
            feat = self.feature_index.get(token)
            if feat is not None:
                counts[feat] = counts.get(feat, 0) + 1
        return {f: c * float(self.idf[f]) for f, c in counts.items()}

    def to_dict(self) -> dict:
        ordered = sorted(self.feature_index, key=self.feature_index.get)
        return {
            "num_docs": self.num_docs,
            "tokens": ordered,
            "idf": [float(self.idf[self.feature_index[t]]) for t in ordered],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfIdfModel":
        tokens = data["tokens"]
        return cls(
            feature_index={t: i for i, t in enumerate(tokens)},
            idf=np.array(data["idf"], dtype=np.float64),
            num_docs=data["num_docs"],
        )


def tfidf_fit_transform(
    sequences: Sequence[TokenSequence],
) -> tuple[TfIdfModel, list[dict[int, float]]]:
    """Fit document frequencies over the corpus and transform every line.

    Class and pad markers are excluded from the feature space; placeholder
    tokens ([IP], [NUM], ...) are ordinary features.
    """
    if not sequences:
        raise DataError("tf-idf requires a non-empty corpus")
    df: dict[str, int] = {}
    for seq in sequences:
        for token in set(seq.tokens) - _EXCLUDED:
            df[token] = df.get(token, 0) + 1
    tokens = sorted(df)
    index = {t: i for i, t in enumerate(tokens)}
    n = len(sequences)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in tokens], dtype=np.float64)
    model = TfIdfModel(feature_index=index, idf=idf, num_docs=n)
    return model, [model.transform(seq) for seq in sequences]


# -- CART ----------------------------------------------------------------------


@dataclass
class _Leaf:
    p_weight: float
    u_weight: float

    @property
    def score(self) -> float:
        total = self.p_weight + self.u_weight
        return self.u_weight / total if total > 0 else 0.0


@dataclass
class _Split:
    feature: int
    threshold: float
    left: "_Split | _Leaf"
    right: "_Split | _Leaf"


def _gini_sum(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """n * gini for class weights (u, w - u); zero where w == 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        g = w - (u * u + (w - u) * (w - u)) / w
    return np.where(w > 0, g, 0.0)


class DecisionTree:
    """Binary CART over tf-idf features, greedy Gini splits, depth-capped.

    Identical feature rows are grouped into weighted samples before growing,
    which is exact for Gini and for leaf class fractions and keeps training
    tractable on corpora dominated by repeated (abstracted) lines.
    """

    def __init__(self, root: "_Split | _Leaf", max_depth: int, num_features: int):
        self.root = root
        self.max_depth = max_depth
        self.num_features = num_features

    @classmethod
    def train(
        cls,
        vectors: Sequence[Mapping[int, float]],
        labels: Sequence[int],
        max_depth: int = 30,
        num_features: int | None = None,
        weights: Sequence[float] | None = None,
    ) -> "DecisionTree":
        if len(vectors) != len(labels):
            raise DataError("vectors and labels disagree in length")
        if max_depth < 0:
            raise DataError(f"max_depth must be >= 0, got {max_depth}")
        if num_features is None:
            num_features = 1 + max((max(v) for v in vectors if v), default=-1)
        if weights is None:
            weights = [1.0] * len(vectors)

        # group identical (row, label) pairs; exact for weighted Gini
        grouped: dict[tuple, tuple[float, float]] = {}
        for vec, label, weight in zip(vectors, labels, weights):
            key = tuple(sorted(vec.items()))
            p, u = grouped.get(key, (0.0, 0.0))
            if label:
                u += weight
            else:
                p += weight
            grouped[key] = (p, u)
        keys = sorted(grouped)
        dense = np.zeros((len(keys), num_features), dtype=np.float64)
        for row, key in enumerate(keys):
            for feat, value in key:
                dense[row, feat] = value
        wp = np.array([grouped[k][0] for k in keys])
        wu = np.array([grouped[k][1] for k in keys])

        root = cls._grow(dense, wp, wu, depth=0, max_depth=max_depth)
        return cls(root, max_depth=max_depth, num_features=num_features)

    @staticmethod
    def _grow(x: np.ndarray, wp: np.ndarray, wu: np.ndarray, depth: int, max_depth: int):
        total_p, total_u = float(wp.sum()), float(wu.sum())
        leaf = _Leaf(p_weight=total_p, u_weight=total_u)
        if depth >= max_depth or x.shape[0] < 2 or total_p == 0.0 or total_u == 0.0:
            return leaf

        n, f = x.shape
        w = wp + wu
        parent_gini = float(_gini_sum(np.array([total_u]), np.array([total_p + total_u]))[0])
        best = None  # (impurity, feature, threshold)
        for start in range(0, f, 512):  # feature blocks bound peak memory
            block = x[:, start : start + 512]
            order = np.argsort(block, axis=0, kind="stable")
            xs = np.take_along_axis(block, order, axis=0)
            cw_full = np.cumsum(w[order], axis=0)
            cu_full = np.cumsum(wu[order], axis=0)
            cw, cu = cw_full[:-1], cu_full[:-1]
            valid = xs[:-1] < xs[1:]
            if not valid.any():
                continue
            left = _gini_sum(cu, cw)
            right = _gini_sum(cu_full[-1] - cu, cw_full[-1] - cw)
            impurity = np.where(valid, left + right, np.inf)
            pos = int(np.argmin(impurity))
            i, j = divmod(pos, impurity.shape[1])
            score = float(impurity[i, j])
            if best is None or score < best[0]:
                threshold = 0.5 * (xs[i, j] + xs[i + 1, j])
                best = (score, start + j, float(threshold))
        if best is None or best[0] >= parent_gini - 1e-12:
            return leaf

        _, feature, threshold = best
        mask = x[:, feature] <= threshold
        return _Split(
            feature=feature,
            threshold=threshold,
            left=DecisionTree._grow(x[mask], wp[mask], wu[mask], depth + 1, max_depth),
            right=DecisionTree._grow(x[~mask], wp[~mask], wu[~mask], depth + 1, max_depth),
        )

    def score(self, vector: Mapping[int, float]) -> float:
        node = self.root
        while isinstance(node, _Split):
            value = vector.get(node.feature, 0.0)
            node = node.left if value <= node.threshold else node.right
        return node.score

    @property
    def depth(self) -> int:
        def walk(node) -> int:
            if isinstance(node, _Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_weights(self) -> list[tuple[float, float]]:
        out: list[tuple[float, float]] = []

        def walk(node):
            if isinstance(node, _Leaf):
                out.append((node.p_weight, node.u_weight))
            else:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out

    def to_dict(self) -> dict:
        def serialize(node):
            if isinstance(node, _Leaf):
                return {"leaf": True, "p_weight": node.p_weight, "u_weight": node.u_weight}
            return {
                "feature": node.feature,
                "threshold": node.threshold,
                "left": serialize(node.left),
                "right": serialize(node.right),
            }

        return {
            "max_depth": self.max_depth,
            "num_features": self.num_features,
            "root": serialize(self.root),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        def parse(node):
            if node.get("leaf"):
                return _Leaf(p_weight=node["p_weight"], u_weight=node["u_weight"])
            return _Split(
                feature=node["feature"],
                threshold=node["threshold"],
                left=parse(node["left"]),
                right=parse(node["right"]),
            )

        return cls(parse(data["root"]), max_depth=data["max_depth"], num_features=data["num_features"])


# -- pipeline wrapper ------------------------------------------------------------


class TreeScorerModel:
    """TF-IDF + tree bundle selected via ``--scorer tree``."""

    def __init__(self, tfidf: TfIdfModel, tree: DecisionTree, tok_config: TokenizerConfig):
        self.tfidf = tfidf
        self.tree = tree
        self.tok_config = tok_config

    def score_contents(self, contents: Sequence[str]) -> np.ndarray:
        cache: dict[str, float] = {}
        out = np.empty(len(contents), dtype=np.float64)
        for i, content in enumerate(contents):
            value = cache.get(content)
            if value is None:
                vec = self.tfidf.transform(tokenize(content, self.tok_config))
                value = self.tree.score(vec)
                cache[content] = value
            out[i] = value
        return out

    def save(self, path: str | Path) -> None:
        payload = {
            "version": 1,
            "tokenizer": self.tok_config.to_dict(),
            "tfidf": self.tfidf.to_dict(),
            "tree": self.tree.to_dict(),
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TreeScorerModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("version") != 1:
            raise DataError(f"unsupported baseline model version {payload.get('version')!r}")
        return cls(
            tfidf=TfIdfModel.from_dict(payload["tfidf"]),
            tree=DecisionTree.from_dict(payload["tree"]),
            tok_config=TokenizerConfig.from_dict(payload["tokenizer"]),
        )


def train_tree_scorer(dataset, corpus, tok_config: TokenizerConfig, max_depth: int = 30) -> TreeScorerModel:
    """Fit TF-IDF + tree on the same (balanced) sample multiset as the scorer.

    Identical contents are collapsed to one weighted document per class, which
    leaves document frequencies per the multiset intact via weights.
    """
    weighted: dict[tuple[str, int], float] = {}
    for line_id in dataset.positives:
        key = (corpus.get(line_id).content, 0)
        weighted[key] = weighted.get(key, 0.0) + 1.0
    for line_id in dataset.unknown_multiset:
        key = (corpus.get(line_id).content, 1)
        weighted[key] = weighted.get(key, 0.0) + 1.0

    keys = sorted(weighted)
    sequences = [tokenize(content, tok_config) for content, _ in keys]
    # document frequencies must reflect the multiset, not the deduped docs
    df: dict[str, int] = {}
    for (content, _), seq in zip(keys, sequences):
        for token in set(seq.tokens) - _EXCLUDED:
            df[token] = df.get(token, 0) + int(weighted[(content, _)])
    n = int(sum(weighted.values()))
    tokens = sorted(df)
    index = {t: i for i, t in enumerate(tokens)}
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in tokens], dtype=np.float64)
    tfidf = TfIdfModel(feature_index=index, idf=idf, num_docs=n)

    vectors = [tfidf.transform(seq) for seq in sequences]
    labels = [label for _, label in keys]
    weights = [weighted[k] for k in keys]
    tree = DecisionTree.train(
        vectors, labels, max_depth=max_depth, num_features=tfidf.num_features, weights=weights
    )
    return TreeScorerModel(tfidf=tfidf, tree=tree, tok_config=tok_config)
