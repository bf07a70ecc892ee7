"""Scoring functions f(query, document) for product ranking.

Five architectures under one contract: a tf-idf lexical baseline, a
kernel-pooling model over the token-similarity interaction matrix, two
distributed encoders (convolutional "siamese" and a sum-then-mlp variant)
scored by dot product of their encodings, and a hybrid that runs a small
convolutional head over the interaction matrix itself.

All trainable scorers share one embedding table; the interaction matrix
between a query and a document holds pairwise dot products of their token
vectors (cosines once the table is unit-normalized).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .embeddings import EmbeddingTable, LocalEmbedding, embed_sequence
from .text import Vocabulary

ARCHITECTURES = ("tfidf", "kernel_pooling", "siamese", "dssm_like", "hybrid_local")


@dataclass
class KernelBank:
    """RBF kernel means and widths for soft term-frequency pooling."""

    means: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.widths = np.asarray(self.widths, dtype=np.float64)
        if self.means.ndim != 1 or self.means.shape != self.widths.shape or self.means.size < 1:
            raise ValueError("kernel bank needs matching nonempty mean/width lists")
        if np.any(self.widths <= 0):
            raise ValueError("kernel widths must be positive")
        if np.any(np.diff(self.means) >= 0):
            raise ValueError("kernel means must be strictly decreasing")

    def __len__(self) -> int:
        return self.means.size


def default_kernel_bank() -> KernelBank:
    """Eleven kernels: one near-exact-match at 1.0 plus ten soft bins."""
    means = [1.0] + [round(0.9 - 0.2 * i, 1) for i in range(10)]
    widths = [1e-3] + [0.1] * 10
    return KernelBank(np.array(means), np.array(widths))


@dataclass
class InteractionMatrix:
    """Pairwise query-token x document-token similarities, with the count
    of real (non-padding) rows and columns."""

    values: Tensor
    n_q_real: int
    n_d_real: int


def interaction_matrix(q: LocalEmbedding, d: LocalEmbedding) -> InteractionMatrix:
    """All pairwise dot products between query and document token vectors."""
    if q.matrix.shape[0] != d.matrix.shape[0]:
        raise ValueError(
            f"embedding dimensions differ: query {q.matrix.shape[0]} vs document {d.matrix.shape[0]}"
        )
    values = ad.dot(ad.transpose(q.matrix), ad.transpose(d.matrix))
    return InteractionMatrix(values, q.n_real, d.n_real)


def kernel_features(m: InteractionMatrix, bank: KernelBank) -> Tensor:
    """Soft term-frequency feature vector, one entry per kernel.

    Each kernel k pools every interaction row i into
    ``log(max(sum_j exp(-(M_ij - mu_k)^2 / (2 sigma_k^2)), 1e-10))`` and
    the features sum those row scores over the real query rows only.
    Padding document columns are left in the row sums; they add a
    parameter-independent constant per kernel.
    """
    n_q, n_d = m.values.shape
    mask = np.zeros(n_q)
    mask[: m.n_q_real] = 1.0
    m3 = ad.reshape(m.values, (1, n_q, n_d))
    diff = ad.add(m3, Tensor(-bank.means.reshape(-1, 1, 1)))
    z = ad.mul(ad.mul(diff, diff), Tensor(-1.0 / (2.0 * bank.widths**2).reshape(-1, 1, 1)))
    row_sums = ad.asum(ad.exp(z), axis=2)  # (K, n_q)
    return ad.asum(ad.mul(ad.log(row_sums), Tensor(mask)), axis=1)


class Scorer:
    """Uniform contract: score a (query tokens, document tokens) pair.

    ``score_graph`` returns the score as a differentiable scalar tensor;
    ``score`` is the plain-float convenience wrapper.
    """

    architecture: str = "?"

    def score_graph(self, q_tokens: list[str], d_tokens: list[str]) -> Tensor:
        raise NotImplementedError

    def score(self, q_tokens: list[str], d_tokens: list[str]) -> float:
        return self.score_graph(q_tokens, d_tokens).data.item()

    def parameters(self) -> list[Tensor]:
        return []

    def trainable_parameters(self) -> list[Tensor]:
        return [p for p in self.parameters() if p.requires_grad]

    def descriptor(self) -> str:
        return self.architecture


class TfIdfScorer(Scorer):
    """f = sum_t tf_q(t) * tf_d(t) * idf(t) over the full, untruncated texts."""

    architecture = "tfidf"

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    def score(self, q_tokens: list[str], d_tokens: list[str]) -> float:
        tf_q = Counter(q_tokens)
        tf_d = Counter(d_tokens)
        if len(tf_d) < len(tf_q):
            tf_q, tf_d = tf_d, tf_q
        return float(
            sum(n * tf_d[t] * self.vocab.idf(t) for t, n in tf_q.items() if t in tf_d)
        )

    def score_graph(self, q_tokens, d_tokens) -> Tensor:
        return Tensor(self.score(q_tokens, d_tokens))


class _EmbeddingScorer(Scorer):
    """Shared machinery for scorers built on the embedding table."""

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.embedding = Tensor(
            table.vectors.copy(), requires_grad=table.trainable, name="embedding"
        )

    def embedding_table(self) -> EmbeddingTable:
        """Current (possibly trained) vectors as a fresh table."""
        return EmbeddingTable(list(self.table.tokens), self.embedding.data.copy(), self.table.trainable)

    def _embed(self, tokens: list[str], n_positions: int) -> LocalEmbedding:
        return embed_sequence(tokens, n_positions, self.table, self.embedding)

    def _mlp_layer(self, w: Tensor, b: Tensor, x: Tensor, final: bool = False) -> Tensor:
        """One column-vector mlp layer: tanh(W x + b), linear if ``final``."""
        h = ad.add(ad.matmul(w, x), b)
        return h if final else ad.tanh(h)


class KernelPoolingScorer(_EmbeddingScorer):
    """Kernel-pooled soft term frequencies fed to a one-layer head."""

    architecture = "kernel_pooling"

    def __init__(
        self,
        table: EmbeddingTable,
        bank: KernelBank | None = None,
        n_q: int = 10,
        n_d: int = 64,
        linear: bool = False,
        seed: int = 0,
    ):
        super().__init__(table)
        self.bank = bank if bank is not None else default_kernel_bank()
        self.n_q = n_q
        self.n_d = n_d
        self.linear = linear
        k = len(self.bank)
        # single linear map over kernel features: no symmetry to break, so
        # start at zero and let the first gradient step pick the signs
        self.w = Tensor(np.zeros((1, k)), requires_grad=True, name="head_w")
        self.b = Tensor(np.zeros((1, 1)), requires_grad=True, name="head_b")

    def parameters(self) -> list[Tensor]:
        return [self.embedding, self.w, self.b]

    def score_graph(self, q_tokens, d_tokens) -> Tensor:
        q = self._embed(q_tokens, self.n_q)
        d = self._embed(d_tokens, self.n_d)
        phi = kernel_features(interaction_matrix(q, d), self.bank)
        h = self._mlp_layer(self.w, self.b, ad.reshape(phi, (len(self.bank), 1)), final=self.linear)
        return ad.reshape(h, ())

    def descriptor(self) -> str:
        return (
            f"kernel_pooling:K={len(self.bank)},dim={self.table.dim},"
            f"Nq={self.n_q},Nd={self.n_d},linear={int(self.linear)}"
        )


class SiameseScorer(_EmbeddingScorer):
    """Convolutional encoder shared by both sides; score is the dot
    product of the two encodings, so document vectors can be precomputed."""

    architecture = "siamese"

    def __init__(
        self,
        table: EmbeddingTable,
        n_d: int = 64,
        out_dim: int | None = None,
        channels: int | None = None,
        width: int = 3,
        seed: int = 0,
    ):
        super().__init__(table)
        dim = table.dim
        self.n_d = n_d
        self.width = width
        self.channels = channels if channels is not None else dim
        self.out_dim = out_dim if out_dim is not None else dim
        rng = np.random.default_rng(seed)
        self.wc = Tensor(
            rng.normal(0.0, 1.0 / np.sqrt(dim * width), size=(self.channels, dim * width)),
            requires_grad=True,
            name="conv_w",
        )
        self.w1 = Tensor(
            rng.normal(0.0, 1.0 / np.sqrt(self.channels), size=(self.out_dim, self.channels)),
            requires_grad=True,
            name="enc_w",
        )
        self.b1 = Tensor(np.zeros((self.out_dim, 1)), requires_grad=True, name="enc_b")

    def parameters(self) -> list[Tensor]:
        return [self.embedding, self.wc, self.w1, self.b1]

    def encode_graph(self, tokens: list[str]) -> Tensor:
        # both sides use the document width so the encoder is side-agnostic
        e = self._embed(tokens, self.n_d)
        c = ad.tanh(ad.conv1d(e.matrix, self.wc, self.width))
        pooled = ad.reshape(ad.max_pool(c, axis=1), (self.channels, 1))
        v = ad.tanh(ad.add(ad.matmul(self.w1, pooled), self.b1))
        return ad.reshape(v, (self.out_dim,))

    def encode(self, tokens: list[str]) -> np.ndarray:
        return np.array(self.encode_graph(tokens).data)

    def score_graph(self, q_tokens, d_tokens) -> Tensor:
        return ad.dot(self.encode_graph(q_tokens), self.encode_graph(d_tokens))

    def score_cached(self, q_vector: np.ndarray, d_vector: np.ndarray) -> float:
        return float(q_vector @ d_vector)

    def descriptor(self) -> str:
        return (
            f"siamese:dim={self.table.dim},Nd={self.n_d},C={self.channels},"
            f"V={self.out_dim},w={self.width}"
        )


class DssmScorer(_EmbeddingScorer):
    """Sum the token vectors, then a three-layer tanh mlp; dot-product score."""

    architecture = "dssm_like"

    def __init__(
        self,
        table: EmbeddingTable,
        n_d: int = 64,
        hidden: int | None = None,
        out_dim: int | None = None,
        seed: int = 0,
    ):
        super().__init__(table)
        dim = table.dim
        self.n_d = n_d
        self.hidden = hidden if hidden is not None else dim
        self.out_dim = out_dim if out_dim is not None else dim
        rng = np.random.default_rng(seed)

        def layer(rows, cols, tag):
            w = Tensor(
                rng.normal(0.0, 1.0 / np.sqrt(cols), size=(rows, cols)),
                requires_grad=True,
                name=f"{tag}_w",
            )
            b = Tensor(np.zeros((rows, 1)), requires_grad=True, name=f"{tag}_b")
            return w, b

        self.w1, self.b1 = layer(self.hidden, dim, "l1")
        self.w2, self.b2 = layer(self.hidden, self.hidden, "l2")
        self.w3, self.b3 = layer(self.out_dim, self.hidden, "l3")

    def parameters(self) -> list[Tensor]:
        return [self.embedding, self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def encode_graph(self, tokens: list[str]) -> Tensor:
        e = self._embed(tokens, self.n_d)
        s = ad.reshape(ad.asum(e.matrix, axis=1), (self.table.dim, 1))
        h = self._mlp_layer(self.w1, self.b1, s)
        h = self._mlp_layer(self.w2, self.b2, h)
        v = self._mlp_layer(self.w3, self.b3, h)
        return ad.reshape(v, (self.out_dim,))

    def encode(self, tokens: list[str]) -> np.ndarray:
        return np.array(self.encode_graph(tokens).data)

    def score_graph(self, q_tokens, d_tokens) -> Tensor:
        return ad.dot(self.encode_graph(q_tokens), self.encode_graph(d_tokens))

    def score_cached(self, q_vector: np.ndarray, d_vector: np.ndarray) -> float:
        return float(q_vector @ d_vector)

    def descriptor(self) -> str:
        return (
            f"dssm_like:dim={self.table.dim},Nd={self.n_d},h={self.hidden},V={self.out_dim}"
        )


class HybridLocalScorer(_EmbeddingScorer):
    """Convolution over the interaction matrix itself, pooled and fed to a
    one-layer head: a local-interaction model with a learned composition."""

    architecture = "hybrid_local"

    def __init__(
        self,
        table: EmbeddingTable,
        n_q: int = 10,
        n_d: int = 64,
        channels: int | None = None,
        width: int = 3,
        seed: int = 0,
    ):
        super().__init__(table)
        self.n_q = n_q
        self.n_d = n_d
        self.width = width
        self.channels = channels if channels is not None else n_q
        rng = np.random.default_rng(seed)
        self.wc = Tensor(
            rng.normal(0.0, 1.0 / np.sqrt(n_q * width), size=(self.channels, n_q * width)),
            requires_grad=True,
            name="conv_w",
        )
        self.w = Tensor(
            rng.normal(0.0, 1.0 / np.sqrt(self.channels), size=(1, self.channels)),
            requires_grad=True,
            name="head_w",
        )
        self.b = Tensor(np.zeros((1, 1)), requires_grad=True, name="head_b")

    def parameters(self) -> list[Tensor]:
        return [self.embedding, self.wc, self.w, self.b]

    def score_graph(self, q_tokens, d_tokens) -> Tensor:
        q = self._embed(q_tokens, self.n_q)
        d = self._embed(d_tokens, self.n_d)
        m = interaction_matrix(q, d)
        c = ad.tanh(ad.conv1d(m.values, self.wc, self.width))
        pooled = ad.reshape(ad.max_pool(c, axis=1), (self.channels, 1))
        out = ad.tanh(ad.add(ad.matmul(self.w, pooled), self.b))
        return ad.reshape(out, ())

    def descriptor(self) -> str:
        return (
            f"hybrid_local:dim={self.table.dim},Nq={self.n_q},Nd={self.n_d},"
            f"C={self.channels},w={self.width}"
        )


# ---------------------------------------------------------------------------
# Operation-style wrappers with architecture checks
# ---------------------------------------------------------------------------


def _require(scorer: Scorer, *architectures: str) -> None:
    if scorer.architecture not in architectures:
        raise ValueError(
            f"architecture mismatch: need {' or '.join(architectures)}, got {scorer.architecture}"
        )


def tfidf_score(q_tokens: list[str], d_tokens: list[str], vocab: Vocabulary) -> float:
    return TfIdfScorer(vocab).score(q_tokens, d_tokens)


def kernel_pooling_score(q_tokens, d_tokens, scorer: Scorer) -> float:
    _require(scorer, "kernel_pooling")
    return scorer.score(q_tokens, d_tokens)


def distributed_encode(tokens, scorer: Scorer) -> np.ndarray:
    _require(scorer, "siamese", "dssm_like")
    return scorer.encode(tokens)


def distributed_score(q_tokens, d_tokens, scorer: Scorer) -> float:
    _require(scorer, "siamese", "dssm_like")
    return scorer.score(q_tokens, d_tokens)


def hybrid_local_score(q_tokens, d_tokens, scorer: Scorer) -> float:
    _require(scorer, "hybrid_local")
    return scorer.score(q_tokens, d_tokens)


# ---------------------------------------------------------------------------
# Construction and persistence
# ---------------------------------------------------------------------------


def make_scorer(architecture: str, table: EmbeddingTable | None = None,
                vocab: Vocabulary | None = None, **kwargs) -> Scorer:
    """Build a scorer by architecture tag.

    ``tfidf`` needs ``vocab``; every other architecture needs ``table``.
    Keyword arguments pass through to the architecture's constructor.
    """
    if architecture == "tfidf":
        if vocab is None:
            raise ValueError("tfidf scorer requires a vocabulary")
        return TfIdfScorer(vocab)
    if table is None:
        raise ValueError(f"{architecture} scorer requires an embedding table")
    classes = {
        "kernel_pooling": KernelPoolingScorer,
        "siamese": SiameseScorer,
        "dssm_like": DssmScorer,
        "hybrid_local": HybridLocalScorer,
    }
    if architecture not in classes:
        raise ValueError(
            f"unknown architecture {architecture!r}; expected one of {', '.join(ARCHITECTURES)}"
        )
    return classes[architecture](table, **kwargs)


def save_scorer(scorer: Scorer, path) -> None:
    """Checkpoint a trainable scorer: descriptor plus named weight tensors.

    The embedding matrix is stored in the checkpoint; the token list is
    not, so loading requires an embedding table with the same vocabulary.
    """
    if not isinstance(scorer, _EmbeddingScorer):
        raise ValueError(f"cannot checkpoint architecture {scorer.architecture!r}")
    tensors = {p.name: p.data for p in scorer.parameters()}
    if scorer.architecture == "kernel_pooling":
        tensors["kernel_means"] = scorer.bank.means
        tensors["kernel_widths"] = scorer.bank.widths
    ad.save_checkpoint(path, scorer.descriptor(), tensors)


def _parse_descriptor(descriptor: str) -> tuple[str, dict[str, int]]:
    arch, _, rest = descriptor.partition(":")
    fields: dict[str, int] = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            fields[key] = int(value)
    return arch, fields


def load_scorer(path, table: EmbeddingTable, expect: str | None = None) -> Scorer:
    """Rebuild a checkpointed scorer against a token table.

    The table supplies the vocabulary; the checkpoint's trained embedding
    matrix replaces the table's vectors and must match its shape.
    """
    descriptor, tensors = ad.load_checkpoint(path)
    arch, fields = _parse_descriptor(descriptor)
    if expect is not None and arch != expect:
        raise ValueError(f"architecture mismatch: checkpoint holds {arch!r}, expected {expect!r}")
    if fields.get("dim", table.dim) != table.dim:
        raise ValueError(
            f"embedding dimension mismatch: checkpoint {fields['dim']}, table {table.dim}"
        )
    if arch == "kernel_pooling":
        bank = KernelBank(tensors["kernel_means"], tensors["kernel_widths"])
        scorer: _EmbeddingScorer = KernelPoolingScorer(
            table, bank=bank, n_q=fields["Nq"], n_d=fields["Nd"], linear=bool(fields["linear"])
        )
    elif arch == "siamese":
        scorer = SiameseScorer(
            table, n_d=fields["Nd"], out_dim=fields["V"], channels=fields["C"], width=fields["w"]
        )
    elif arch == "dssm_like":
        scorer = DssmScorer(table, n_d=fields["Nd"], hidden=fields["h"], out_dim=fields["V"])
    elif arch == "hybrid_local":
        scorer = HybridLocalScorer(
            table, n_q=fields["Nq"], n_d=fields["Nd"], channels=fields["C"], width=fields["w"]
        )
    else:
        raise ValueError(f"unknown architecture {arch!r} in checkpoint {path}")
    for p in scorer.parameters():
        if p.name not in tensors:
            raise ValueError(f"checkpoint {path} is missing tensor {p.name!r}")
        if tensors[p.name].shape != p.data.shape:
            raise ValueError(
                f"checkpoint tensor {p.name!r} has shape {tensors[p.name].shape}, "
                f"expected {p.data.shape}"
            )
        p.data = np.array(tensors[p.name])
    return scorer
