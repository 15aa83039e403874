"""Vision and text encoders behind small trainable reference implementations.

The vision encoder is a strided convolution stack emitting a three-scale
feature pyramid (strides 8/16/32, shared channel width). The text encoder
is a token embedding plus two masked self-attention blocks, pooled at each
sequence's terminal token. Pretrained backbones can be swapped in through
`register_external_encoder` without touching the rest of the pipeline.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

from . import tape
from .layers import Conv2d, Embedding, Linear
from .tape import Tensor

PAD_ID, UNK_ID, END_ID = 0, 1, 2

DEFAULT_PROMPTS = ("White Steam", "Floating Steam", "Billowing Smoke", "Blowing Smoke")

SCALES = (8, 16, 32)


# -- tokenization ---------------------------------------------------------------


def load_vocab(path=None) -> dict:
    """Token -> id map from a line-oriented vocabulary file (ids = line numbers)."""
    if path is None:
        text = importlib.resources.files("leakseg").joinpath("vocab.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    vocab = {}
    for i, line in enumerate(text.splitlines()):
        token = line.strip()
        if token:
            vocab[token] = i
    return vocab


@dataclass
class PromptSet:
    """Tokenized prompt sequences with an attention mask over real tokens."""

    tokens: np.ndarray  # (P, d) int
    attention: np.ndarray  # (P, d) uint8, 1 on non-padding positions
    texts: tuple = ()

    @property
    def count(self) -> int:
        return self.tokens.shape[0]

    @property
    def length(self) -> int:
        return self.tokens.shape[1]

    def end_positions(self) -> np.ndarray:
        """Index of the last attended (END) token in each sequence."""
        if (self.attention.sum(axis=1) == 0).any():
            raise ValueError("prompt with all-zero attention row")
        return self.attention.shape[1] - 1 - np.argmax(self.attention[:, ::-1], axis=1)


def tokenize(prompts, vocab: dict | None = None, pad_to: int | None = None) -> PromptSet:
    """Lowercased whitespace tokenization with a terminal END token.

    Unknown words map to UNK; sequences are right-padded with PAD to a
    common length (`pad_to` if given, otherwise the longest prompt + END).
    """
    prompts = list(prompts)
    if not prompts:
        raise ValueError("prompt list must be nonempty")
    if vocab is None:
        vocab = load_vocab()
    sequences = []
    for text in prompts:
        words = str(text).lower().split()
        if not words:
            raise ValueError("empty prompt string")
        sequences.append([vocab.get(w, UNK_ID) for w in words] + [END_ID])
    longest = max(len(s) for s in sequences)
    d = longest if pad_to is None else int(pad_to)
    if d < longest:
        raise ValueError(f"pad_to={d} too short for a prompt of {longest} tokens")
    tokens = np.full((len(sequences), d), PAD_ID, dtype=np.int64)
    attention = np.zeros((len(sequences), d), dtype=np.uint8)
    for i, seq in enumerate(sequences):
        tokens[i, : len(seq)] = seq
        attention[i, : len(seq)] = 1
    return PromptSet(tokens=tokens, attention=attention, texts=tuple(prompts))


# -- vision encoder ---------------------------------------------------------------


class VisionEncoder:
    """Strided conv stack emitting {stride: (N, C, H/stride, W/stride)} features."""

    def __init__(self, channels: int, rng: np.random.Generator, in_channels: int = 3):
        self.channels = channels
        stem = max(channels // 2, 2)
        self.conv1 = Conv2d(in_channels, stem, 3, rng, stride=2, padding=1)
        self.conv2 = Conv2d(stem, channels, 3, rng, stride=2, padding=1)
        self.conv3 = Conv2d(channels, channels, 3, rng, stride=2, padding=1)
        self.conv4 = Conv2d(channels, channels, 3, rng, stride=2, padding=1)
        self.conv5 = Conv2d(channels, channels, 3, rng, stride=2, padding=1)

    def __call__(self, images: Tensor) -> dict:
        x = tape.relu(self.conv1(images))
        x = tape.relu(self.conv2(x))
        f8 = self.conv3(x)
        f16 = self.conv4(tape.relu(f8))
        f32 = self.conv5(tape.relu(f16))
        return {8: f8, 16: f16, 32: f32}

    def encode_frames(self, images: np.ndarray) -> dict:
        """Encode (N, H, W, 3) float frames; H and W must be divisible by 32."""
        images = np.asarray(images, dtype=np.float64)
        h, w = images.shape[1:3]
        if h % 32 or w % 32:
            raise ValueError(f"resolution {h}x{w} not divisible by 32")
        return self(Tensor(images.transpose(0, 3, 1, 2)))

    def params(self, prefix: str = "encoder") -> dict:
        out = {}
        for i, conv in enumerate((self.conv1, self.conv2, self.conv3, self.conv4, self.conv5), 1):
            out.update(conv.params(f"{prefix}.conv{i}"))
        return out


# -- text encoder ---------------------------------------------------------------


class _AttentionBlock:
    def __init__(self, dim: int, rng: np.random.Generator):
        self.q = Linear(dim, dim, rng)
        self.k = Linear(dim, dim, rng)
        self.v = Linear(dim, dim, rng)
        self.out = Linear(dim, dim, rng)
        self.ff1 = Linear(dim, 2 * dim, rng)
        self.ff2 = Linear(2 * dim, dim, rng)
        self.scale = 1.0 / np.sqrt(dim)

    def __call__(self, h: Tensor, attention: np.ndarray) -> Tensor:
        scores = tape.matmul(self.q(h), tape.transpose(self.k(h), (0, 2, 1)))
        scores = tape.mul(scores, self.scale)
        # exclude padding positions from the keys
        bias = np.where(attention[:, None, :] == 1, 0.0, -1e9)
        weights = tape.softmax(tape.add(scores, bias), axis=-1)
        h = tape.add(h, self.out(tape.matmul(weights, self.v(h))))
        return tape.add(h, self.ff2(tape.relu(self.ff1(h))))

    def params(self, prefix: str) -> dict:
        out = {}
        for name, layer in (("q", self.q), ("k", self.k), ("v", self.v),
                            ("out", self.out), ("ff1", self.ff1), ("ff2", self.ff2)):
            out.update(layer.params(f"{prefix}.{name}"))
        return out


class TextEncoder:
    """Embedding + two masked self-attention blocks, pooled at the END token."""

    def __init__(self, vocab_size: int, channels: int, max_len: int, rng: np.random.Generator):
        self.channels = channels
        self.max_len = max_len
        self.embed = Embedding(vocab_size, channels, rng)
        self.pos = Embedding(max_len, channels, rng)
        self.block1 = _AttentionBlock(channels, rng)
        self.block2 = _AttentionBlock(channels, rng)

    def __call__(self, prompt_set: PromptSet) -> Tensor:
        """Pooled representations, shape (P, channels)."""
        p, d = prompt_set.tokens.shape
        if d > self.max_len:
            raise ValueError(f"prompt length {d} exceeds encoder max_len {self.max_len}")
        ends = prompt_set.end_positions()
        h = tape.add(self.embed(prompt_set.tokens), self.pos(np.arange(d)))
        h = self.block1(h, prompt_set.attention)
        h = self.block2(h, prompt_set.attention)
        flat = tape.reshape(h, (p * d, self.channels))
        return tape.take_rows(flat, np.arange(p) * d + ends)

    def params(self, prefix: str = "text") -> dict:
        out = {}
        out.update(self.embed.params(f"{prefix}.embed"))
        out.update(self.pos.params(f"{prefix}.pos"))
        out.update(self.block1.params(f"{prefix}.block1"))
        out.update(self.block2.params(f"{prefix}.block2"))
        return out


# -- external backbone adapter -----------------------------------------------------

_EXTERNAL_FACTORIES: dict = {}


def register_external_encoder(name: str, factory):
    """Register a pretrained backbone adapter.

    `factory(channels, rng)` must return an object with the VisionEncoder
    interface (`encode_frames`, `params`) whose `params` dict marks frozen
    groups by name; nothing is bundled by default.
    """
    _EXTERNAL_FACTORIES[name] = factory


def make_vision_encoder(kind: str, channels: int, rng: np.random.Generator):
    if kind == "reference":
        return VisionEncoder(channels, rng)
    if kind in _EXTERNAL_FACTORIES:
        return _EXTERNAL_FACTORIES[kind](channels, rng)
    raise ValueError(
        f"unknown encoder {kind!r}: register an adapter via register_external_encoder "
        f"or use 'reference'"
    )
