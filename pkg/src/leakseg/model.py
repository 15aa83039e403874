"""End-to-end segmentation model: encoders -> fusion -> motion -> decoder."""

from __future__ import annotations

import numpy as np

from . import tape
from .decoder import FpnDecoder, MaskLogits
from .encoders import SCALES, PromptSet, TextEncoder, load_vocab, make_vision_encoder
from .fusion import FusionModule
from .layers import assign_params, load_checkpoint, save_checkpoint
from .motion import MotionModule
from .tape import Tensor


class SegmentationModel:
    """Composes the pipeline; one forward emits center-frame mask logits."""

    def __init__(self, resolution=(352, 352), c_v: int = 32, c_t: int = 64,
                 groups: int = 8, decoder_width: int = 64, prompt_count: int = 4,
                 max_prompt_len: int = 16, vocab_size: int | None = None,
                 use_vlf: bool = True, fuse_residual: bool = True,
                 encoder: str = "reference", seed: int = 0):
        if resolution[0] % 32 or resolution[1] % 32:
            raise ValueError(f"resolution {resolution} not divisible by 32")
        self.resolution = tuple(int(r) for r in resolution)
        self.c_v, self.c_t = c_v, c_t
        self.groups = groups
        self.decoder_width = decoder_width
        self.prompt_count = prompt_count
        self.max_prompt_len = max_prompt_len
        self.vocab_size = vocab_size if vocab_size is not None else len(load_vocab())
        self.use_vlf = use_vlf
        self.fuse_residual = fuse_residual
        self.encoder_kind = encoder
        self.seed = seed

        rng = np.random.default_rng(seed)
        self.vision = make_vision_encoder(encoder, c_v, rng)
        if use_vlf:
            self.text = TextEncoder(self.vocab_size, c_t, max_prompt_len, rng)
            self.fusion = FusionModule(SCALES, c_v, c_t, prompt_count, rng,
                                       residual=fuse_residual)
        else:
            self.text = None
            self.fusion = None
        self.motion = MotionModule(SCALES, c_v, groups, rng)
        self.decoder = FpnDecoder(c_v, decoder_width, rng)

    # -- parameters ------------------------------------------------------------

    def params(self) -> dict:
        out = {}
        out.update(self.vision.params("encoder"))
        if self.use_vlf:
            out.update(self.text.params("text"))
            out.update(self.fusion.params("vlf"))
        out.update(self.motion.params("tsm"))
        out.update(self.decoder.params("head"))
        return out

    # -- forward ---------------------------------------------------------------

    def encode_text(self, prompt_set: PromptSet) -> Tensor:
        if not self.use_vlf:
            raise ValueError("text encoding requested but fusion is disabled")
        if prompt_set.count != self.prompt_count:
            raise ValueError(
                f"prompt count {prompt_set.count} != model prompt_count {self.prompt_count}"
            )
        return self.text(prompt_set)

    def forward_batch(self, clips: np.ndarray, prompt_set: PromptSet | None,
                      center_index: int) -> Tensor:
        """clips: (B, T, H, W, 3) float frames -> logits (B, 1, H, W).

        Correlates the center frame against its clip neighbors (clamped
        inside the clip) and decodes the refined maps.
        """
        b, t, h, w, _ = clips.shape
        flat = clips.reshape(b * t, h, w, 3)
        pyramids = self.vision.encode_frames(flat)  # {scale: (B*T, C, h, w)}
        if self.use_vlf:
            f_t = self.encode_text(prompt_set)
            fused_all = self.fusion(pyramids, f_t)
        else:
            fused_all = pyramids
        prev_t = max(center_index - 1, 0)
        next_t = min(center_index + 1, t - 1)
        per_scale_batches = {s: [] for s in SCALES}
        for i in range(b):
            sel = {
                s: tape.getitem(fused_all[s], slice(i * t, (i + 1) * t))
                for s in SCALES
            }
            feats = self.motion(sel, prev_t, center_index, next_t)
            for s in SCALES:
                per_scale_batches[s].append(feats[s].gsa)
        maps = {s: tape.stack(per_scale_batches[s], axis=0) for s in SCALES}
        return self.decoder(maps, (h, w))

    def infer_prob(self, clip: np.ndarray, prompt_set: PromptSet | None,
                   center_index: int) -> MaskLogits:
        """clip: (T, H, W, 3) -> center-frame MaskLogits, no graph recorded."""
        with tape.no_grad():
            logits = self.forward_batch(clip[None], prompt_set, center_index)
        arr = logits.data[0, 0]
        return MaskLogits(logits=arr, prob=1.0 / (1.0 + np.exp(-arr)))

    # -- checkpointing -----------------------------------------------------------

    def meta(self) -> dict:
        return {
            "resolution": list(self.resolution),
            "c_v": self.c_v,
            "c_t": self.c_t,
            "groups": self.groups,
            "decoder_width": self.decoder_width,
            "prompt_count": self.prompt_count,
            "max_prompt_len": self.max_prompt_len,
            "vocab_size": self.vocab_size,
            "use_vlf": self.use_vlf,
            "fuse_residual": self.fuse_residual,
            "encoder": self.encoder_kind,
            "gsa_blocks": "plain convolutions, multiplicative pair, residual",
        }

    def save(self, path, extra_meta: dict | None = None):
        meta = self.meta()
        if extra_meta:
            meta.update(extra_meta)
        save_checkpoint(path, self.params(), meta)

    @classmethod
    def load(cls, path) -> "SegmentationModel":
        arrays, meta = load_checkpoint(path)
        model = cls(
            resolution=tuple(meta["resolution"]),
            c_v=meta["c_v"],
            c_t=meta["c_t"],
            groups=meta["groups"],
            decoder_width=meta["decoder_width"],
            prompt_count=meta["prompt_count"],
            max_prompt_len=meta["max_prompt_len"],
            vocab_size=meta["vocab_size"],
            use_vlf=meta["use_vlf"],
            fuse_residual=meta["fuse_residual"],
            encoder=meta["encoder"],
        )
        assign_params(model.params(), arrays)
        model._loaded_meta = meta
        return model
