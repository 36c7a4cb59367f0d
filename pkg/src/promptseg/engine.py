"""One object tying a backend, an embedder, and thresholds together."""

from __future__ import annotations

import numpy as np

from .backend.base import InferenceBackend, backend_from_spec
from .backend.embed import EmbeddingBackend, embedder_from_spec
from .config import EngineConfig
from .edge import EdgeMap, edges_from_cache
from .maskgen import SegmentCache, segment_everything
from .prompt import EmbeddingMemo, PromptResult, PromptSpec, run_prompt


class Engine:
    def __init__(
        self,
        backend: InferenceBackend,
        cfg: EngineConfig | None = None,
        embedder: EmbeddingBackend | None = None,
    ):
        self.backend = backend
        self.cfg = cfg or EngineConfig()
        self.embedder = embedder

    @classmethod
    def from_specs(
        cls, backend_spec: str, cfg: EngineConfig | None = None, embedder_spec: str = "color"
    ) -> "Engine":
        cfg = cfg or EngineConfig()
        backend = backend_from_spec(backend_spec, input_size=cfg.input_size, reg_max=cfg.reg_max)
        return cls(backend, cfg, embedder_from_spec(embedder_spec))

    @property
    def stage_one_calls(self) -> int:
        return self.backend.call_count

    def segment_everything(self, image: bytes | np.ndarray, image_id: str | None = None) -> SegmentCache:
        return segment_everything(image, self.backend, self.cfg, image_id)

    def prompt(
        self, cache: SegmentCache, spec: PromptSpec, memo: EmbeddingMemo | None = None
    ) -> PromptResult:
        return run_prompt(
            cache,
            spec,
            embedder=self.embedder,
            memo=memo,
            closing_kernel=self.cfg.closing_kernel,
            closing_iterations=self.cfg.closing_iterations,
        )

    def edges(self, cache: SegmentCache) -> EdgeMap:
        return edges_from_cache(cache, self.cfg)
