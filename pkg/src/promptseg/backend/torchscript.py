"""File-based backend executing a TorchScript module.

The module must accept a (1, 3, S, S) float32 tensor and return the tuple
(cls_logits (1, N), dfl_logits (1, N, 4*reg_max), mask_coeffs (1, N, K),
prototypes (1, K, S/4, S/4)) with N matching the stride-8/16/32 anchor grid.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import BackendConfigError
from .base import InferenceBackend
from .types import ImageTensor, PadInfo, RawNetworkOutput, make_anchor_grid


class TorchScriptBackend(InferenceBackend):
    def __init__(self, path: str, input_size: int = 1024, reg_max: int = 26,
                 strides: tuple[int, ...] = (8, 16, 32)):
        super().__init__(input_size=input_size, reg_max=reg_max)
        self.strides = strides
        if not os.path.exists(path):
            raise BackendConfigError(f"model file not found: {path}")
        try:
            import torch
        except ImportError as exc:
            raise BackendConfigError(
                "torch is required for the TorchScript backend "
                "(pip install 'promptseg[torchscript]')"
            ) from exc
        self._torch = torch
        try:
            self._module = torch.jit.load(path, map_location="cpu").eval()
        except (RuntimeError, ValueError) as exc:
            raise BackendConfigError(f"cannot load TorchScript model {path}: {exc}") from exc
        self._anchors = make_anchor_grid(input_size, strides)

    def _infer(self, tensor: ImageTensor, pad: PadInfo | None) -> RawNetworkOutput:
        torch = self._torch
        with torch.no_grad():
            inp = torch.from_numpy(tensor.data[None])
            try:
                outputs = self._module(inp)
            except RuntimeError as exc:
                raise BackendConfigError(f"model execution failed: {exc}") from exc
        if not isinstance(outputs, (tuple, list)) or len(outputs) != 4:
            raise BackendConfigError(
                "TorchScript model must return (cls_logits, dfl_logits, mask_coeffs, prototypes)"
            )
        cls_logits, dfl_logits, coeffs, protos = (
            np.asarray(o.squeeze(0).numpy(), dtype=np.float32) for o in outputs
        )
        return RawNetworkOutput(
            anchors=self._anchors,
            cls_logits=cls_logits,
            dfl_logits=dfl_logits,
            mask_coeffs=coeffs,
            prototypes=protos,
        )
