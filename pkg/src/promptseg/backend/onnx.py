"""File-based backend executing an ONNX model via onnxruntime.

The model must take one (1, 3, S, S) float32 input and expose the outputs
"cls_logits" (1, N), "dfl_logits" (1, N, 4*reg_max), "mask_coeffs" (1, N, K)
and "prototypes" (1, K, S/4, S/4), with N matching the stride-8/16/32 grid.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import BackendConfigError
from .base import InferenceBackend
from .types import ImageTensor, PadInfo, RawNetworkOutput, make_anchor_grid

OUTPUT_NAMES = ("cls_logits", "dfl_logits", "mask_coeffs", "prototypes")


class OnnxBackend(InferenceBackend):
    def __init__(self, path: str, input_size: int = 1024, reg_max: int = 26,
                 strides: tuple[int, ...] = (8, 16, 32)):
        super().__init__(input_size=input_size, reg_max=reg_max)
        self.strides = strides
        if not os.path.exists(path):
            raise BackendConfigError(f"model file not found: {path}")
        try:
            import onnxruntime
        except ImportError as exc:
            raise BackendConfigError(
                "onnxruntime is required for the ONNX backend "
                "(pip install 'promptseg[onnx]')"
            ) from exc
        try:
            self._session = onnxruntime.InferenceSession(
                path, providers=["CPUExecutionProvider"]
            )
        except Exception as exc:  # onnxruntime raises its own Fail type
            raise BackendConfigError(f"cannot load ONNX model {path}: {exc}") from exc
        names = {o.name for o in self._session.get_outputs()}
        missing = set(OUTPUT_NAMES) - names
        if missing:
            raise BackendConfigError(f"ONNX model lacks outputs: {sorted(missing)}")
        self._input_name = self._session.get_inputs()[0].name
        self._anchors = make_anchor_grid(input_size, strides)

    def _infer(self, tensor: ImageTensor, pad: PadInfo | None) -> RawNetworkOutput:
        try:
            results = self._session.run(list(OUTPUT_NAMES), {self._input_name: tensor.data[None]})
        except Exception as exc:
            raise BackendConfigError(f"model execution failed: {exc}") from exc
        cls_logits, dfl_logits, coeffs, protos = (
            np.asarray(r, dtype=np.float32)[0] for r in results
        )
        return RawNetworkOutput(
            anchors=self._anchors,
            cls_logits=cls_logits,
            dfl_logits=dfl_logits,
            mask_coeffs=coeffs,
            prototypes=protos,
        )
