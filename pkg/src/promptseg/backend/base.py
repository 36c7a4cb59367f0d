"""Inference backend interface and the spec-string factory."""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod

from ..errors import BackendConfigError, DimensionMismatchError
from .types import ImageTensor, PadInfo, RawNetworkOutput


class InferenceBackend(ABC):
    """Produces RawNetworkOutput from a letterboxed image tensor.

    `infer` is pure: identical inputs yield byte-identical outputs. The call
    counter exists so callers can assert stage one ran exactly once.
    """

    def __init__(self, input_size: int, reg_max: int):
        self.input_size = input_size
        self.reg_max = reg_max
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def call_count(self) -> int:
        return self._calls

    def infer(self, tensor: ImageTensor, pad: PadInfo | None = None) -> RawNetworkOutput:
        if tensor.width != self.input_size or tensor.height != self.input_size:
            raise DimensionMismatchError(
                f"tensor is {tensor.width}x{tensor.height}, backend expects "
                f"{self.input_size}x{self.input_size}"
            )
        with self._lock:
            self._calls += 1
        out = self._infer(tensor, pad)
        out.validate(self.input_size, self.reg_max)
        return out

    @abstractmethod
    def _infer(self, tensor: ImageTensor, pad: PadInfo | None) -> RawNetworkOutput:
        ...


def backend_from_spec(spec: str, *, input_size: int, reg_max: int) -> InferenceBackend:
    """Build a backend from a "kind:path" string.

    Kinds: "mock:scene.json" (deterministic synthetic backend),
    "torchscript:model.pt", "onnx:model.onnx".
    """
    kind, sep, path = spec.partition(":")
    if not sep or not path:
        raise BackendConfigError(f"backend spec {spec!r} is not of the form kind:path")
    if kind == "mock":
        from .mock import MockBackend, SyntheticScene

        return MockBackend(SyntheticScene.from_file(path), input_size=input_size, reg_max=reg_max)
    if kind == "torchscript":
        from .torchscript import TorchScriptBackend

        return TorchScriptBackend(path, input_size=input_size, reg_max=reg_max)
    if kind == "onnx":
        from .onnx import OnnxBackend

        return OnnxBackend(path, input_size=input_size, reg_max=reg_max)
    raise BackendConfigError(f"unknown backend kind {kind!r}")
