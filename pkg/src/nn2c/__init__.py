"""nn2c: compile trained feed-forward networks into allocation-free C.

Pipeline: parse a model document into a validated layer graph, check it
against the target's flash budget, analyse fixed-point fidelity, and emit
self-contained C source whose outputs match the reference interpreter.
"""

from .codegen import CodegenOptions, FootprintReport, SourceBundle, footprint, generate_code
from .errors import ModelError
from .interpreter import forward, forward_traced
from .ir import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    Flatten,
    INPUT_ID,
    LayerSpec,
    LayerWeights,
    MaxPool1D,
    MaxPool2D,
    NetworkGraph,
    TensorData,
    execution_order,
    infer_shapes,
    param_count,
    validate_graph,
)
from .parser import parse_model, read_weight_sidecar, serialize_model, write_weight_sidecar
from .quantizer import FidelityReport, QFormat, fidelity_report, forward_fixed, quantize_value

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "CodegenOptions",
    "Conv1D",
    "Conv2D",
    "Dense",
    "FidelityReport",
    "Flatten",
    "FootprintReport",
    "INPUT_ID",
    "LayerSpec",
    "LayerWeights",
    "MaxPool1D",
    "MaxPool2D",
    "ModelError",
    "NetworkGraph",
    "QFormat",
    "SourceBundle",
    "TensorData",
    "execution_order",
    "fidelity_report",
    "footprint",
    "forward",
    "forward_fixed",
    "forward_traced",
    "generate_code",
    "infer_shapes",
    "param_count",
    "parse_model",
    "quantize_value",
    "read_weight_sidecar",
    "serialize_model",
    "validate_graph",
    "write_weight_sidecar",
    "__version__",
]
