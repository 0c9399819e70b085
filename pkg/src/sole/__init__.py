"""Bit-exact integer models of log2-domain softmax and integer layernorm.

The package splits cleanly into three layers:

* kernels -- :mod:`sole.e2softmax`, :mod:`sole.ailayernorm`: shift-and-table
  integer datapaths, deterministic down to the bit.
* references -- :mod:`sole.oracle`: float64 ground truth plus error reporting,
  sharing no code with the kernels.
* tooling -- :mod:`sole.calib` (quantizer fitting), :mod:`sole.pipemodel`
  (cycle counts), :mod:`sole.tensorio` and :mod:`sole.harness` (file formats,
  verification commands, the ``sole`` CLI).
"""

from .ailayernorm import (
    AffineParams,
    LayerNormConfig,
    ailayernorm,
    ailayernorm_real,
    dynamic_compress,
    inv_sqrt,
    square_decompress,
)
from .calib import PTFParams, calibrate_minmax, calibrate_pow2, calibrate_ptf, dequantize, quantize
from .e2softmax import SoftmaxConfig, aldivision, e2softmax, e2softmax_real, log2exp, two_pass
from .fxp import FixedVal, clip, leading_one, round_shift_right
from .oracle import (
    ErrorReport,
    aldivision_bias_mc,
    compare,
    layernorm_ref,
    mitchell_div,
    mitchell_log2,
    softmax_ref,
)
from .pipemodel import PipeConfig, cycles_layernorm, cycles_softmax
from .tensorio import load_tensor, save_tensor

__version__ = "0.1.0"

__all__ = [
    "AffineParams",
    "ErrorReport",
    "FixedVal",
    "LayerNormConfig",
    "PTFParams",
    "PipeConfig",
    "SoftmaxConfig",
    "ailayernorm",
    "ailayernorm_real",
    "aldivision",
    "aldivision_bias_mc",
    "calibrate_minmax",
    "calibrate_pow2",
    "calibrate_ptf",
    "clip",
    "compare",
    "cycles_layernorm",
    "cycles_softmax",
    "dequantize",
    "dynamic_compress",
    "e2softmax",
    "e2softmax_real",
    "inv_sqrt",
    "layernorm_ref",
    "leading_one",
    "load_tensor",
    "log2exp",
    "mitchell_div",
    "mitchell_log2",
    "quantize",
    "round_shift_right",
    "save_tensor",
    "softmax_ref",
    "square_decompress",
    "two_pass",
    "__version__",
]
