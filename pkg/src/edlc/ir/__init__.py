"""Kernel IR, lowering, optimization passes, fission and fusion."""

from edlc.ir.fission import auto_partition, canonical, fission, fuse
from edlc.ir.kernel import Assign, KernelIR, format_kernel, interpret, lower, stencil_expr
from edlc.ir.passes import DEFAULT_PIPELINE, PASSES, PassReport, cse, dce, peephole, run_pipeline

__all__ = [
    "Assign", "KernelIR", "format_kernel", "interpret", "lower", "stencil_expr", "PassReport", "cse", "dce",
    "peephole", "run_pipeline", "PASSES", "DEFAULT_PIPELINE", "fission", "fuse", "auto_partition", "canonical",
]
