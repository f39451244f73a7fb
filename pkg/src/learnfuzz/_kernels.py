"""Backend selection for the hot kernels.

The compiled extension is used when it was built; set ``LEARNFUZZ_PURE=1`` to
force the pure-Python fallback.
"""
import os

if os.environ.get("LEARNFUZZ_PURE"):
    from learnfuzz import _pure as impl
else:
    try:
        from learnfuzz import _speedups as impl
    except ImportError:  # extension not built
        from learnfuzz import _pure as impl

BACKEND = "pure" if impl.__name__.endswith("_pure") else "compiled"

MealyKernel = impl.MealyKernel
ProgramKernel = impl.ProgramKernel
product_bfs = impl.product_bfs
record_edges = impl.record_edges
has_new_bits = impl.has_new_bits
BUCKET_MASK = impl.BUCKET_MASK
MAP_SIZE = impl.MAP_SIZE
