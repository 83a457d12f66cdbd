"""Coverage-aware diversified news recommendation on a small numpy autodiff engine.

Subpackages: ``dcan.numerics`` (tensors, autodiff, layers, Adam, checkpoints) and
``dcan.data`` (MIND-format parsing, sequences, synthetic corpora). The model lives
in ``dcan.model``; ``dcan.training``, ``dcan.evaluation`` and ``dcan.ablation``
run experiments and ``dcan.cli`` wires them to the command line.
"""

__version__ = "0.1.0"
