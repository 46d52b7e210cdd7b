"""A desk-scale proof copilot for intuitionistic propositional logic.

The package bundles a tactic kernel, a decision-procedure oracle,
tactic suggestion and best-first proof search over pluggable candidate
generators, embedding-based premise selection, a benchmark harness, an
automated sorry-repair bot, and an HTTP service for interactive use.
"""

__version__ = "0.1.0"
