"""Numerical experiments on Colombeau-type generalized functions.

Grid-sampled test functions, the representatives P, Q, R0-R5 and the
embeddings, test-object paths, the diffeomorphism action, and a
deterministic experiment harness with a small CLI.
"""

__version__ = "0.1.0"
