"""Competitive Bayesian persuasion: equilibrium construction and verification.

The package follows a layered layout (core, model, service, utils, cli):
closed-form equilibria for two senders and n receivers, a dense simplex
best-response oracle, verification reports and price-of-stability bounds.
"""

__version__ = "0.1.0"
