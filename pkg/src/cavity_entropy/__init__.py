"""Entropy transfer from a three-level particle to a coherent cavity field.

Modules:
    hilbert       states, operators, tensor products, partial traces
    dynamics      Lindblad integration of the particle-cavity system
    steady_state  closed-form equilibrium states and fidelities
    infotheory    entropies, Uhlmann fidelity, Husimi Q, mutual information
    bayes         click / no-click inference of the particle's start state
"""

__version__ = "0.1.0"

from . import bayes, dynamics, hilbert, infotheory, steady_state  # noqa: E402,F401
