"""Finite element library for viscous flow with weakly imposed
Dirichlet and free-slip boundary conditions (Nitsche's method), with all
boundary terms derived from the viscous flux by forward-mode automatic
differentiation."""

__version__ = "0.1.0"
