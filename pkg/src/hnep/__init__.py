"""Variational equilibria of generalized Nash games and hierarchical equilibrium selection."""
