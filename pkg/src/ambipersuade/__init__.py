"""Solvers for persuasion games with ambiguous experiments."""
