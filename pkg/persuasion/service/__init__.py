"""Solvers, constructors and analyses behind the CLI."""
