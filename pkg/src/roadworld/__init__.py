"""Desk-scale driving world model: conditional diffusion video generation
driven by structured traffic conditions, with recurrent condition dynamics
for action-conditioned prediction."""

__version__ = "0.1.0"
