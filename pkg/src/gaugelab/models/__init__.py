"""Closed-form models: forward schedule, densities, manifolds and fields."""
