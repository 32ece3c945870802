"""gaugelab: gauge freedom, exact likelihood and intrinsic dimension for score-based diffusion ODEs."""

__version__ = "0.1.0"
