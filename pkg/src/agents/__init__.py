"""Training, synthesis and evaluation agents."""
