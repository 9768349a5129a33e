"""Brain-inspired stigmergy learning: a calcium-diffusion interaction kernel
driving multi-agent task allocation and pattern convergence."""

__version__ = "0.1.0"
