"""Seed expansion.

A root seed feeds ``numpy.random.SeedSequence``; its spawned children, in
order, drive initialisation draws, per-turn sampling during learning, and
sampling in the post-learning evaluation episode.  The order is fixed, so a
given seed always yields the same streams.
"""

import numpy as np

_STREAMS = ("init", "sampling", "evaluation")


class RunStreams:
    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed >= 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
        for name, child in zip(_STREAMS, children):
            setattr(self, name, np.random.default_rng(child))
