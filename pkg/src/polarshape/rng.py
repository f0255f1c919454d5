"""Deterministic random substreams keyed by (seed, tags).

Every source of randomness in the pipeline is a counter-based generator
derived from an explicit integer seed plus string/int tags (scene id,
stage name, scene index).  Streams for different tag tuples are
independent, so per-scene work can be scheduled in any order, serial or
parallel, without changing a single drawn value.
"""

import hashlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *tags) -> np.random.Generator:
    """Generator that depends only on (seed, tags), never on call order."""
    entropy = [int(seed)] + [_tag_to_int(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


class RandomStream:
    """Per-scene draw stream for augmentation.

    Draws are consumed in a fixed order by the augmentation pipeline
    (kernel choice, then noise sigma, then noise fields), so identical
    (seed, scene_id) pairs reproduce bit-identical results.
    """

    def __init__(self, seed: int, scene_id: str, stage: str = "augment"):
        self.seed = int(seed)
        self.scene_id = str(scene_id)
        self.stage = str(stage)
        self._gen = substream(self.seed, self.scene_id, self.stage)

    def uniform(self, lo: float, hi: float) -> float:
        return float(self._gen.uniform(lo, hi))

    def choice(self, options):
        return options[int(self._gen.integers(0, len(options)))]

    def normal_field(self, shape, sigma: float) -> np.ndarray:
        return self._gen.normal(0.0, sigma, size=shape)
