"""Números aleatorios basados en contador para ejecuciones reproducibles.

Cada uniforme se direcciona por ``(seed, stream, node, slot)``. Los slots se
agrupan en bloques; cada bloque sale de un generador Philox cuya clave se
deriva de ``(seed, stream, node)`` y cuyo contador arranca en el índice del
bloque, así cualquier slot de cualquier nodo se regenera sin repetir los demás.
"""
from enum import IntEnum
from typing import Dict, List, Tuple

import numpy as np

from app.core.config import settings


class Stream(IntEnum):
    ARRIVALS = 0
    DECISIONS = 1
    RELEASES = 2
    PROBES = 3


def _philox_key(seed: int, stream: int, node: int) -> np.ndarray:
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream), int(node)))
    return seq.generate_state(2, dtype=np.uint64)


class CounterRNG:
    """Uniformes indexadas por (seed, stream, node, slot)"""

    def __init__(self, seed: int, chunk_slots: int = None):
        self.seed = int(seed)
        self.chunk_slots = int(chunk_slots or settings.RNG_CHUNK_SLOTS)
        self._keys: Dict[Tuple[int, int], np.ndarray] = {}
        self._chunks: Dict[Tuple[int, int], Tuple[int, List[float]]] = {}

    def _key(self, stream: int, node: int) -> np.ndarray:
        key = self._keys.get((stream, node))
        if key is None:
            key = _philox_key(self.seed, stream, node)
            self._keys[(stream, node)] = key
        return key

    def chunk(self, stream: int, node: int, index: int) -> np.ndarray:
        """Uniformes para los slots [index*chunk_slots, (index+1)*chunk_slots)"""
        counter = np.array([0, 0, 0, index], dtype=np.uint64)
        bit_generator = np.random.Philox(counter=counter, key=self._key(stream, node))
        return np.random.Generator(bit_generator).random(self.chunk_slots)

    def uniform(self, stream: int, node: int, slot: int) -> float:
        index, offset = divmod(int(slot), self.chunk_slots)
        cached = self._chunks.get((stream, node))
        if cached is None or cached[0] != index:
            cached = (index, self.chunk(stream, node, index).tolist())
            self._chunks[(stream, node)] = cached
        return cached[1][offset]

    def uniforms(self, stream: int, n: int, slot: int) -> List[float]:
        return [self.uniform(stream, node, slot) for node in range(n)]

    def generator(self, stream: int, node: int = 0) -> np.random.Generator:
        """Generador secuencial para sorteos auxiliares (sondeos, distribuciones aleatorias)"""
        return np.random.Generator(np.random.Philox(key=self._key(stream, node)))
