from .complex import CubicalComplex, build_complex
from .diagram import PersistenceDiagram, PersistencePair, betti_at
from .oracle import oracle_persistence
from .reduction import compute_persistence, image_persistence

__all__ = [
    "CubicalComplex",
    "PersistenceDiagram",
    "PersistencePair",
    "betti_at",
    "build_complex",
    "compute_persistence",
    "image_persistence",
    "oracle_persistence",
]
