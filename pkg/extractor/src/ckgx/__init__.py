"""Offline entity feature extraction for the ckgc engine.

Turns an entity table (id, text) into a feature file: a contextual
embedding from a pretrained transformer, static word vectors mean-pooled
over the phrase, or both concatenated. Output is the CKGF binary format
the engine trains from; the two packages share only that file contract.
"""

from .ckgf import read_features, write_features
from .entities import read_entities
from .extract import extract
from .static_vectors import StaticVectors

__all__ = ["StaticVectors", "extract", "read_entities", "read_features",
           "write_features"]
