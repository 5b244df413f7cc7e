"""Static word vectors: word2vec-style text files and phrase pooling.

A phrase embedding is the mean of its words' vectors (a single-word
phrase is that word's vector exactly). Out-of-vocabulary words fall back
to the mean of their boundary-marked character n-grams (``<word>``,
n = 3..6) looked up in the same table, which recovers subword entries
when the file exports them; a word with no n-gram hits contributes the
zero vector.
"""

import numpy as np

from .errors import ExtractorError

NGRAM_MIN = 3
NGRAM_MAX = 6


class StaticVectors:
    def __init__(self, vectors: dict[str, np.ndarray], dim: int, source: str = ""):
        self.vectors = vectors
        self.dim = dim
        self.source = source

    def __len__(self) -> int:
        return len(self.vectors)

    @classmethod
    def load(cls, path: str) -> "StaticVectors":
        """Parse a ``.vec`` text file: header "count dim", then one
        "token v1 .. vdim" line per token."""
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ExtractorError(f"{path}: expected 'count dim' header")
            try:
                count, dim = int(header[0]), int(header[1])
            except ValueError:
                raise ExtractorError(f"{path}: expected 'count dim' header") from None
            if dim < 1:
                raise ExtractorError(f"{path}: vector dim must be positive")
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if len(parts) < dim + 1:
                    raise ExtractorError(f"{path}:{lineno}: expected a token "
                                         f"and {dim} values")
                vec = np.asarray(parts[1:dim + 1], dtype=np.float32)
                if not np.all(np.isfinite(vec)):
                    raise ExtractorError(f"{path}:{lineno}: non-finite value")
                vectors[parts[0]] = vec
        if len(vectors) != count:
            raise ExtractorError(f"{path}: header says {count} tokens, "
                                 f"file has {len(vectors)}")
        return cls(vectors, dim, source=path)

    def word(self, token: str) -> np.ndarray:
        """Vector of one token, via the n-gram fallback when unknown."""
        hit = self.vectors.get(token)
        if hit is not None:
            return hit
        marked = f"<{token}>"
        grams = []
        for n in range(NGRAM_MIN, NGRAM_MAX + 1):
            for i in range(len(marked) - n + 1):
                g = self.vectors.get(marked[i:i + n])
                if g is not None:
                    grams.append(g)
        if grams:
            return np.mean(grams, axis=0, dtype=np.float64).astype(np.float32)
        return np.zeros(self.dim, dtype=np.float32)

    def phrase(self, text: str, lowercase: bool = True) -> np.ndarray:
        """Mean of the whitespace-separated words' vectors."""
        if lowercase:
            text = text.lower()
        words = text.split()
        if not words:
            raise ExtractorError("cannot embed an empty phrase")
        total = np.zeros(self.dim, dtype=np.float64)
        for w in words:
            total += self.word(w)
        return (total / len(words)).astype(np.float32)
