"""prodrank: neural and lexical ranking for eCommerce product search.

The package covers the full loop: simulate user sessions against a
synthetic catalog, mine relevant/irrelevant training pairs from the click
log, train pairwise neural rankers on them, and score the result against
a tf-idf baseline.
"""

__version__ = "0.1.0"

from .text import Tokens, Vocabulary, build_vocabulary, normalize  # noqa: F401
from .autodiff import ComputeGraph, ShapeError, Tensor  # noqa: F401
