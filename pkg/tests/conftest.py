import numpy as np
import pytest

from prodrank.catalog import Sku


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_catalog():
    """Six hand-built SKUs with predictable token overlap."""
    return [
        Sku("sku0", "red oak chair", "sturdy classic", "chair", ("red", "oak")),
        Sku("sku1", "blue oak chair", "modern", "chair", ("blue", "oak")),
        Sku("sku2", "red pine table", "rustic charm", "table", ("red", "pine")),
        Sku("sku3", "green velvet sofa", "plush comfort", "sofa", ("green", "velvet")),
        Sku("sku4", "red oak table", "family size", "table", ("red", "oak")),
        Sku("sku5", "oak bookshelf", "five shelves", "bookshelf", ("oak",)),
    ]
