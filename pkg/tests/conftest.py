from pathlib import Path

import numpy as np
import pytest

from hdqss.keytree import HierarchyTree
from hdqss.models import IdealOracle, Key


FIXTURES = Path(__file__).parent / 'fixtures'
SCENARIOS = FIXTURES / 'scenarios'


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_tree(rng):
    """Alice with primaries Bob, Charlie, David on fixed 4-bit keys"""
    tree = HierarchyTree('Alice', 4)
    tree.join_primary('Bob', IdealOracle(Key.from_bits('1010')), rng)
    tree.join_primary('Charlie', IdealOracle(Key.from_bits('0110')), rng)
    tree.join_primary('David', IdealOracle(Key.from_bits('0011')), rng)
    return tree
