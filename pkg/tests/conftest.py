import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from horolab.groups import free_group, free_product_of_cyclics


@pytest.fixture(scope="session")
def f2():
    return free_group(2)


@pytest.fixture(scope="session")
def f3():
    return free_group(3)


@pytest.fixture(scope="session")
def z2z3():
    return free_product_of_cyclics([2, 3])
