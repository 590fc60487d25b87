import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from treepert import reference_instance


@pytest.fixture
def instance_a():
    return reference_instance()
