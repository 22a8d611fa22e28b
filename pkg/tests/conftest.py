import numpy as np
import pytest

from opuc.generators import coulomb_family, random_disk_family
from opuc.models import CircleMeasure, VerblunskySequence
from opuc.resource_manager import ResourceManager


@pytest.fixture
def single_thread():
    """ResourceManager with one worker (no thread pool)."""
    return ResourceManager(max_workers=1)


@pytest.fixture
def zero_sequence():
    """alpha identically zero, 64 coefficients."""
    return VerblunskySequence(np.zeros(64, dtype=np.complex128), generator_tag="zero")


@pytest.fixture
def random_sequence():
    """32 coefficients uniform in the disk of radius 1/2."""
    return random_disk_family(0.5, 32, seed=11)


@pytest.fixture
def coulomb_random():
    """Coulomb decay c=0.3 with random phases."""
    return coulomb_family(0.3, 512, phase_rule="random", seed=3)


@pytest.fixture
def atom_mixture():
    """(1 - w) Lebesgue + w delta_{1.0} with w = 1/2 on 4096 points."""
    w = 0.5
    return CircleMeasure.uniform(4096, mass=1.0 - w).with_atoms([(1.0, w)])


@pytest.fixture
def write_config(tmp_path):
    """Writes a key = value config file and returns its path."""
    def _write(text: str, name: str = "run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
