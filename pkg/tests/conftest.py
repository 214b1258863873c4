import math
import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chebyshev_coords.cross import find_cross  # noqa: E402
from chebyshev_coords.instances import cone_disk, flat_disk, random_instance  # noqa: E402
from chebyshev_coords.net import build_nets  # noqa: E402

EPS_CYCLE = (0.05, 0.1, 0.3)


def suite_eps(seed):
    return EPS_CYCLE[seed % 3]


@lru_cache(maxsize=None)
def random_case(seed):
    eps = suite_eps(seed)
    inst = random_instance(seed, eps)
    return inst, eps


@lru_cache(maxsize=None)
def random_cross(seed):
    inst, eps = random_case(seed)
    return find_cross(inst.surface, eps)


@lru_cache(maxsize=None)
def single_cone(w, direction=math.pi / 2):
    return cone_disk(atoms=[(0.0, 0.0, w)], directions=[direction])


@lru_cache(maxsize=None)
def flat_case():
    inst = flat_disk()
    fig = find_cross(inst.surface, 0.1)
    nets, reports = build_nets(inst.surface, fig, 0.5, (6, 6))
    return inst, fig, nets, reports


@pytest.fixture(scope="session")
def flat():
    return flat_case()
