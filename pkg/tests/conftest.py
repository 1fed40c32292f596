import numpy as np
import pytest

from radiofill._kernels import warmup
from radiofill.grid import RadioMap, RegionState, region_state_from_mask


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile jitted kernels once so timed tests measure the algorithm
    warmup()


def make_map(values, norm_min=0.0, norm_max=1.0) -> RadioMap:
    return RadioMap(np.asarray(values, dtype=np.float64),
                    norm_min=norm_min, norm_max=norm_max)


def make_state(radio_map: RadioMap, missing_mask) -> RegionState:
    return region_state_from_mask(radio_map, np.asarray(missing_mask, dtype=bool))
