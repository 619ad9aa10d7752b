"""Request model validation: the API surface rejects malformed configs early."""

import pytest
from pydantic import ValidationError

from sglab.schemas import (
    EvolveRequest,
    LateGapRequest,
    MinGapRequest,
    NeighborStatsRequest,
    SpectrumRequest,
)


def test_defaults_recorded():
    req = SpectrumRequest(n=8)
    dump = req.model_dump()
    assert dump["levels"] == 25
    assert dump["s_grid"] == (0.0, 1.0, 101)
    assert dump["perm"] == "random"
    assert dump["seed"] == 0


def test_extra_fields_rejected():
    with pytest.raises(ValidationError):
        SpectrumRequest(n=8, bogus=1)


def test_grid_validation():
    with pytest.raises(ValidationError):
        SpectrumRequest(n=8, s_grid=(0.5, 0.2, 10))
    with pytest.raises(ValidationError):
        SpectrumRequest(n=8, s_grid=(0.0, 1.5, 10))
    with pytest.raises(ValidationError):
        SpectrumRequest(n=8, s_grid=(0.0, 1.0, 1))


def test_levels_capped_by_dimension():
    with pytest.raises(ValidationError):
        SpectrumRequest(n=3, levels=9)
    SpectrumRequest(n=3, levels=8)


def test_min_gap_seed_range():
    with pytest.raises(ValidationError):
        MinGapRequest(n_list=[8], seeds=(3, 1))
    with pytest.raises(ValidationError):
        MinGapRequest(n_list=[])
    with pytest.raises(ValidationError):
        MinGapRequest(n_list=[30])
    req = MinGapRequest(n_list=[8, 10], seeds=(0, 4))
    assert req.tol == 1e-10


def test_late_gap_range():
    with pytest.raises(ValidationError):
        LateGapRequest(n=8, s_grid=(0.2, 1.0, 5))
    LateGapRequest(n=8, s_grid=(0.9, 1.0, 21))


def test_evolve_needs_positive_time():
    with pytest.raises(ValidationError):
        EvolveRequest(n=4, T=0.0)
    with pytest.raises(ValidationError):
        EvolveRequest(n=4, T=1.0, local_tol=1.0)


def test_neighbor_stats_exclusive_set_choice():
    with pytest.raises(ValidationError):
        NeighborStatsRequest(n=8, k=3)
    with pytest.raises(ValidationError):
        NeighborStatsRequest(n=8, k=3, gamma=0.5, c=0.2)
    NeighborStatsRequest(n=8, k=3, gamma=1.0)
    NeighborStatsRequest(n=8, k=3, c=0.2)
