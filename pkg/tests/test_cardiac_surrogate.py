"""End-to-end discovery on a synthetic myocardium dataset generated from the
published 4-term model. This stands in for the measured data, which is not
bundled."""

import numpy as np
import pytest

from hyperdisco.data import cardiac_baseline_truth, cardiac_protocols, generate_from_params, load_csv, save_csv
from hyperdisco.pipeline import LoadedData, RunConfig, discover


@pytest.fixture(scope="module")
def surrogate():
    truth = cardiac_baseline_truth()
    return truth, generate_from_params(truth, cardiac_protocols(), units="kPa")


def test_surrogate_layout(surrogate, tmp_path):
    _, data = surrogate
    assert len(data.blocks) == 11
    save_csv(data, tmp_path / "c.csv")
    again = load_csv(tmp_path / "c.csv")
    for a, b in zip(data.blocks, again.blocks):
        np.testing.assert_array_equal(a.stress, b.stress)


def test_surrogate_discovery(surrogate):
    truth, data = surrogate
    config = RunConfig(dataset={"builtin": "treloar"}, seed=0)
    results, _, _, _ = discover(config, loaded=LoadedData(data, truth.lib, data, truth))
    assert len(results) == 9
    for cell in results:
        assert cell.ok, cell.error
        assert cell.model.metrics["R2"] >= 0.999
        # The dominant fibre term, exp-quad I4f, is always found.
        assert 11 in cell.model.active_terms
        assert cell.timings["sparse_s"] < 5.0 and cell.timings["refine_s"] < 120.0
