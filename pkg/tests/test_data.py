import math

import numpy as np
import pytest

from hyperdisco.data import (
    Dataset,
    GroundTruth,
    ModeBlock,
    NoiseSpec,
    benchmark_truth,
    cardiac_baseline_truth,
    cardiac_protocols,
    forward_stress,
    generate_from_params,
    generate_synthetic,
    isotropic_benchmark,
    load_csv,
    load_treloar,
    parse_csv,
    save_csv,
    stretch_grid,
)
from hyperdisco.errors import ConfigurationError, DomainError, ParseError
from hyperdisco.kinematics import LoadingMode
from hyperdisco.library import make_isotropic_library

UT = LoadingMode("UT", ("P11",))


def o2_ut(lam):
    # c alpha (lambda^(alpha-1) - lambda^(-alpha/2-1)) summed over both terms.
    return sum(c * a * (lam ** (a - 1) - lam ** (-a / 2 - 1)) for c, a in ((16.0, -3.0), (8.0, 3.0)))


def test_o2_examples():
    truth = benchmark_truth("O2")
    s = forward_stress(truth.lib, truth.coeffs, UT, np.array([[1.0], [2.0]]))
    assert s[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert s[1, 0] == pytest.approx(o2_ut(2.0), rel=1e-12)
    assert s[1, 0] == pytest.approx(156.64, abs=0.005)


def test_benchmark_truth_supports():
    assert benchmark_truth("O2").lib.n_terms == 6
    mr2 = benchmark_truth("MR2")
    assert [mr2.lib.labels[j] for j in mr2.support] == ["(I1-3)", "(I2-3)"]
    np.testing.assert_array_equal(mr2.coeffs[mr2.support], [40.0, 20.0])
    assert len(benchmark_truth("MR2O2").support) == 4
    assert len(benchmark_truth("MR1O1").support) == 2
    with pytest.raises(ConfigurationError):
        benchmark_truth("XYZ")


def test_zero_stress_at_reference_for_truths():
    for name in ("O2", "MR2", "MR1O1", "MR2O2"):
        truth = benchmark_truth(name)
        for kind in ("UT", "PS", "EBT"):
            s = forward_stress(truth.lib, truth.coeffs, LoadingMode(kind, ("P11",)), np.array([[1.0]]))
            assert s[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_neo_hookean_law():
    lib = make_isotropic_library(1)
    truth = GroundTruth("nh", lib, np.array([3.0, 0.0]))
    data = generate_synthetic(truth, [UT], 60)
    lam = data.blocks[0].params[:, 0]
    np.testing.assert_allclose(data.blocks[0].stress[:, 0], 2 * 3.0 * (lam - lam ** -2.0), rtol=1e-10, atol=1e-10)


def test_grid_avoids_reference():
    g = stretch_grid(0.6, 5.0, 12)
    assert not np.any(np.isclose(g, 1.0))
    # 0.6 + 0.4k hits 1.0 at k = 1 for this grid.
    g = stretch_grid(0.6, 2.2, 5)
    assert 1.0 not in g and g[1] == pytest.approx(1.2)
    assert len(stretch_grid(0.6, 5.0, 60)) == 60


def test_noise_free_equals_clean():
    noisy, clean = isotropic_benchmark("MR2O2", 0.0, return_clean=True)
    np.testing.assert_array_equal(noisy.observations, clean.observations)


def test_noise_reproducible():
    a = isotropic_benchmark("O2", 0.05, seed=11)
    b = isotropic_benchmark("O2", 0.05, seed=11)
    c = isotropic_benchmark("O2", 0.05, seed=12)
    np.testing.assert_array_equal(a.observations, b.observations)
    assert not np.array_equal(a.observations, c.observations)


def test_noise_statistics():
    truth = benchmark_truth("MR2")
    modes = [LoadingMode(k, ("P11",)) for k in ("UT", "PS", "EBT")]
    noisy, clean = generate_synthetic(truth, modes, 400, (0.6, 5.0), NoiseSpec(0.10, 2024), return_clean=True)
    rel = (noisy.observations - clean.observations) / np.abs(clean.observations)
    assert rel.size >= 1000
    assert 0.09 <= rel.std() <= 0.11


def test_noise_needs_seed():
    with pytest.raises(ConfigurationError):
        NoiseSpec(0.05)


def test_domain_error_on_non_positive_range():
    with pytest.raises(DomainError):
        generate_synthetic(benchmark_truth("MR2"), [UT], 10, (0.0, 2.0))


def test_csv_round_trip(tmp_path):
    data = isotropic_benchmark("MR2O2", 0.1, seed=3)
    path = tmp_path / "d.csv"
    save_csv(data, path)
    again = load_csv(path)
    assert again.units == data.units
    assert [b.name for b in again.blocks] == [b.name for b in data.blocks]
    for a, b in zip(data.blocks, again.blocks):
        np.testing.assert_array_equal(a.params, b.params)
        np.testing.assert_array_equal(a.stress, b.stress)


def test_csv_round_trip_two_components(tmp_path):
    blocks = cardiac_protocols(n_points=4)
    data = generate_from_params(cardiac_baseline_truth(), blocks, NoiseSpec(0.1, 5), units="kPa")
    path = tmp_path / "c.csv"
    save_csv(data, path)
    again = load_csv(path)
    assert len(again.blocks) == 11
    for a, b in zip(data.blocks, again.blocks):
        assert a.mode == b.mode
        np.testing.assert_array_equal(a.params, b.params)
        np.testing.assert_array_equal(a.stress, b.stress)


def test_treloar_fixture():
    d = load_treloar()
    assert [b.mode.kind.value for b in d.blocks] == ["UT", "PS", "EBT"]
    assert d.units == "MPa"


@pytest.mark.parametrize("text,row", [
    ("", None),
    ("# units: Pa\nmode_kind,block_id,p1,p2,component\nUT,a,1.5,,P11\n", 2),
    ("mode_kind,block_id,p1,p2,component,value\nUT,a,1.5,,P11,1.0\nXX,b,1.5,,P11,2.0\n", 3),
    ("mode_kind,block_id,p1,p2,component,value\nUT,a,abc,,P11,1.0\n", 2),
    ("mode_kind,block_id,p1,p2,component,value\nUT,a,1.5,,P11,1.0\nUT,a,2.0,,P11,x\n", 3),
])
def test_parse_errors(text, row):
    with pytest.raises(ParseError) as exc:
        parse_csv(text)
    if row is not None:
        assert exc.value.row == row
        assert f"row {row}" in str(exc.value)


def test_unknown_units():
    with pytest.raises(ConfigurationError):
        Dataset([ModeBlock(UT, [2.0], [1.0])], units="psi")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_csv(tmp_path / "nope.csv")


def test_truth_json_round_trip():
    truth = cardiac_baseline_truth()
    again = GroundTruth.from_dict(truth.to_dict())
    np.testing.assert_array_equal(again.coeffs, truth.coeffs)
    np.testing.assert_array_equal(np.nan_to_num(again.w, nan=-1.0), np.nan_to_num(truth.w, nan=-1.0))
    assert GroundTruth.from_dict({"name": "O2"}).support == benchmark_truth("O2").support


def test_cardiac_protocol_layout():
    blocks = cardiac_protocols()
    assert len(blocks) == 11
    assert sum(1 for _, m, _ in blocks if m.kind.value == "ANISO_BT") == 5
    assert math.isclose(blocks[0][2][-1, 0], 1.1)
