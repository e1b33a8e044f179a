import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdisco.assembly import RegressionSystem, assemble, back_transform, mode_weights, standardize
from hyperdisco.data import Dataset, ModeBlock, benchmark_truth, isotropic_benchmark
from hyperdisco.errors import ContractViolation, DegenerateError
from hyperdisco.kinematics import LoadingMode
from hyperdisco.library import make_isotropic_library, make_orthotropic_library
from hyperdisco.refine import refit_linear

UT = LoadingMode("UT", ("P11",))
PS = LoadingMode("PS", ("P11",))


def test_weights_example():
    d = Dataset([ModeBlock(UT, [2.0, 3.0], [1.0, -1.0]), ModeBlock(PS, [2.0], [2.0])])
    np.testing.assert_allclose(mode_weights(d), [np.sqrt(2.5), np.sqrt(2.5) / 2.0], rtol=1e-14)


def test_weights_balanced_and_single():
    d = Dataset([ModeBlock(UT, [2.0], [3.0]), ModeBlock(PS, [2.0], [-3.0])])
    np.testing.assert_allclose(mode_weights(d), [1.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(mode_weights(Dataset([ModeBlock(UT, [2.0, 3.0], [1.0, 5.0])])), [1.0])


def test_zero_block_weight_error():
    d = Dataset([ModeBlock(UT, [2.0], [0.0]), ModeBlock(PS, [2.0], [1.0])])
    with pytest.raises(DegenerateError):
        mode_weights(d)


def test_balanced_weights_leave_system_unchanged():
    lib = make_isotropic_library(2)
    d = Dataset([ModeBlock(UT, [1.5, 2.0], [2.0, -2.0]), ModeBlock(PS, [1.5, 2.5], [-2.0, 2.0])])
    a = assemble(d, lib, weighted=True)
    b = assemble(d, lib, weighted=False)
    np.testing.assert_array_equal(a.raw_design, b.raw_design)
    np.testing.assert_array_equal(a.raw_target, b.raw_target)


def test_design_shape_and_standardization():
    data = isotropic_benchmark("MR2")
    sys_ = assemble(data, benchmark_truth("MR2").lib)
    assert sys_.design.shape == (180, 9)
    np.testing.assert_allclose(sys_.design.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(sys_.design.std(axis=0), 1.0, atol=1e-10)
    assert abs(sys_.target.mean()) < 1e-10 * max(1.0, np.abs(sys_.raw_target).max())


def test_standardization_round_trip():
    data = isotropic_benchmark("MR2O2")
    lib = make_isotropic_library(3, [-4, -3, -1, 1, 3, 4])
    s = assemble(data, lib)
    rebuilt = s.design * s.col_std + s.col_mean
    scale = np.abs(s.raw_design).max(axis=0)
    np.testing.assert_array_less(np.abs(rebuilt - s.raw_design[:, s.retained_cols]).max(axis=0),
                                 1e-12 * scale + 1e-300)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_prediction_identity(seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(30, 5)) * rng.uniform(0.1, 100.0, size=5)
    target = rng.normal(size=30)
    s = RegressionSystem.from_raw(raw, target, [1.0], np.zeros(30, dtype=int))
    c_scaled = rng.uniform(0.0, 3.0, size=5)
    c_phys = back_transform(s, c_scaled)
    lhs = s.design @ c_scaled + s.target_mean
    # The centering intercept: target_mean - col_mean . c*.
    rhs = raw @ c_phys + s.target_mean - s.col_mean @ c_phys[s.retained_cols]
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-8 * max(1.0, np.abs(rhs).max()))
    np.testing.assert_allclose(s.scale(c_phys), c_scaled, rtol=1e-12)


def test_back_transform_examples():
    raw = np.column_stack([np.array([0.0, 8.0]), np.array([1.0, 1.0]), np.array([0.0, 2.0])])
    s = RegressionSystem.from_raw(raw, np.array([0.0, 1.0]), [1.0], np.zeros(2, dtype=int))
    assert s.excluded_cols == [1]
    np.testing.assert_array_equal(back_transform(s, np.zeros(2)), np.zeros(3))
    assert s.col_std[0] == 4.0
    assert back_transform(s, np.array([2.0, 0.0]))[0] == 0.5
    with pytest.raises(ContractViolation):
        back_transform(s, np.zeros(3))


def test_single_column_ols_round_trip():
    x = np.linspace(0.5, 3.0, 25) ** 2
    y = 2.75 * x
    s = RegressionSystem.from_raw(x[:, None], y, [1.0], np.zeros(25, dtype=int))
    c_scaled = (s.design[:, 0] @ s.target) / (s.design[:, 0] @ s.design[:, 0])
    assert back_transform(s, np.array([c_scaled]))[0] == pytest.approx(2.75, rel=1e-8)


def test_constant_column_excluded():
    # Simple fs shear leaves I4n = 1, so every I4n term has an all-zero column.
    lib = make_orthotropic_library(exclude_residual=True)
    d = Dataset([ModeBlock(LoadingMode("SHEAR_fs", ("Pfs",)), [0.1, 0.2, 0.3, 0.4], [0.1, 0.3, 0.6, 1.0])])
    s = assemble(d, lib)
    i4n = [j for j, t in enumerate(lib.terms) if t.argument == 4]
    assert set(i4n) <= set(s.excluded_cols)
    assert s.n_cols == lib.n_terms - len(s.excluded_cols)
    assert list(s.retained_cols) == sorted(set(range(lib.n_terms)) - set(s.excluded_cols))


def test_identity_only_dataset():
    lib = make_isotropic_library(2)
    d = Dataset([ModeBlock(UT, [1.0, 1.0], [0.5, 1.0])])
    with pytest.raises(DegenerateError):
        assemble(d, lib)


def test_empty_dataset():
    with pytest.raises(ContractViolation):
        assemble(Dataset([]), make_isotropic_library(1))


def test_block_permutation():
    data = isotropic_benchmark("MR2", 0.05, seed=4)
    lib = benchmark_truth("MR2").lib
    perm = Dataset([data.blocks[i] for i in (2, 0, 1)], data.units)
    a, b = assemble(data, lib), assemble(perm, lib)
    n = 60
    order = np.concatenate([np.arange(2 * n, 3 * n), np.arange(0, n), np.arange(n, 2 * n)])
    np.testing.assert_allclose(b.raw_design, a.raw_design[order], rtol=1e-14)
    np.testing.assert_allclose(b.design, a.design[order], rtol=1e-10, atol=1e-12)
    ma = refit_linear(data, lib, [0, 1])
    mb = refit_linear(perm, lib, [0, 1])
    np.testing.assert_allclose(mb.c_star, ma.c_star, rtol=1e-8)


def test_subset_restandardizes():
    data = isotropic_benchmark("O2")
    s = assemble(data, benchmark_truth("O2").lib)
    rows = np.arange(0, 180, 2)
    sub = s.subset(rows)
    np.testing.assert_allclose(sub.design.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_array_equal(sub.weights, s.weights)


def test_standardize_all_zero():
    with pytest.raises(DegenerateError):
        standardize(np.zeros((3, 2)), np.zeros(3))
