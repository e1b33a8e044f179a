import itertools

import numpy as np
import pytest

from hyperdisco.data import benchmark_truth
from hyperdisco.errors import ConfigurationError, ContractViolation, DomainError
from hyperdisco.kinematics import LoadingMode, StructuralFrame, deformation_gradients
from hyperdisco.library import (
    BasisTerm,
    BlockColumns,
    RESIDUAL_STRESS_TERMS,
    ModelLibrary,
    check_consistency,
    energy,
    make_isotropic_library,
    make_orthotropic_library,
    stress_contribution,
    term_energy,
    term_gradient,
)

ISO = make_isotropic_library(3, [-4, -3, -1, 1, 3, 4])
ORTHO = make_orthotropic_library(StructuralFrame.canonical(), w_bar=0.7)
REDUCED = make_orthotropic_library(exclude_residual=True)

# (mode, parameter rows) covering tension, compression and all shears.
SAMPLES = {
    "UT": [[0.7], [1.6], [2.5]],
    "PS": [[0.8], [1.9]],
    "EBT": [[0.9], [1.4]],
    "BT": [[1.3, 0.8], [0.9, 1.2]],
    "ANISO_BT": [[1.1, 1.05], [0.95, 1.08]],
    "SS": [[0.4]],
    "SHEAR_fs": [[0.3]],
    "SHEAR_sf": [[-0.2]],
    "SHEAR_fn": [[0.25]],
    "SHEAR_nf": [[0.35]],
    "SHEAR_sn": [[0.15]],
    "SHEAR_ns": [[-0.3]],
}


def fd_gradient(lib, j, F, w=None, h=1e-6):
    """Central finite differences of phi_j with respect to each F entry."""
    out = np.zeros((3, 3))
    for a, b in itertools.product(range(3), range(3)):
        Fp, Fm = F.copy(), F.copy()
        Fp[a, b] += h
        Fm[a, b] -= h
        out[a, b] = (term_energy(lib, j, Fp[None], w)[0] - term_energy(lib, j, Fm[None], w)[0]) / (2 * h)
    return out


def _all_gradients():
    for kind, rows in SAMPLES.items():
        for F in deformation_gradients(kind, np.array(rows)):
            yield kind, F


def _on_clamp_kink(term, F):
    """Clamped I4 terms are not differentiable at I4 = 1 (e.g. the s axis in PS)."""
    if term.family != "Ortho" or not 2 <= term.argument <= 4:
        return False
    d = term.argument - 2
    return abs((F.T @ F)[d, d] - 1.0) < 1e-4


@pytest.mark.parametrize("lib", [ISO, ORTHO], ids=["isotropic", "orthotropic"])
def test_finite_difference_oracle(lib):
    w = lib.default_w()
    for kind, F in _all_gradients():
        for j in range(lib.n_terms):
            if _on_clamp_kink(lib.terms[j], F):
                continue
            analytic = term_gradient(lib, j, F[None], w)[0]
            numeric = fd_gradient(lib, j, F, w)
            scale = max(1.0, np.max(np.abs(analytic)))
            np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-5 * scale,
                                       err_msg=f"{lib.terms[j].label} in {kind}")


def test_library_sizes():
    assert make_isotropic_library(1).labels == ["(I1-3)", "(I2-3)"]
    assert ISO.n_terms == 15
    assert make_isotropic_library(2, [2]).n_terms == 6
    assert ORTHO.n_terms == 32
    assert len(ORTHO.slot_terms) == 16
    assert [ORTHO.terms[j].index % 2 for j in ORTHO.slot_terms] == [0] * 16
    assert REDUCED.n_terms == 26


def test_graded_order():
    lib = make_isotropic_library(2)
    assert [(t.j, t.k) for t in lib.terms] == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_w_bar_default_unity():
    lib = make_orthotropic_library()
    w = lib.default_w()
    assert np.all(w[lib.slot_terms] == 1.0)
    assert np.all(np.isnan(np.delete(w, lib.slot_terms)))


def test_invalid_terms():
    with pytest.raises(ConfigurationError):
        make_isotropic_library(1, [0.0])
    with pytest.raises(ConfigurationError):
        BasisTerm("MR", j=0, k=0)
    with pytest.raises(ConfigurationError):
        BasisTerm("Ortho", index=33)
    with pytest.raises(ConfigurationError):
        make_orthotropic_library(w_bar=0.0)


def test_energy_examples():
    F = deformation_gradients("UT", np.array([2.0]))[0]
    lib = make_isotropic_library(1)
    assert energy(lib, [1.0, 0.0], F) == pytest.approx(2.0, abs=1e-14)
    assert energy(ISO, np.zeros(15), F) == 0.0
    mr2 = benchmark_truth("MR2")
    assert energy(mr2.lib, mr2.coeffs, np.eye(3)) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ContractViolation):
        energy(lib, [1.0], F)


def test_stress_examples():
    lib = make_isotropic_library(1)
    ut = stress_contribution(lib, 0, LoadingMode("UT", ("P11",)), [2.0])
    assert ut["P11"] == pytest.approx(3.5, abs=1e-12)
    ss = stress_contribution(lib, 0, LoadingMode("SS", ("P12",)), [0.5])
    assert ss["P12"] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ContractViolation):
        stress_contribution(lib, 5, LoadingMode("UT", ("P11",)), [2.0])


def test_pressure_elimination_against_fd_oracle():
    # P11 = dW/dF11 - dW/dF33 * F33 / F11 with dW/dF from finite differences.
    lib = ISO
    mode = LoadingMode("PS", ("P11", "P22"))
    for lam in (0.7, 1.8, 3.2):
        F = deformation_gradients("PS", np.array([lam]))[0]
        for j in range(lib.n_terms):
            G = fd_gradient(lib, j, F)
            expected = [G[0, 0] - G[2, 2] * F[2, 2] / F[0, 0], G[1, 1] - G[2, 2] * F[2, 2] / F[1, 1]]
            got = stress_contribution(lib, j, mode, [lam])
            np.testing.assert_allclose([got["P11"], got["P22"]], expected, rtol=1e-5,
                                       atol=1e-6 * max(1.0, np.max(np.abs(expected))))


def test_ogden_mooney_rivlin_degeneracy():
    lib = make_isotropic_library(1, [2.0, -2.0])
    for kind, rows in SAMPLES.items():
        if kind == "ANISO_BT" or kind.startswith("SHEAR_"):
            continue
        cols = BlockColumns(lib, _mode(kind), np.array(rows))
        np.testing.assert_allclose(cols.column(2), cols.column(0), rtol=0, atol=1e-10)
        np.testing.assert_allclose(cols.column(3), cols.column(1), rtol=0, atol=1e-10)


@pytest.mark.parametrize("index", range(9, 21))
def test_clamped_terms_vanish_in_compression(index):
    lib = make_orthotropic_library()
    j = index - 1
    direction = lib.terms[j].argument - 2
    mode = LoadingMode("ANISO_BT", ("Pff", "Pnn"))
    # Stretching f and n compresses s; shortening both stretches s.
    for params in ([[1.1, 1.05]], [[0.9, 0.95]], [[1.05, 0.9]]):
        F = deformation_gradients("ANISO_BT", np.array(params))[0]
        if (F.T @ F)[direction, direction] <= 1.0:
            assert np.all(BlockColumns(lib, mode, np.array(params)).column(j) == 0.0)
            assert np.all(term_gradient(lib, j, F[None])[0] == 0.0)


def test_clamp_subgradient_at_one():
    lib = make_orthotropic_library()
    assert np.all(term_gradient(lib, 8, np.eye(3)[None])[0] == 0.0)


def _mode(kind):
    comps = {"UT": ("P11",), "SS": ("P11", "P22", "P12"), "ANISO_BT": ("Pff", "Pnn")}
    if kind in comps:
        return LoadingMode(kind, comps[kind])
    if kind in ("PS", "EBT", "BT"):
        return LoadingMode(kind, ("P11", "P22"))
    return LoadingMode(kind, ("P" + kind[6:],))


def test_zero_stress_at_identity():
    for lib in (ISO, REDUCED):
        for kind in SAMPLES:
            mode = _mode(kind)
            params = np.zeros((1, 1)) if mode.kind.is_shear else np.ones((1, mode.kind.n_params))
            cols = BlockColumns(lib, mode, params).matrix()
            np.testing.assert_allclose(cols, 0.0, atol=1e-12, err_msg=kind)


@pytest.mark.parametrize("index", [21, 22, 25, 26, 29, 30])
def test_i8_terms_carry_residual_stress(index):
    # The reason the reduced library exists: these terms stress the reference state.
    kind = {21: "SHEAR_fs", 22: "SHEAR_fs", 25: "SHEAR_fn", 26: "SHEAR_fn", 29: "SHEAR_sn", 30: "SHEAR_sn"}[index]
    col = BlockColumns(ORTHO, _mode(kind), np.zeros((1, 1))).column(index - 1)
    assert col[0] != 0.0
    assert index in RESIDUAL_STRESS_TERMS
    assert index not in [t.index for t in REDUCED.terms]


def test_column_dw_matches_fd():
    lib = ORTHO
    mode = LoadingMode("ANISO_BT", ("Pff", "Pnn"))
    params = np.array([[1.08, 1.05], [1.05, 1.1]])
    cols = BlockColumns(lib, mode, params)
    w = lib.default_w()
    h = 1e-6
    for j in lib.slot_terms:
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        fd = (cols.column(j, wp) - cols.column(j, wm)) / (2 * h)
        np.testing.assert_allclose(cols.column_dw(j, w), fd, rtol=1e-6, atol=1e-9)


def test_consistency_examples():
    mr2 = benchmark_truth("MR2")
    assert check_consistency(mr2.lib, mr2.coeffs)["mu0_MR"] == pytest.approx(120.0)
    o2 = benchmark_truth("O2")
    res = check_consistency(o2.lib, o2.coeffs)
    assert res["mu0_Ogden"] == pytest.approx(120.0)
    assert res["positive"]
    # Small-shear oracle: 2 W / gamma^2 of sum(lambda^alpha - 1) equals alpha^2 / 2.
    g = 1e-4
    s = np.linalg.svd(np.array([[1.0, g, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), compute_uv=False)
    shear = sum(c * 2.0 * (np.sum(s ** a) - 3.0) / g ** 2 for c, a in ((16.0, -3.0), (8.0, 3.0)))
    assert res["mu0_Ogden_linearized"] == pytest.approx(shear, rel=1e-6)
    assert res["mu0_Ogden_linearized"] == pytest.approx(108.0)
    zero = check_consistency(ISO, np.zeros(15))
    assert zero["mu0_total"] == 0.0 and not zero["positive"]
    with pytest.raises(ContractViolation):
        check_consistency(ORTHO, np.zeros(32))


def test_library_serialization_round_trip():
    for lib in (ISO, ORTHO, REDUCED):
        again = ModelLibrary.from_dict(lib.to_dict())
        assert again.terms == lib.terms
        np.testing.assert_array_equal(again.default_w(), lib.default_w())
    custom = ModelLibrary((BasisTerm("MR", 1, 0), BasisTerm("Ogden", alpha=3.0)))
    assert ModelLibrary.from_dict(custom.to_dict()).terms == custom.terms


def test_frame_rotation_changes_fiber_terms():
    c, s = np.cos(0.3), np.sin(0.3)
    rotated = StructuralFrame((c, s, 0.0), (-s, c, 0.0), (0.0, 0.0, 1.0))
    with pytest.raises(DomainError):
        StructuralFrame((1.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    lib = make_orthotropic_library(rotated)
    F = deformation_gradients("UT", np.array([1.2]))
    assert term_energy(lib, 10, F)[0] != pytest.approx(term_energy(ORTHO, 10, F)[0])
