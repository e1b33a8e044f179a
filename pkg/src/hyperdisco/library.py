"""
Basis terms of the isotropic (generalized Mooney-Rivlin + Ogden) and
orthotropic (32-term) strain energy libraries.

Every term phi_j is a function of one or two scalar kinematic arguments
(I1 - 3, I2 - 3, clamped I4 - 1, I8, or an Ogden stretch sum), so its
derivative is a linear combination of argument gradients:

    d phi_j / dF = sum_a coef_a * d(arg_a)/dF

Pressure elimination is linear in dW/dF, which means the per-block design
columns can be rebuilt for new nonlinear parameters w from cached,
already-eliminated argument gradients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .kinematics import (
    KinematicState,
    LoadingMode,
    StructuralFrame,
    deformation_gradients,
)

ORTHO_ARGUMENTS = ("I1-3", "I2-3", "I4f*", "I4s*", "I4n*", "I8fs", "I8fn", "I8sn")
ORTHO_FORMS = ("lin", "exp-lin", "quad", "exp-quad")
# Linear and exponential-linear I8 terms: their gradient at F = I is nonzero.
RESIDUAL_STRESS_TERMS = (21, 22, 25, 26, 29, 30)


@dataclass(frozen=True)
class BasisTerm:
    """One library feature.

    ``family`` is ``"MR"`` (uses ``j``, ``k``), ``"Ogden"`` (uses ``alpha``)
    or ``"Ortho"`` (uses the 1-based ``index`` into the 32-term list).
    """

    family: str
    j: int = 0
    k: int = 0
    alpha: float = 0.0
    index: int = 0

    def __post_init__(self):
        if self.family == "MR":
            if self.j < 0 or self.k < 0 or self.j + self.k < 1:
                raise ConfigurationError(f"invalid Mooney-Rivlin exponents ({self.j}, {self.k})")
        elif self.family == "Ogden":
            if self.alpha == 0.0 or not np.isfinite(self.alpha):
                raise ConfigurationError("Ogden exponent must be finite and nonzero")
        elif self.family == "Ortho":
            if not 1 <= self.index <= 32:
                raise ConfigurationError(f"orthotropic term index {self.index} outside 1..32")
        else:
            raise ConfigurationError(f"unknown term family {self.family!r}")

    @property
    def has_slot(self) -> bool:
        """True for the exponential orthotropic terms (even index)."""
        return self.family == "Ortho" and self.index % 2 == 0

    @property
    def argument(self) -> int:
        return (self.index - 1) // 4

    @property
    def form(self) -> int:
        return (self.index - 1) % 4

    @property
    def label(self) -> str:
        if self.family == "MR":
            parts = []
            if self.j:
                parts.append("(I1-3)" + (f"^{self.j}" if self.j > 1 else ""))
            if self.k:
                parts.append("(I2-3)" + (f"^{self.k}" if self.k > 1 else ""))
            return "*".join(parts)
        if self.family == "Ogden":
            return f"sum(lambda^{self.alpha:g}-1)"
        arg = ORTHO_ARGUMENTS[self.argument]
        return {
            0: f"[{arg}]",
            1: f"exp(w*[{arg}])-1",
            2: f"[{arg}]^2",
            3: f"exp(w*[{arg}]^2)-1",
        }[self.form] + f" (phi{self.index})"

    def to_dict(self):
        if self.family == "MR":
            return {"family": "MR", "j": self.j, "k": self.k}
        if self.family == "Ogden":
            return {"family": "Ogden", "alpha": self.alpha}
        return {"family": "Ortho", "index": self.index}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class ModelLibrary:
    """Ordered basis terms plus the fixed linearization values of the
    nonlinear slots. Term order defines design-matrix column order."""

    terms: tuple
    w_bar: tuple = ()
    frame: Optional[StructuralFrame] = None
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        w_bar = tuple(self.w_bar) if self.w_bar else tuple(
            1.0 if t.has_slot else None for t in terms
        )
        if len(w_bar) != len(terms):
            raise ConfigurationError("w_bar must have one entry per term")
        for t, w in zip(terms, w_bar):
            if t.has_slot and (w is None or not np.isfinite(w)):
                raise ConfigurationError(f"no linearization value for {t.label}")
        object.__setattr__(self, "w_bar", w_bar)

    def __len__(self):
        return len(self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def slot_terms(self) -> List[int]:
        return [i for i, t in enumerate(self.terms) if t.has_slot]

    @property
    def is_isotropic(self) -> bool:
        return all(t.family in ("MR", "Ogden") for t in self.terms)

    @property
    def labels(self) -> List[str]:
        return [t.label for t in self.terms]

    def default_w(self) -> np.ndarray:
        return np.array([np.nan if w is None else w for w in self.w_bar], dtype=float)

    def to_dict(self):
        if self.spec:
            return dict(self.spec)
        return {
            "type": "custom",
            "terms": [t.to_dict() for t in self.terms],
            "w_bar": list(self.w_bar),
            "frame": self.frame.to_dict() if self.frame else None,
        }

    @classmethod
    def from_dict(cls, d) -> "ModelLibrary":
        kind = d.get("type", "isotropic")
        if kind == "isotropic":
            return make_isotropic_library(d.get("mr_order", 1), d.get("ogden_alphas", ()))
        if kind == "orthotropic":
            frame = StructuralFrame(**d["frame"]) if d.get("frame") else StructuralFrame()
            return make_orthotropic_library(
                frame, d.get("w_bar", 1.0), exclude_residual=d.get("exclude_residual", False)
            )
        if kind == "custom":
            frame = StructuralFrame(**d["frame"]) if d.get("frame") else None
            return cls(
                tuple(BasisTerm.from_dict(t) for t in d["terms"]),
                tuple(d.get("w_bar", ())),
                frame,
            )
        raise ConfigurationError(f"unknown library type {kind!r}")


def make_isotropic_library(mr_order: int, ogden_alphas: Sequence[float] = ()) -> ModelLibrary:
    """Mooney-Rivlin terms of total degree 1..mr_order (graded, j descending
    within each degree) followed by Ogden terms in the given order.

    >>> [t.label for t in make_isotropic_library(1).terms]
    ['(I1-3)', '(I2-3)']
    """
    if mr_order < 0:
        raise ConfigurationError("mr_order must be non-negative")
    terms = [BasisTerm("MR", j=deg - k, k=k) for deg in range(1, mr_order + 1) for k in range(deg + 1)]
    terms += [BasisTerm("Ogden", alpha=float(a)) for a in ogden_alphas]
    if not terms:
        raise ConfigurationError("empty isotropic library")
    spec = {"type": "isotropic", "mr_order": int(mr_order), "ogden_alphas": [float(a) for a in ogden_alphas]}
    return ModelLibrary(tuple(terms), tuple(None for _ in terms), None, spec)


def make_orthotropic_library(
    frame: Optional[StructuralFrame] = None, w_bar: float = 1.0, exclude_residual: bool = False
) -> ModelLibrary:
    """The 32-term orthotropic library with every exponential slot fixed to
    ``w_bar``. ``exclude_residual`` drops the six I8 terms that carry stress
    in the undeformed state (21, 22, 25, 26, 29, 30)."""
    frame = frame if frame is not None else StructuralFrame.canonical()
    if not np.isfinite(w_bar) or w_bar <= 0.0:
        raise ConfigurationError("w_bar must be positive; at zero the exponential terms are constant")
    indices = [i for i in range(1, 33) if not (exclude_residual and i in RESIDUAL_STRESS_TERMS)]
    terms = tuple(BasisTerm("Ortho", index=i) for i in indices)
    spec = {
        "type": "orthotropic",
        "w_bar": float(w_bar),
        "exclude_residual": bool(exclude_residual),
        "frame": frame.to_dict(),
    }
    return ModelLibrary(terms, tuple(float(w_bar) if t.has_slot else None for t in terms), frame, spec)


class _Arguments:
    """Lazily evaluated scalar arguments and their F-gradients."""

    def __init__(self, state: KinematicState):
        self.state = state
        self._val: Dict = {}
        self._grad: Dict = {}

    def _compute(self, key):
        st = self.state
        if key == "A":
            return st.I1 - 3.0, st.dI1()
        if key == "B":
            return st.I2 - 3.0, st.dI2()
        if key[0] == "og":
            alpha = key[1]
            return np.sum(st.stretches ** alpha, axis=1) - 3.0, st.ogden_gradient(alpha)
        g = key[1]
        if g == 0:
            return st.I1 - 3.0, st.dI1()
        if g == 1:
            return st.I2 - 3.0, st.dI2()
        if g in (2, 3, 4):
            value, grad = st.I4(g - 2)
            on = value > 1.0
            return np.where(on, value - 1.0, 0.0), np.where(on[:, None, None], grad, 0.0)
        pair = {5: (0, 1), 6: (0, 2), 7: (1, 2)}[g]
        return st.I8(*pair)

    def value(self, key):
        if key not in self._val:
            self._val[key], self._grad[key] = self._compute(key)
        return self._val[key]

    def grad(self, key):
        self.value(key)
        return self._grad[key]


def _expand(term: BasisTerm, args: _Arguments, w: float):
    """phi, and [(key, coef, dcoef/dw)] with dphi/dF = sum coef * d(arg[key])/dF."""
    if term.family == "MR":
        A, B = args.value("A"), args.value("B")
        j, k = term.j, term.k
        phi = A ** j * B ** k
        parts = []
        if j:
            parts.append(("A", j * A ** (j - 1) * B ** k, 0.0))
        if k:
            parts.append(("B", k * A ** j * B ** (k - 1), 0.0))
        return phi, parts
    if term.family == "Ogden":
        key = ("og", term.alpha)
        return args.value(key), [(key, 1.0, 0.0)]
    key = ("arg", term.argument)
    a = args.value(key)
    form = term.form
    if form == 0:
        return a, [(key, 1.0, 0.0)]
    if form == 2:
        return a * a, [(key, 2.0 * a, 0.0)]
    if form == 1:
        e = np.exp(w * a)
        return e - 1.0, [(key, w * e, e * (1.0 + w * a))]
    e = np.exp(w * a * a)
    return e - 1.0, [(key, 2.0 * a * w * e, 2.0 * a * e * (1.0 + w * a * a))]


def _slot_value(lib: ModelLibrary, j: int, w) -> float:
    if not lib.terms[j].has_slot:
        return 0.0
    if w is None:
        return lib.w_bar[j]
    return float(w[j])


def term_energy(lib: ModelLibrary, j: int, F, w=None) -> np.ndarray:
    """phi_j evaluated on a stack of deformation gradients."""
    state = KinematicState(F, lib.frame)
    phi, _ = _expand(lib.terms[j], _Arguments(state), _slot_value(lib, j, w))
    return np.broadcast_to(phi, (len(state),)).copy()


def term_gradient(lib: ModelLibrary, j: int, F, w=None) -> np.ndarray:
    """Analytic d phi_j / dF (before pressure elimination), shape (n, 3, 3)."""
    state = KinematicState(F, lib.frame)
    args = _Arguments(state)
    _, parts = _expand(lib.terms[j], args, _slot_value(lib, j, w))
    out = np.zeros_like(state.F)
    for key, coef, _ in parts:
        out += np.asarray(coef)[..., None, None] * args.grad(key)
    return out


def energy(lib: ModelLibrary, coeffs, F, w=None) -> float:
    """W = sum_j c_j phi_j(F) for a single deformation gradient."""
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (lib.n_terms,):
        raise ContractViolation("coefficient vector does not match the library")
    state = KinematicState(np.asarray(F, dtype=float), lib.frame)
    args = _Arguments(state)
    total = 0.0
    for j, term in enumerate(lib.terms):
        if c[j] == 0.0:
            continue
        phi, _ = _expand(term, args, _slot_value(lib, j, w))
        total += c[j] * float(np.asarray(phi).reshape(-1)[0])
    return total


class BlockColumns:
    """Pressure-eliminated stress columns of one loading block.

    Rows are sample-major: row ``s * n_comp + c`` is component ``c`` of
    sample ``s``.
    """

    def __init__(self, lib: ModelLibrary, mode: LoadingMode, params):
        self.lib = lib
        self.mode = mode
        F = deformation_gradients(mode.kind, params)
        self.state = KinematicState(F, lib.frame)
        self.args = _Arguments(self.state)
        self._elim: Dict = {}
        self.n_samples = len(self.state)
        self.n_rows = self.n_samples * len(mode.components)

    def eliminated(self, key) -> np.ndarray:
        if key not in self._elim:
            G = self.args.grad(key)
            self._elim[key] = self.state.pressure_eliminated(G, self.mode.kind, self.mode.component_slots)
        return self._elim[key]

    def column(self, j: int, w=None) -> np.ndarray:
        _, parts = _expand(self.lib.terms[j], self.args, _slot_value(self.lib, j, w))
        col = np.zeros((self.n_samples, len(self.mode.components)))
        for key, coef, _ in parts:
            col += np.asarray(coef).reshape(-1, 1) * self.eliminated(key)
        return col.reshape(-1)

    def column_dw(self, j: int, w=None) -> np.ndarray:
        """Derivative of column j with respect to its own slot w_j."""
        col = np.zeros((self.n_samples, len(self.mode.components)))
        if not self.lib.terms[j].has_slot:
            return col.reshape(-1)
        _, parts = _expand(self.lib.terms[j], self.args, _slot_value(self.lib, j, w))
        for key, _, dcoef in parts:
            col += np.asarray(dcoef).reshape(-1, 1) * self.eliminated(key)
        return col.reshape(-1)

    def matrix(self, w=None, terms: Optional[Sequence[int]] = None) -> np.ndarray:
        idx = range(self.lib.n_terms) if terms is None else terms
        return np.column_stack([self.column(j, w) for j in idx]) if len(idx) else np.zeros((self.n_rows, 0))

    def matrix_dw(self, w=None, terms: Optional[Sequence[int]] = None) -> np.ndarray:
        idx = range(self.lib.n_terms) if terms is None else terms
        return np.column_stack([self.column_dw(j, w) for j in idx]) if len(idx) else np.zeros((self.n_rows, 0))


def stress_contribution(lib: ModelLibrary, term_index: int, mode: LoadingMode, params, w=None) -> dict:
    """Pressure-eliminated stress of one term at one loading state, as
    ``{component: value}``."""
    if not 0 <= term_index < lib.n_terms:
        raise ContractViolation(f"term index {term_index} out of range")
    params = np.atleast_1d(np.asarray(params, dtype=float))[None, :]
    col = BlockColumns(lib, mode, params).column(term_index, w)
    return dict(zip(mode.components, col.tolist()))


def check_consistency(lib: ModelLibrary, coeffs) -> dict:
    """Initial shear modulus contributions implied by linearization at F = I.

    ``mu0_Ogden`` uses the customary closed form 1/2 sum c alpha (alpha - 1).
    The small-strain limit of c sum(lambda^alpha - 1) is c alpha^2 / 2 per
    term, reported separately as ``mu0_Ogden_linearized``.
    """
    if not lib.is_isotropic:
        raise ContractViolation("consistency conditions are defined for isotropic libraries only")
    c = np.asarray(coeffs, dtype=float)
    mu_mr = 0.0
    mu_og = 0.0
    mu_og_lin = 0.0
    for cj, t in zip(c, lib.terms):
        if t.family == "MR" and (t.j, t.k) in ((1, 0), (0, 1)):
            mu_mr += 2.0 * cj
        elif t.family == "Ogden":
            mu_og += 0.5 * cj * t.alpha * (t.alpha - 1.0)
            mu_og_lin += 0.5 * cj * t.alpha ** 2
    total = mu_mr + mu_og
    return {"mu0_MR": mu_mr, "mu0_Ogden": mu_og, "mu0_total": total, "positive": bool(total > 0.0),
            "mu0_Ogden_linearized": mu_og_lin}
