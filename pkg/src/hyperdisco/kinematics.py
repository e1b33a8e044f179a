"""
Deformation gradients for the supported loading modes and the invariants
of the right Cauchy-Green tensor.

All gradients produced here are isochoric (det F = 1). Functions accept a
single 3x3 matrix or a stack of shape (n, 3, 3) where noted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, DomainError


class ModeKind(str, Enum):
    UT = "UT"
    SS = "SS"
    PS = "PS"
    BT = "BT"
    EBT = "EBT"
    ANISO_BT = "ANISO_BT"
    SHEAR_fs = "SHEAR_fs"
    SHEAR_sf = "SHEAR_sf"
    SHEAR_fn = "SHEAR_fn"
    SHEAR_nf = "SHEAR_nf"
    SHEAR_sn = "SHEAR_sn"
    SHEAR_ns = "SHEAR_ns"

    @classmethod
    def parse(cls, value) -> "ModeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise ConfigurationError(f"unknown loading mode {value!r}") from None

    @property
    def n_params(self) -> int:
        return 2 if self in (ModeKind.BT, ModeKind.ANISO_BT) else 1

    @property
    def is_shear(self) -> bool:
        return self is ModeKind.SS or self.value.startswith("SHEAR_")

    @property
    def free_index(self) -> Optional[int]:
        """Index k of the traction-free normal direction (P_kk = 0), if any."""
        if self is ModeKind.ANISO_BT:
            return 1
        if self.value.startswith("SHEAR_"):
            return None
        return 2


# (row, column) of each stress label; f, s, n map to 1, 2, 3.
COMPONENTS = {
    "P11": (0, 0),
    "P22": (1, 1),
    "P12": (0, 1),
    "Pff": (0, 0),
    "Pnn": (2, 2),
    "Pfs": (0, 1),
    "Psf": (1, 0),
    "Pfn": (0, 2),
    "Pnf": (2, 0),
    "Psn": (1, 2),
    "Pns": (2, 1),
}

_SHEAR_SLOT = {
    ModeKind.SHEAR_fs: (0, 1),
    ModeKind.SHEAR_sf: (1, 0),
    ModeKind.SHEAR_fn: (0, 2),
    ModeKind.SHEAR_nf: (2, 0),
    ModeKind.SHEAR_sn: (1, 2),
    ModeKind.SHEAR_ns: (2, 1),
}

ALLOWED_COMPONENTS = {
    ModeKind.UT: ("P11",),
    ModeKind.PS: ("P11", "P22"),
    ModeKind.EBT: ("P11", "P22"),
    ModeKind.BT: ("P11", "P22"),
    ModeKind.SS: ("P11", "P22", "P12"),
    ModeKind.ANISO_BT: ("Pff", "Pnn"),
    ModeKind.SHEAR_fs: ("Pfs",),
    ModeKind.SHEAR_sf: ("Psf",),
    ModeKind.SHEAR_fn: ("Pfn",),
    ModeKind.SHEAR_nf: ("Pnf",),
    ModeKind.SHEAR_sn: ("Psn",),
    ModeKind.SHEAR_ns: ("Pns",),
}


@dataclass(frozen=True)
class LoadingMode:
    """A deformation protocol and the stress components measured in it."""

    kind: ModeKind
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind.parse(self.kind))
        comps = tuple(self.components)
        if not comps:
            raise ContractViolation("a loading mode needs at least one measured component")
        allowed = ALLOWED_COMPONENTS[self.kind]
        for c in comps:
            if c not in COMPONENTS:
                raise ConfigurationError(f"unknown stress component {c!r}")
            if c not in allowed:
                raise ContractViolation(
                    f"component {c} is not determinable in mode {self.kind.value}"
                )
        object.__setattr__(self, "components", comps)

    @property
    def component_slots(self):
        return [COMPONENTS[c] for c in self.components]


def _check_params(kind: ModeKind, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.ndim == 1:
        params = params[:, None]
    if params.shape[1] != kind.n_params:
        raise ContractViolation(
            f"mode {kind.value} takes {kind.n_params} parameter(s), got {params.shape[1]}"
        )
    if not np.all(np.isfinite(params)):
        raise DomainError("deformation parameters must be finite")
    if not kind.is_shear and np.any(params <= 0.0):
        raise DomainError("stretches must be strictly positive")
    return params


def deformation_gradients(kind, params) -> np.ndarray:
    """Stack of deformation gradients, shape (n, 3, 3).

    ``params`` has shape (n,) for one-parameter modes or (n, 2) for BT and
    ANISO_BT.
    """
    kind = ModeKind.parse(kind)
    p = _check_params(kind, params)
    n = p.shape[0]
    F = np.zeros((n, 3, 3))
    a = p[:, 0]
    if kind is ModeKind.UT:
        F[:, 0, 0] = a
        F[:, 1, 1] = F[:, 2, 2] = a ** -0.5
    elif kind is ModeKind.PS:
        F[:, 0, 0] = a
        F[:, 1, 1] = 1.0
        F[:, 2, 2] = 1.0 / a
    elif kind is ModeKind.EBT:
        F[:, 0, 0] = F[:, 1, 1] = a
        F[:, 2, 2] = a ** -2.0
    elif kind is ModeKind.BT:
        b = p[:, 1]
        F[:, 0, 0] = a
        F[:, 1, 1] = b
        F[:, 2, 2] = 1.0 / (a * b)
    elif kind is ModeKind.ANISO_BT:
        b = p[:, 1]
        F[:, 0, 0] = a
        F[:, 1, 1] = 1.0 / (a * b)
        F[:, 2, 2] = b
    else:
        F[:] = np.eye(3)
        i, j = (0, 1) if kind is ModeKind.SS else _SHEAR_SLOT[kind]
        F[:, i, j] = a
    return F


def deformation_gradient(kind, *params) -> np.ndarray:
    """Deformation gradient of a single loading state.

    >>> deformation_gradient("PS", 2.0).diagonal()
    array([2. , 1. , 0.5])
    """
    kind = ModeKind.parse(kind)
    if len(params) != kind.n_params:
        raise ContractViolation(
            f"mode {kind.value} takes {kind.n_params} parameter(s), got {len(params)}"
        )
    return deformation_gradients(kind, np.array([params], dtype=float))[0]


@dataclass(frozen=True)
class StructuralFrame:
    """Fiber, sheet and normal directions in the reference configuration."""

    f0: tuple = (1.0, 0.0, 0.0)
    s0: tuple = (0.0, 1.0, 0.0)
    n0: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        Q = self.matrix
        if not np.allclose(Q @ Q.T, np.eye(3), rtol=0.0, atol=1e-12):
            raise DomainError("structural frame vectors must be orthonormal")

    @property
    def matrix(self) -> np.ndarray:
        """Rows are f0, s0, n0."""
        return np.array([self.f0, self.s0, self.n0], dtype=float)

    @classmethod
    def canonical(cls) -> "StructuralFrame":
        return cls()

    def to_dict(self):
        return {"f0": list(self.f0), "s0": list(self.s0), "n0": list(self.n0)}


@dataclass
class InvariantSet:
    I1: float
    I2: float
    stretches: np.ndarray
    I4f: Optional[float] = None
    I4s: Optional[float] = None
    I4n: Optional[float] = None
    I8fs: Optional[float] = None
    I8fn: Optional[float] = None
    I8sn: Optional[float] = None


def invariants(F, frame: Optional[StructuralFrame] = None) -> InvariantSet:
    """Isotropic invariants, principal stretches and, with a frame, the
    orthotropic I4/I8 invariants of C = F^T F."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3) or not np.all(np.isfinite(F)):
        raise DomainError("F must be a finite 3x3 matrix")
    C = F.T @ F
    trC = np.trace(C)
    out = InvariantSet(
        I1=float(trC),
        I2=float(0.5 * (trC ** 2 - np.trace(C @ C))),
        stretches=np.linalg.svd(F, compute_uv=False),
    )
    if frame is not None:
        f, s, n = frame.matrix
        out.I4f = float(f @ C @ f)
        out.I4s = float(s @ C @ s)
        out.I4n = float(n @ C @ n)
        out.I8fs = float(f @ C @ s)
        out.I8fn = float(f @ C @ n)
        out.I8sn = float(s @ C @ n)
    return out


class KinematicState:
    """Batched kinematic quantities and invariant gradients for a stack of F.

    Everything derived from the SVD is computed lazily since only Ogden
    terms need it.
    """

    def __init__(self, F: np.ndarray, frame: Optional[StructuralFrame] = None):
        F = np.asarray(F, dtype=float)
        if F.ndim == 2:
            F = F[None]
        self.F = F
        self.frame = frame
        self.C = np.einsum("nki,nkj->nij", F, F)
        self.I1 = np.trace(self.C, axis1=1, axis2=2)
        CC = np.einsum("nij,njk->nik", self.C, self.C)
        self.I2 = 0.5 * (self.I1 ** 2 - np.trace(CC, axis1=1, axis2=2))
        self._svd = None

    def __len__(self):
        return self.F.shape[0]

    @property
    def svd(self):
        if self._svd is None:
            self._svd = np.linalg.svd(self.F)
        return self._svd

    @property
    def stretches(self) -> np.ndarray:
        return self.svd[1]

    def dI1(self) -> np.ndarray:
        return 2.0 * self.F

    def dI2(self) -> np.ndarray:
        FC = np.einsum("nij,njk->nik", self.F, self.C)
        return 2.0 * (self.I1[:, None, None] * self.F - FC)

    def _directions(self):
        frame = self.frame if self.frame is not None else StructuralFrame.canonical()
        return frame.matrix

    def I4(self, which: int):
        """I4 value and gradient along direction ``which`` (0=f, 1=s, 2=n)."""
        a = self._directions()[which]
        value = np.einsum("i,nij,j->n", a, self.C, a)
        grad = 2.0 * np.einsum("nij,j,k->nik", self.F, a, a)
        return value, grad

    def I8(self, first: int, second: int):
        """I8 value and gradient for the direction pair (first, second)."""
        dirs = self._directions()
        a, b = dirs[first], dirs[second]
        value = np.einsum("i,nij,j->n", a, self.C, b)
        sym = np.outer(a, b) + np.outer(b, a)
        grad = np.einsum("nij,jk->nik", self.F, sym)
        return value, grad

    def ogden_gradient(self, alpha: float) -> np.ndarray:
        """d/dF of sum_i lambda_i**alpha, via the singular value chain rule."""
        U, s, Vt = self.svd
        return np.einsum("nij,nj,njk->nik", U, alpha * s ** (alpha - 1.0), Vt)

    def pressure_eliminated(self, G: np.ndarray, kind: ModeKind, slots: Sequence) -> np.ndarray:
        """Apply the mode's boundary condition to dW/dF stacks and extract
        the measured components.

        ``G`` has shape (n, 3, 3) or (n, m, 3, 3) for m stacked quantities;
        the result has shape (n, len(slots)) or (n, m, len(slots)).
        """
        k = kind.free_index
        rows = np.array([s[0] for s in slots])
        cols = np.array([s[1] for s in slots])
        picked = G[..., rows, cols]
        if k is None:
            # Simple shear: the measured off-diagonal entries of F^{-T} vanish.
            return picked
        FinvT = np.transpose(np.linalg.inv(self.F), (0, 2, 1))
        ratio = FinvT[:, rows, cols] / FinvT[:, k, k][:, None]
        if G.ndim == 4:
            return picked - G[..., k, k][..., None] * ratio[:, None, :]
        return picked - G[:, k, k][:, None] * ratio
