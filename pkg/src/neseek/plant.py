"""Agent dynamics, exosystems, uncertainty, and assumption certificates.

Each agent is an uncertain LTI system

    xdot_i = A_i(mu) x_i + B_i(mu) u_i + P_i(mu) w_i,   y_i = C_i(mu) x_i

with A_i(mu) = A_i + dA_i and so on, driven by an autonomous exosystem
wdot_i = S_i w_i.  The extended exosystem appends a constant channel so
the affine cost term becomes exogenous.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .errors import DimensionError, DomainError

__all__ = [
    "AgentPlant",
    "Exosystem",
    "ExtendedExosystem",
    "extend_exosystem",
    "check_assumption_2",
    "check_assumption_3",
    "check_assumption_4",
    "check_scaled_rank",
    "sample_perturbation",
]

_A2_TOL = 1e-9


def _mat(value, shape, name):
    M = np.asarray(value, dtype=float)
    M = M.reshape(shape) if M.size == int(np.prod(shape)) else M
    if M.shape != shape:
        raise DimensionError(f"{name} must have shape {shape}, got {M.shape}")
    return M


@dataclass(frozen=True)
class AgentPlant:
    """Nominal matrices plus explicit perturbations (default zero)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    P: np.ndarray = None
    dA: np.ndarray = None
    dB: np.ndarray = None
    dC: np.ndarray = None
    dP: np.ndarray = None
    x0: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape}")
        P = self.P
        if P is None:
            P = np.zeros((n, 0))
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[0] != n:
            raise DimensionError(f"P must have {n} rows, got {P.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", P)
        for name, nominal in (("dA", A), ("dB", B), ("dC", C), ("dP", P)):
            d = getattr(self, name)
            d = np.zeros_like(nominal) if d is None else _mat(d, nominal.shape, name)
            object.__setattr__(self, name, d)
        x0 = np.zeros(n) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise DimensionError(f"x0 must have {n} entries, got {x0.shape}")
        object.__setattr__(self, "x0", x0)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def q(self):
        return self.P.shape[1]

    # perturbed accessors: A_mu - A == dA exactly
    @property
    def A_mu(self):
        return self.A + self.dA

    @property
    def B_mu(self):
        return self.B + self.dB

    @property
    def C_mu(self):
        return self.C + self.dC

    @property
    def P_mu(self):
        return self.P + self.dP

    def with_perturbation(self, dA=None, dB=None, dC=None, dP=None):
        """Copy of the plant with the given perturbation matrices."""
        return replace(
            self,
            dA=self.dA if dA is None else dA,
            dB=self.dB if dB is None else dB,
            dC=self.dC if dC is None else dC,
            dP=self.dP if dP is None else dP,
        )


@dataclass(frozen=True)
class Exosystem:
    """Autonomous disturbance generator wdot = S w.  q = 0 means none."""

    S: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.size == 0:
            S = np.zeros((0, 0))
        else:
            S = np.atleast_2d(S)
            if S.shape[0] != S.shape[1]:
                raise DimensionError(f"S must be square, got {S.shape}")
        q = S.shape[0]
        w0 = np.asarray(self.w0, dtype=float).reshape(-1)
        if w0.shape != (q,):
            raise DimensionError(f"w0 must have {q} entries, got {w0.shape}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "w0", w0)

    @property
    def q(self):
        return self.S.shape[0]


@dataclass(frozen=True)
class ExtendedExosystem:
    """S with an appended constant channel: S_tilde = blockdiag(S, 0)."""

    S_tilde: np.ndarray
    v0: np.ndarray

    @property
    def dim(self):
        return self.S_tilde.shape[0]


def extend_exosystem(exo):
    """Append the constant channel: S_tilde = blockdiag(S, 0), v0 = (w0, 1)."""
    q = exo.q
    S_tilde = np.zeros((q + 1, q + 1))
    S_tilde[:q, :q] = exo.S
    v0 = np.append(exo.w0, 1.0)
    return ExtendedExosystem(S_tilde=S_tilde, v0=v0)


def check_assumption_2(exo):
    """No exosystem eigenvalue may have negative real part.

    Returns (bool, offending eigenvalues).
    """
    if exo.q == 0:
        return True, []
    eigs = linalg.eigenvalues(exo.S)
    offending = [lam for lam in eigs if lam.real < -_A2_TOL]
    return not offending, offending


def _unstable_eigs(A):
    return [lam for lam in linalg.eigenvalues(A) if lam.real >= -_A2_TOL]


def _real_embedded_rank(pencil):
    """Rank of a complex matrix via its real 2x-size embedding."""
    if np.iscomplexobj(pencil) and not pencil.imag.any():
        pencil = pencil.real
    if np.iscomplexobj(pencil):
        re, im = pencil.real, pencil.imag
        embedded = np.block([[re, -im], [im, re]])
        return linalg.rank(embedded), 2
    return linalg.rank(pencil), 1


def check_assumption_3(plant):
    """PBH stabilizability and detectability of the nominal pair.

    Returns a dict with keys ``stabilizable``, ``detectable``,
    ``witnesses`` (the failing eigenvalues per property).
    """
    n = plant.n
    bad_stab = []
    bad_det = []
    for lam in _unstable_eigs(plant.A):
        pencil = np.hstack([plant.A - lam * np.eye(n), plant.B.astype(complex)])
        r, factor = _real_embedded_rank(pencil)
        if r != factor * n:
            bad_stab.append(lam)
        pencil = np.vstack([plant.A - lam * np.eye(n), plant.C.astype(complex)])
        r, factor = _real_embedded_rank(pencil)
        if r != factor * n:
            bad_det.append(lam)
    return {
        "stabilizable": not bad_stab,
        "detectable": not bad_det,
        "witnesses": {"stabilizable": bad_stab, "detectable": bad_det},
    }


def _regulation_pencil_rank_ok(A, B, C, lam):
    """Eq.-(9)-style test: rank [[A - lam I, B], [C, 0]] = n + p."""
    n, m = B.shape
    p = C.shape[0]
    pencil = np.block([
        [A - lam * np.eye(n), B.astype(complex)],
        [C.astype(complex), np.zeros((p, m), dtype=complex)],
    ])
    if lam.imag == 0:
        pencil = pencil.real
    r, factor = _real_embedded_rank(pencil)
    return r == factor * (n + p)


def _spec_with_zero(exo):
    lams = list(linalg.eigenvalues(exo.S)) if exo.q else []
    lams.append(0.0 + 0.0j)
    # deduplicate within tolerance to avoid re-testing conjugate repeats
    unique = []
    for lam in lams:
        if not any(abs(lam - u) <= 1e-12 for u in unique):
            unique.append(complex(lam))
    return unique


def check_assumption_4(plant, exo):
    """Transmission-zero-free condition at spec(S) plus {0}.

    Returns (bool, failing lambda list).
    """
    failing = [
        lam
        for lam in _spec_with_zero(exo)
        if not _regulation_pencil_rank_ok(plant.A, plant.B, plant.C, lam)
    ]
    return not failing, failing


def check_scaled_rank(plant, exo, D):
    """Assumption-4 pencil with C replaced by D C, D nonsingular.

    The rank is invariant under any nonsingular output scaling, which is
    what licenses running the test with D = R_ii + R_ii'.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    if D.shape != (plant.p, plant.p):
        raise DimensionError(f"D must be {plant.p}x{plant.p}, got {D.shape}")
    if linalg.rank(D) < plant.p:
        raise DomainError("D must be nonsingular")
    return all(
        _regulation_pencil_rank_ok(plant.A, plant.B, D @ plant.C, lam)
        for lam in _spec_with_zero(exo)
    )


def sample_perturbation(plant, scale, rng):
    """Entrywise-uniform perturbation dict for all four plant matrices.

    Entries are drawn from scale * U(-1, 1); pass the result to
    AgentPlant.with_perturbation.  Robustness certificates decide after
    the fact whether a draw kept the loop Hurwitz.
    """
    return {
        "dA": scale * rng.uniform(-1.0, 1.0, size=plant.A.shape),
        "dB": scale * rng.uniform(-1.0, 1.0, size=plant.B.shape),
        "dC": scale * rng.uniform(-1.0, 1.0, size=plant.C.shape),
        "dP": scale * rng.uniform(-1.0, 1.0, size=plant.P.shape),
    }
