"""Gain synthesis, the two distributed strategies, and closed-loop certificates.

Strategy "digraph" (acyclic topologies) runs each agent's controller on
the regulated error alone:

    etadot_i = M1_i eta_i + M2_i e_i,    u_i = K_i eta_i

Strategy "general" (connected topologies) runs a plant observer xi_i and
an internal-model state zeta_i, exchanging C_i xi_i with neighbors:

    xidot_i  = A_i xi_i + B_i u_i - L_i (ehat_i - e_i)
    zetadot_i = G1_i zeta_i + G2_i e_i
    u_i      = K1_i xi_i + K2_i zeta_i

Both are assembled here into the stacked closed loop
zdot = A_c(mu) z + P_c(mu) v, e = C_c(mu) z + Q_c v, vdot = Shat v,
on which stability, regulator-equation, and steady-state certificates
are computed.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg
from .errors import AssumptionError, DimensionError, SynthesisError
from .game import assemble_pseudo_gradient
from .graph import check_acyclic, check_connected, neighbors
from .internal_model import build_p_copy
from .plant import check_assumption_3, extend_exosystem, _regulation_pencil_rank_ok

__all__ = [
    "SynthesisWeights",
    "ControllerDigraph",
    "ControllerGeneral",
    "ClosedLoopSystem",
    "RegulatorSolution",
    "observer_gain",
    "augmented_stabilizer",
    "build_strategy_digraph",
    "build_strategy_general",
    "assemble_closed_loop",
    "certify_stability",
    "solve_regulator",
    "steady_state",
    "largest_stable_scale",
]


@dataclass(frozen=True)
class SynthesisWeights:
    """Scalar CARE weight overrides; all default to identity scaling.

    ``stabilizer_q_im`` weights the internal-model states of the
    augmented stabilizer separately, which is the knob that restores a
    usable coupled stability margin on general graphs.
    """

    observer_q: float = 1.0
    observer_r: float = 1.0
    stabilizer_q_state: float = 1.0
    stabilizer_q_im: float = 1.0
    stabilizer_r: float = 1.0


@dataclass(frozen=True)
class ControllerDigraph:
    """Error-feedback strategy matrices plus the gains they were built from."""

    M1: np.ndarray
    M2: np.ndarray
    K: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    L: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    Rw: np.ndarray
    s: int

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def eta_dim(self):
        return self.M1.shape[0]


@dataclass(frozen=True)
class ControllerGeneral:
    """Observer + internal-model strategy data (xi and zeta states)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    L: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    Rw: np.ndarray
    s: int

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def zeta_dim(self):
        return self.G1.shape[0]


@dataclass(frozen=True)
class ClosedLoopSystem:
    """Stacked closed loop with per-agent index bookkeeping.

    ``x_slices`` locate each agent's plant state inside z; ``ctrl_slices``
    its controller state; ``v_slices`` its extended exogenous block.
    ``C_out`` maps z to the stacked output y (perturbed C when the loop
    was assembled perturbed).
    """

    strategy: str
    A_c: np.ndarray
    P_c: np.ndarray
    C_c: np.ndarray
    Q_c: np.ndarray
    S_hat: np.ndarray
    v0: np.ndarray
    C_out: np.ndarray
    x_slices: tuple
    ctrl_slices: tuple
    v_slices: tuple
    out_slices: tuple
    topo_order: tuple = None
    perturbed: bool = False
    game: object = field(default=None, repr=False)
    plants: tuple = field(default=None, repr=False)
    exos: tuple = field(default=None, repr=False)
    controllers: tuple = field(default=None, repr=False)

    @property
    def dim_z(self):
        return self.A_c.shape[0]

    @property
    def dim_v(self):
        return self.S_hat.shape[0]

    @property
    def agent_count(self):
        return len(self.x_slices)

    def initial_state(self):
        """Plant states from x0, controller states zero."""
        z0 = np.zeros(self.dim_z)
        for plant, sl in zip(self.plants, self.x_slices):
            z0[sl] = plant.x0
        return z0


@dataclass(frozen=True)
class RegulatorSolution:
    X_c: np.ndarray
    residual_dyn: float
    residual_err: float
    scale_dyn: float
    scale_err: float


def _weight(base_dim, scale):
    return float(scale) * np.eye(base_dim)


def observer_gain(A, Cw, q_scale=1.0, r_scale=1.0):
    """Output-injection gain L with A - L Cw certified Hurwitz.

    Solves the dual CARE on (A', Cw'), so detectability of (A, Cw) is
    what's required; it is checked first and a failing PBH eigenvalue is
    named in the error.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Cw = np.atleast_2d(np.asarray(Cw, dtype=float))
    n = A.shape[0]
    for lam in linalg.eigenvalues(A):
        if lam.real < 0:
            continue
        pencil = np.vstack([A - lam * np.eye(n), Cw.astype(complex)])
        if lam.imag == 0:
            pencil = pencil.real
            if linalg.rank(pencil) != n:
                raise SynthesisError(f"(A, Cw) not detectable at eigenvalue {lam}")
        else:
            embedded = np.block([[pencil.real, -pencil.imag], [pencil.imag, pencil.real]])
            if linalg.rank(embedded) != 2 * n:
                raise SynthesisError(f"(A, Cw) not detectable at eigenvalue {lam}")
    K_dual = linalg.solve_care(A.T, Cw.T, _weight(n, q_scale), _weight(Cw.shape[0], r_scale))
    L = -K_dual.T
    ok, abscissa = linalg.is_hurwitz(A - L @ Cw)
    if not ok:
        raise SynthesisError(f"observer not stabilizing (abscissa {abscissa:.3e})")
    return L


def augmented_stabilizer(A, B, Cw, im, q_state=1.0, q_im=1.0, r_scale=1.0):
    """Stabilizing gain [K1 K2] for the plant/internal-model cascade.

    The design pair is ([A 0; G2 Cw G1], [B; 0]); its stabilizability
    needs the transmission-zero-free condition at every eigenvalue of
    G1, which is re-verified here before solving the CARE.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Cw = np.atleast_2d(np.asarray(Cw, dtype=float))
    n, m = B.shape
    v = im.G1.shape[0]

    checked = []
    failures = []
    for lam in linalg.eigenvalues(im.G1):
        lam = complex(lam)
        if any(abs(lam - u) <= 1e-9 for u in checked):
            continue
        checked.append(lam)
        if not _regulation_pencil_rank_ok(A, B, Cw, lam):
            failures.append(lam)
    if failures:
        raise SynthesisError(
            "rank condition fails at internal-model eigenvalue(s) "
            + ", ".join(f"{lam:.6g}" for lam in failures)
        )

    A_aug = np.block([[A, np.zeros((n, v))], [im.G2 @ Cw, im.G1]])
    B_aug = np.vstack([B, np.zeros((v, m))])
    Qw = scipy.linalg.block_diag(_weight(n, q_state), _weight(v, q_im))
    K = linalg.solve_care(A_aug, B_aug, Qw, _weight(m, r_scale))
    K1, K2 = K[:, :n], K[:, n:]
    ok, abscissa = linalg.is_hurwitz(A_aug + B_aug @ K)
    if not ok:
        raise SynthesisError(f"augmented matrix not Hurwitz (abscissa {abscissa:.3e})")
    return K1, K2


def _synthesize_parts(plant, cost, exo, weights):
    weights = weights or SynthesisWeights()
    result = check_assumption_3(plant)
    if not result["stabilizable"]:
        raise SynthesisError(
            f"(A, B) not stabilizable at {result['witnesses']['stabilizable']}"
        )
    Rw = cost.R_ii + cost.R_ii.T
    if Rw.shape[0] != plant.p:
        raise DimensionError(
            f"cost output dimension {Rw.shape[0]} != plant output dimension {plant.p}"
        )
    Cw = Rw @ plant.C
    ext = extend_exosystem(exo)
    im = build_p_copy(ext.S_tilde, plant.p)
    L = observer_gain(plant.A, Cw, weights.observer_q, weights.observer_r)
    K1, K2 = augmented_stabilizer(
        plant.A, plant.B, Cw, im,
        weights.stabilizer_q_state, weights.stabilizer_q_im, weights.stabilizer_r,
    )
    return Rw, Cw, im, L, K1, K2


def build_strategy_digraph(plant, cost, exo, weights=None):
    """Error-feedback controller for acyclic topologies."""
    Rw, Cw, im, L, K1, K2 = _synthesize_parts(plant, cost, exo, weights)
    n, v = plant.n, im.G1.shape[0]
    M1 = np.block([
        [plant.A + plant.B @ K1 - L @ Cw, plant.B @ K2],
        [np.zeros((v, n)), im.G1],
    ])
    M2 = np.vstack([L, im.G2])
    K = np.hstack([K1, K2])
    return ControllerDigraph(
        M1=M1, M2=M2, K=K, A=plant.A, B=plant.B, C=plant.C,
        L=L, G1=im.G1, G2=im.G2, K1=K1, K2=K2, Rw=Rw, s=im.s,
    )


def build_strategy_general(plant, cost, exo, weights=None):
    """Observer + internal-model controller for connected topologies."""
    Rw, Cw, im, L, K1, K2 = _synthesize_parts(plant, cost, exo, weights)
    return ControllerGeneral(
        A=plant.A, B=plant.B, C=plant.C,
        L=L, G1=im.G1, G2=im.G2, K1=K1, K2=K2, Rw=Rw, s=im.s,
    )


def _q_tilde(cost, q):
    """Cost's exogenous channel [0 Q_ii'] of shape p x (q + 1)."""
    p = cost.p
    Qt = np.zeros((p, q + 1))
    Qt[:, q] = cost.Q_ii
    return Qt


def _plant_matrices(plant, perturbed):
    if perturbed:
        return plant.A_mu, plant.B_mu, plant.C_mu, plant.P_mu
    return plant.A, plant.B, plant.C, plant.P


def _assemble_digraph(game, plants, exos, controllers, perturbed):
    N = game.graph.agent_count
    dims = [2 * c.n + c.G1.shape[0] for c in controllers]
    z_off = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    v_dims = [e.q + 1 for e in exos]
    v_off = np.concatenate([[0], np.cumsum(v_dims)]).astype(int)
    out_off = game.offsets

    dz, dv, dp = z_off[-1], v_off[-1], out_off[-1]
    A_c = np.zeros((dz, dz))
    P_c = np.zeros((dz, dv))
    C_c = np.zeros((dp, dz))
    Q_c = np.zeros((dp, dv))
    S_hat = np.zeros((dv, dv))
    C_out = np.zeros((dp, dz))
    v0 = np.zeros(dv)

    x_slices, ctrl_slices, v_slices, out_slices = [], [], [], []
    for i in range(1, N + 1):
        c = controllers[i - 1]
        plant = plants[i - 1]
        A, B, Cm, P = _plant_matrices(plant, perturbed)
        n, v = c.n, c.G1.shape[0]
        o = z_off[i - 1]
        x_sl = slice(o, o + n)
        e1 = slice(o + n, o + 2 * n)
        e2 = slice(o + 2 * n, o + 2 * n + v)
        ctrl_sl = slice(o + n, o + 2 * n + v)
        o_sl = slice(out_off[i - 1], out_off[i])
        vi = slice(v_off[i - 1], v_off[i])
        x_slices.append(x_sl)
        ctrl_slices.append(ctrl_sl)
        v_slices.append(vi)
        out_slices.append(o_sl)

        Cw_meas = c.Rw @ Cm          # measurement path: perturbed C
        Cw_nom = c.Rw @ c.C          # controller internals: nominal C

        A_c[x_sl, x_sl] = A
        A_c[x_sl, e1] = B @ c.K1
        A_c[x_sl, e2] = B @ c.K2
        A_c[e1, x_sl] = c.L @ Cw_meas
        A_c[e1, e1] = c.A + c.B @ c.K1 - c.L @ Cw_nom
        A_c[e1, e2] = c.B @ c.K2
        A_c[e2, x_sl] = c.G2 @ Cw_meas
        A_c[e2, e2] = c.G1

        cost = game.costs[i - 1]
        for j in neighbors(game.graph, i):
            cj = controllers[j - 1]
            _, _, Cj, _ = _plant_matrices(plants[j - 1], perturbed)
            xj = slice(z_off[j - 1], z_off[j - 1] + cj.n)
            R_ij = cost.R_ij[j]
            A_c[e1, xj] = c.L @ R_ij @ Cj
            A_c[e2, xj] = c.G2 @ R_ij @ Cj
            C_c[o_sl, xj] = R_ij @ Cj
        C_c[o_sl, x_sl] = Cw_meas
        C_out[o_sl, x_sl] = Cm

        Qt = _q_tilde(cost, exos[i - 1].q)
        P_tilde = np.hstack([P, np.zeros((n, 1))])
        P_c[x_sl, vi] = P_tilde
        P_c[e1, vi] = c.L @ Qt
        P_c[e2, vi] = c.G2 @ Qt
        Q_c[o_sl, vi] = Qt

        ext = extend_exosystem(exos[i - 1])
        S_hat[vi, vi] = ext.S_tilde
        v0[vi] = ext.v0

    return A_c, P_c, C_c, Q_c, S_hat, v0, C_out, x_slices, ctrl_slices, v_slices, out_slices


def _assemble_general(game, plants, exos, controllers, perturbed):
    N = game.graph.agent_count
    bd = scipy.linalg.block_diag
    mats = [_plant_matrices(p, perturbed) for p in plants]
    A_mu = bd(*[m[0] for m in mats])
    B_mu = bd(*[m[1] for m in mats])
    C_mu = bd(*[m[2] for m in mats])

    A_nom = bd(*[c.A for c in controllers])
    B_nom = bd(*[c.B for c in controllers])
    C_nom = bd(*[c.C for c in controllers])
    L = bd(*[c.L for c in controllers])
    G1 = bd(*[c.G1 for c in controllers])
    G2 = bd(*[c.G2 for c in controllers])
    K1 = bd(*[c.K1 for c in controllers])
    K2 = bd(*[c.K2 for c in controllers])

    Rbar = assemble_pseudo_gradient(game).Rbar
    RC_mu = Rbar @ C_mu
    RC_nom = Rbar @ C_nom

    n_tot = A_mu.shape[0]
    z_tot = G1.shape[0]
    A_c = np.block([
        [A_mu, B_mu @ K1, B_mu @ K2],
        [L @ RC_mu, A_nom + B_nom @ K1 - L @ RC_nom, B_nom @ K2],
        [G2 @ RC_mu, np.zeros((z_tot, n_tot)), G1],
    ])

    v_dims = [e.q + 1 for e in exos]
    v_off = np.concatenate([[0], np.cumsum(v_dims)]).astype(int)
    out_off = game.offsets
    dv, dp = v_off[-1], out_off[-1]

    Q_c = np.zeros((dp, dv))
    P_bar = np.zeros((n_tot, dv))
    S_hat = np.zeros((dv, dv))
    v0 = np.zeros(dv)
    n_off = np.concatenate([[0], np.cumsum([p.n for p in plants])]).astype(int)
    for i in range(1, N + 1):
        vi = slice(v_off[i - 1], v_off[i])
        Qt = _q_tilde(game.costs[i - 1], exos[i - 1].q)
        Q_c[out_off[i - 1]:out_off[i], vi] = Qt
        P_bar[n_off[i - 1]:n_off[i], v_off[i - 1]:v_off[i - 1] + exos[i - 1].q] = mats[i - 1][3]
        ext = extend_exosystem(exos[i - 1])
        S_hat[vi, vi] = ext.S_tilde
        v0[vi] = ext.v0

    P_c = np.vstack([P_bar, L @ Q_c, G2 @ Q_c])
    C_c = np.hstack([RC_mu, np.zeros((dp, n_tot)), np.zeros((dp, z_tot))])
    C_out = np.hstack([C_mu, np.zeros((dp, n_tot)), np.zeros((dp, z_tot))])

    x_slices = [slice(n_off[i], n_off[i + 1]) for i in range(N)]
    xi_off = n_tot + n_off
    z_off = np.concatenate([[0], np.cumsum([c.G1.shape[0] for c in controllers])]).astype(int)
    ctrl_slices = [
        (slice(xi_off[i], xi_off[i + 1]),
         slice(2 * n_tot + z_off[i], 2 * n_tot + z_off[i + 1]))
        for i in range(N)
    ]
    v_slices = [slice(v_off[i], v_off[i + 1]) for i in range(N)]
    out_slices = [slice(out_off[i], out_off[i + 1]) for i in range(N)]
    return A_c, P_c, C_c, Q_c, S_hat, v0, C_out, x_slices, ctrl_slices, v_slices, out_slices


def assemble_closed_loop(game, plants, exos, controllers, strategy_kind, perturbed=False):
    """Stack plant + controller dynamics into one LTI closed loop.

    ``strategy_kind`` is ``"digraph"`` or ``"general"``; the matching
    graph assumption (5 or 6) is gated here.  With ``perturbed=True``
    plant blocks use the perturbed matrices; controller blocks always
    use nominals.
    """
    N = game.graph.agent_count
    if not (len(plants) == len(exos) == len(controllers) == N):
        raise DimensionError("plants, exosystems, controllers must match agent count")

    topo_order = None
    if strategy_kind == "digraph":
        if not game.graph.directed:
            raise AssumptionError(5, "strategy 'digraph' needs a directed graph")
        ok, witness = check_acyclic(game.graph)
        if not ok:
            raise AssumptionError(
                5, "communication digraph has a cycle: " + "->".join(map(str, witness))
            )
        topo_order = tuple(witness)
        expected = ControllerDigraph
        assemble = _assemble_digraph
    elif strategy_kind == "general":
        if check_connected(game.graph) == "disconnected":
            raise AssumptionError(6, "communication graph is disconnected")
        expected = ControllerGeneral
        assemble = _assemble_general
    else:
        raise DimensionError(f"unknown strategy kind {strategy_kind!r}")

    for i, c in enumerate(controllers, start=1):
        if not isinstance(c, expected):
            raise DimensionError(
                f"agent {i}: controller type {type(c).__name__} does not match "
                f"strategy {strategy_kind!r}"
            )

    for i, (plant, exo) in enumerate(zip(plants, exos), start=1):
        if plant.q != exo.q:
            raise DimensionError(
                f"agent {i}: plant has {plant.q} disturbance columns but "
                f"exosystem dimension is {exo.q}"
            )

    parts = assemble(game, plants, exos, controllers, perturbed)
    (A_c, P_c, C_c, Q_c, S_hat, v0, C_out,
     x_slices, ctrl_slices, v_slices, out_slices) = parts
    return ClosedLoopSystem(
        strategy=strategy_kind,
        A_c=A_c, P_c=P_c, C_c=C_c, Q_c=Q_c, S_hat=S_hat, v0=v0, C_out=C_out,
        x_slices=tuple(x_slices), ctrl_slices=tuple(ctrl_slices),
        v_slices=tuple(v_slices), out_slices=tuple(out_slices),
        topo_order=topo_order, perturbed=perturbed,
        game=game, plants=tuple(plants), exos=tuple(exos),
        controllers=tuple(controllers),
    )


def certify_stability(cl, perturbations=None):
    """Hurwitz certificate of A_c, optionally under plant perturbations.

    ``perturbations`` is a per-agent list of dicts with any of the keys
    dA, dB, dC, dP; the loop is reassembled with them applied to the
    plant blocks only.
    """
    if perturbations is None:
        return linalg.is_hurwitz(cl.A_c)
    plants = tuple(
        p.with_perturbation(**d) for p, d in zip(cl.plants, perturbations)
    )
    perturbed_cl = assemble_closed_loop(
        cl.game, plants, cl.exos, cl.controllers, cl.strategy, perturbed=True
    )
    return linalg.is_hurwitz(perturbed_cl.A_c)


def solve_regulator(cl):
    """Solve X_c Shat = A_c X_c + P_c and report both residuals.

    ``residual_err`` is the Frobenius norm of C_c X_c + Q_c: at zero the
    invariant subspace carries zero regulated error, which is the
    regulation certificate.
    """
    X_c = linalg.solve_sylvester(cl.A_c, cl.S_hat, cl.P_c)
    residual_dyn = float(np.linalg.norm(X_c @ cl.S_hat - cl.A_c @ X_c - cl.P_c))
    residual_err = float(np.linalg.norm(cl.C_c @ X_c + cl.Q_c))
    norm_x = np.linalg.norm(X_c)
    scale_dyn = float(
        (np.linalg.norm(cl.A_c) + np.linalg.norm(cl.S_hat)) * norm_x
        + np.linalg.norm(cl.P_c)
    )
    scale_err = float(np.linalg.norm(cl.C_c) * norm_x + np.linalg.norm(cl.Q_c))
    return RegulatorSolution(
        X_c=X_c, residual_dyn=residual_dyn, residual_err=residual_err,
        scale_dyn=scale_dyn, scale_err=scale_err,
    )


def steady_state(reg, cl, v):
    """Steady state induced by exogenous vector v on the regulated subspace.

    Returns stacked (x_ss, u_ss, y_ss); y_ss equals the game NE whenever
    the constant channels of v are 1 and residual_err is (numerically)
    zero, which cross-checks the synthesis against the equilibrium solve.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (cl.dim_v,):
        raise DimensionError(f"v must have {cl.dim_v} entries, got {v.shape}")
    z_ss = reg.X_c @ v
    x_ss = np.concatenate([z_ss[sl] for sl in cl.x_slices])
    y_ss = cl.C_out @ z_ss

    u_parts = []
    for i, c in enumerate(cl.controllers):
        if cl.strategy == "digraph":
            u_parts.append(c.K @ z_ss[cl.ctrl_slices[i]])
        else:
            xi_sl, zeta_sl = cl.ctrl_slices[i]
            u_parts.append(c.K1 @ z_ss[xi_sl] + c.K2 @ z_ss[zeta_sl])
    return x_ss, np.concatenate(u_parts), y_ss


def largest_stable_scale(cl, scales, draws=20, seed=0):
    """Largest sampled perturbation scale keeping A_c(mu) Hurwitz.

    Samples ``draws`` entrywise-uniform perturbation sets per scale
    (all four plant matrices) and returns the largest scale where every
    draw stays Hurwitz, or None if none does.
    """
    from .plant import sample_perturbation

    best = None
    for scale in sorted(scales):
        rng = np.random.default_rng(seed)
        ok_all = True
        for _ in range(draws):
            perts = [sample_perturbation(p, scale, rng) for p in cl.plants]
            ok, _ = certify_stability(cl, perts)
            if not ok:
                ok_all = False
                break
        if ok_all:
            best = scale
    return best
