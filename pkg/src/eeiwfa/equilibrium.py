"""Nash-equilibrium uniqueness machinery.

Builds the nonnegative interference matrix in its exact-square,
pseudoinverse (full-row-rank) and sampled (full-column-rank) variants,
evaluates the two uniqueness criteria (variational-inequality form with the
symmetrized spectral radius, contraction form with the plain spectral
radius), exposes the linear QVI mapping, and numerically verifies its
Lipschitz/strong-monotonicity constants and the smoothness of the
strategy-dependent power sets.
"""

from dataclasses import dataclass, field

import numpy as np

from .best_response import DinkelbachConfig, dinkelbach_power
from .errors import CheckFailure, ConvergenceError, InvalidInputError
from .linalg import (
    W_FLOOR,
    compact_svd,
    hermitize,
    pseudo_inverse,
    psd_trace_projection,
    spectral_radius,
)
from .model import StrategyProfile, mui_covariance

VARIANTS = ("exact-square", "pseudoinverse-rowrank", "sampled-columnrank")


@dataclass
class InterferenceMatrix:
    """Q x Q nonnegative matrix of squared whitened cross-channel gains."""

    S: np.ndarray
    variant: str
    n_samples: int = 0

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        Q = self.S.shape[0]
        if self.S.shape != (Q, Q):
            raise InvalidInputError("interference matrix must be square")
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"variant must be one of {VARIANTS}")
        if np.any(np.diagonal(self.S) != 0.0):
            raise InvalidInputError("interference matrix must have a zero diagonal")
        if self.S.size and self.S.min() < 0.0:
            raise InvalidInputError("interference matrix must be nonnegative")


def _sigma_max_sq(M):
    return float(np.linalg.norm(M, 2)) ** 2


def _square_direct(s, q):
    Hqq = s.Hbar[q][q]
    if Hqq.shape[0] != Hqq.shape[1]:
        raise InvalidInputError(
            f"reduced direct channel of player {q} is {Hqq.shape[0]}x"
            f"{Hqq.shape[1]}; use interference_matrix_sampled for"
            " full-column-rank channels"
        )
    return Hqq


def interference_matrix_square(s):
    """Exact interference matrix for square nonsingular direct channels:
    entry (q, r) = sigma_max^2(Hbar_qq^{-1} Hbar_qr)."""
    Q = s.Q
    S = np.zeros((Q, Q))
    for q in range(Q):
        Hqq = _square_direct(s, q)
        for r in range(Q):
            if r == q:
                continue
            try:
                M = np.linalg.solve(Hqq, s.Hbar[q][r])
            except np.linalg.LinAlgError:
                raise InvalidInputError(
                    f"reduced direct channel of player {q} is singular;"
                    " use interference_matrix_sampled"
                ) from None
            S[q, r] = _sigma_max_sq(M)
    return InterferenceMatrix(S, "exact-square")


def interference_matrix_rowrank(s):
    """Interference matrix from the original channels via pseudoinverses.

    Requires every direct channel to be full row rank; entry (q, r) is
    sigma_max^2(pinv(H_qq) H_qr V_{r,1}), the V factor dropping when H_rr is
    square nonsingular (where it is unitary and changes nothing).
    """
    Q = s.Q
    pinvs = []
    V1 = []
    square = []
    for q in range(Q):
        _, _, v1, r = compact_svd(s.H[q][q])
        if r < s.nR[q]:
            raise InvalidInputError(
                f"direct channel of player {q} is not full row rank"
            )
        pinvs.append(pseudo_inverse(s.H[q][q]))
        V1.append(v1)
        square.append(r == s.nT[q])
    S = np.zeros((Q, Q))
    for q in range(Q):
        for r in range(Q):
            if r == q:
                continue
            M = pinvs[q] @ s.H[q][r]
            if not square[r]:
                M = M @ V1[r]
            S[q, r] = _sigma_max_sq(M)
    return InterferenceMatrix(S, "pseudoinverse-rowrank")


# --- random sampling rules -------------------------------------------------

def haar_unitary(n, rng):
    """Haar-distributed unitary via QR with phase correction."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Qm, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    return Qm * (d / np.abs(d))


def random_covariance(r, p, rng, boundary=False):
    """Random PSD matrix A A^H scaled to a random trace in [0, p]
    (or exactly p on the boundary)."""
    A = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    M = A @ A.conj().T
    target = float(p) if boundary else float(rng.uniform(0.0, p))
    tr = float(np.trace(M).real)
    if tr <= 0:
        return (target / r) * np.eye(r, dtype=complex)
    return (target / tr) * M


def random_frame_simplex_covariance(r, p, rng):
    """Full-budget PSD draw: Haar eigenvector frame with eigenvalues from
    the uniform simplex scaled to trace p."""
    U = haar_unitary(r, rng)
    lam = p * rng.dirichlet(np.ones(r))
    return hermitize((U * lam) @ U.conj().T)


def random_profile(s, rng, boundary=False, rule="wishart"):
    """Random feasible strategy profile of the reduced game."""
    mats = []
    for q in range(s.Q):
        r = int(s.ranks[q])
        if rule == "wishart":
            mats.append(random_covariance(r, s.P[q], rng, boundary=boundary))
        elif rule == "frame-simplex":
            mats.append(random_frame_simplex_covariance(r, s.P[q], rng))
        else:
            raise InvalidInputError(f"unknown sampling rule {rule!r}")
    return StrategyProfile(mats)


def random_hermitian(n, rng, scale=1.0):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * hermitize(A)


def interference_matrix_sampled(s, n_samples, seed):
    """Sampled interference matrix for full-column-rank direct channels.

    Entry (q, r) maximizes sigma_max^2 of the whitened cross-channel map
    G_qr = (Hqq^H R^{-1} Hqq)^{-1} Hqq^H R^{-1} Hqr over ``n_samples``
    full-power profiles. The inner maximization is nonconvex, so this is a
    Monte-Carlo LOWER bound on the true maximum; with the same seed the
    entries are non-decreasing in ``n_samples``. For square nonsingular
    direct channels G_qr is profile-independent and the result matches
    :func:`interference_matrix_square`.
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    Q = s.Q
    S = np.zeros((Q, Q))
    for _ in range(n_samples):
        delta = StrategyProfile([
            random_frame_simplex_covariance(int(s.ranks[q]), s.P[q], rng)
            for q in range(Q)
        ])
        for q in range(Q):
            R = mui_covariance(s, q, delta)
            Hqq = s.Hbar[q][q]
            W = np.linalg.solve(R, Hqq)
            gram = hermitize(Hqq.conj().T @ W)
            for r in range(Q):
                if r == q:
                    continue
                T = W.conj().T @ s.Hbar[q][r]
                G = np.linalg.solve(gram, T)
                S[q, r] = max(S[q, r], _sigma_max_sq(G))
    return InterferenceMatrix(S, "sampled-columnrank", n_samples=int(n_samples))


# --- uniqueness criteria ---------------------------------------------------

@dataclass
class PowerSmoothnessConfig:
    n_pairs: int = 50
    seed: int = 0
    perturbation: float = 0.01
    dinkelbach: DinkelbachConfig = field(default_factory=DinkelbachConfig)


@dataclass
class PowerSmoothnessEstimate:
    max_ratio_l2: float
    max_ratio_weighted_inf: float
    n_pairs: int
    n_skipped: int


@dataclass
class CriteriaReport:
    """Constants and flags of the two uniqueness criteria.

    ``qvi_rhs_constant`` is (1 - sr(S^s)) / sigma_max(I + S) and
    ``contraction_rhs_constant`` is 1 - sr(S); each bounds how fast the
    optimal-power mapping may vary for its criterion to guarantee a unique
    equilibrium. The flags record the interference half of each criterion.
    """

    variant: str
    sr_S: float
    sr_Ssym: float
    sigma_max_IplusS: float
    perron_w: np.ndarray
    perron_degenerate: bool
    qvi_rhs_constant: float
    contraction_rhs_constant: float
    interference_ok_qvi: bool
    interference_ok_contraction: bool
    power_smoothness: PowerSmoothnessEstimate | None = None

    def to_dict(self):
        d = {
            "variant": self.variant,
            "sr_S": self.sr_S,
            "sr_Ssym": self.sr_Ssym,
            "sigma_max_IplusS": self.sigma_max_IplusS,
            "perron_w": [float(x) for x in self.perron_w],
            "perron_degenerate": bool(self.perron_degenerate),
            "qvi_rhs_constant": self.qvi_rhs_constant,
            "contraction_rhs_constant": self.contraction_rhs_constant,
            "interference_ok_qvi": bool(self.interference_ok_qvi),
            "interference_ok_contraction": bool(self.interference_ok_contraction),
        }
        if self.power_smoothness is not None:
            d["power_smoothness"] = {
                "max_ratio_l2": self.power_smoothness.max_ratio_l2,
                "max_ratio_weighted_inf": self.power_smoothness.max_ratio_weighted_inf,
                "n_pairs": self.power_smoothness.n_pairs,
                "n_skipped": self.power_smoothness.n_skipped,
            }
        return d


def criteria(s, S, smoothness_cfg=None):
    """Evaluate both uniqueness criteria for an interference matrix.

    ``s`` (a reduced scenario) is only needed when ``smoothness_cfg`` asks
    for the sampled power-mapping modulus; pass ``s=None`` otherwise.
    """
    M = S.S
    Q = M.shape[0]
    sr_S, w, degenerate = spectral_radius(M)
    sr_sym, _, _ = spectral_radius(0.5 * (M + M.T))
    sigma = float(np.linalg.norm(np.eye(Q) + M, 2))
    if sr_S > sr_sym + 1e-9:
        raise CheckFailure(
            f"spectral-radius ordering violated: sr(S)={sr_S} > sr(S^s)={sr_sym}"
        )
    if sigma < 1.0 - 1e-12:
        raise CheckFailure(f"sigma_max(I + S) = {sigma} < 1")
    qvi_rhs = (1.0 - sr_sym) / sigma
    contraction_rhs = 1.0 - sr_S
    ok_qvi = bool(sr_sym < 1.0)
    ok_contraction = bool(sr_S < 1.0)
    if ok_qvi and ok_contraction and qvi_rhs > contraction_rhs + 1e-9:
        raise CheckFailure("criterion constants are inconsistently ordered")
    smooth = None
    if smoothness_cfg is not None:
        if s is None:
            raise InvalidInputError("a scenario is required for the smoothness estimate")
        smooth = estimate_power_smoothness(s, smoothness_cfg, weights=w)
    return CriteriaReport(
        variant=S.variant,
        sr_S=float(sr_S),
        sr_Ssym=float(sr_sym),
        sigma_max_IplusS=sigma,
        perron_w=w,
        perron_degenerate=degenerate,
        qvi_rhs_constant=float(qvi_rhs),
        contraction_rhs_constant=float(contraction_rhs),
        interference_ok_qvi=ok_qvi,
        interference_ok_contraction=ok_contraction,
        power_smoothness=smooth,
    )


# --- the linear QVI mapping and its verified properties ---------------------

def qvi_map(s, profile):
    """The affine per-player mapping F_q whose variational inequality on the
    full-power sets characterizes the equilibria (square channels only):

    F_q = Hqq^{-1} Rn_q Hqq^{-H} + sum_r Hqq^{-1} Hqr Qbar_r Hqr^H Hqq^{-H}.
    """
    out = []
    for q in range(s.Q):
        Hqq = _square_direct(s, q)
        M = np.array(s.Rn[q], dtype=complex)
        for r in range(s.Q):
            Hqr = s.Hbar[q][r]
            M += Hqr @ profile[r] @ Hqr.conj().T
        try:
            Y = np.linalg.solve(Hqq, M)
            F = np.linalg.solve(Hqq, Y.conj().T).conj().T
        except np.linalg.LinAlgError:
            raise InvalidInputError(
                f"reduced direct channel of player {q} is singular"
            ) from None
        out.append(hermitize(F))
    return out


def _profile_frob(pa, pb):
    return float(np.sqrt(sum(
        np.linalg.norm(a - b, "fro") ** 2 for a, b in zip(pa, pb)
    )))


def _mats_frob(la, lb):
    return float(np.sqrt(sum(
        np.linalg.norm(a - b, "fro") ** 2 for a, b in zip(la, lb)
    )))


@dataclass
class VerifierReport:
    name: str
    status: str              # "ok" | "violation" | "skipped"
    n_samples: int
    constant: float
    max_ratio: float
    slack: float
    witness: dict | None = None
    notes: str = ""

    @property
    def passed(self):
        return self.status != "violation"

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "n_samples": self.n_samples,
            "constant": self.constant,
            "max_ratio": self.max_ratio,
            "slack": self.slack,
            "witness": self.witness,
            "notes": self.notes,
        }


def _witness(index, pa, pb):
    from .model import _complex_to_lists

    return {
        "pair_index": int(index),
        "profile_a": [_complex_to_lists(m) for m in pa],
        "profile_b": [_complex_to_lists(m) for m in pb],
    }


def verify_lipschitz(s, n_pairs=500, seed=0, slack=1e-9):
    """Sample profile pairs and check the Lipschitz bound
    ||F(Q) - F(Q')||_F <= sigma_max(I + S) ||Q - Q'||_F."""
    S = interference_matrix_square(s)
    L = float(np.linalg.norm(np.eye(s.Q) + S.S, 2))
    rng = np.random.default_rng(seed)
    max_ratio = 0.0
    for i in range(n_pairs):
        pa = random_profile(s, rng)
        pb = random_profile(s, rng)
        num = _mats_frob(qvi_map(s, pa), qvi_map(s, pb))
        den = _profile_frob(pa, pb)
        if den <= 1e-12:
            continue
        max_ratio = max(max_ratio, num / den)
        if num > L * den + slack:
            return VerifierReport(
                "lipschitz", "violation", i + 1, L, num / den, slack,
                witness=_witness(i, pa, pb),
            )
    return VerifierReport("lipschitz", "ok", n_pairs, L, max_ratio, slack)


def verify_monotonicity(s, n_pairs=500, seed=0, slack=1e-9):
    """Sample full-power profile pairs and check strong monotonicity
    Re tr((F - F')^H (Q - Q')) >= (1 - sr(S^s)) ||Q - Q'||_F^2.

    The bound is stated on the full-power boundary and only certifies a
    unique equilibrium when sr(S^s) < 1; above that the check is skipped.
    """
    S = interference_matrix_square(s)
    sr_sym, _, _ = spectral_radius(0.5 * (S.S + S.S.T))
    mu = 1.0 - float(sr_sym)
    if mu <= 0.0:
        return VerifierReport(
            "monotonicity", "skipped", 0, mu, float("nan"), slack,
            notes=f"sr(S^s) = {sr_sym:.6g} >= 1: bound gives no certificate",
        )
    rng = np.random.default_rng(seed)
    min_margin = float("inf")
    for i in range(n_pairs):
        pa = random_profile(s, rng, boundary=True)
        pb = random_profile(s, rng, boundary=True)
        fa = qvi_map(s, pa)
        fb = qvi_map(s, pb)
        inner = sum(
            float(np.trace((x - y).conj().T @ (a - b)).real)
            for x, y, a, b in zip(fa, fb, pa, pb)
        )
        dist2 = _profile_frob(pa, pb) ** 2
        margin = inner - mu * dist2
        min_margin = min(min_margin, margin)
        if margin < -slack:
            return VerifierReport(
                "monotonicity", "violation", i + 1, mu, margin, slack,
                witness=_witness(i, pa, pb),
            )
    return VerifierReport("monotonicity", "ok", n_pairs, mu, min_margin, slack)


def verify_power_set_smoothness(s, n_triples=500, seed=0, slack=1e-9):
    """Check that projections onto full-power sets move at most as fast as
    the powers: per player ||[Y]_{tr=p} - [Y]_{tr=p'}||_F <= |p - p'| and
    in aggregate the Euclidean norm of the power difference."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_triples):
        ys = [
            random_hermitian(int(s.ranks[q]), rng, scale=max(1.0, float(s.P[q])))
            for q in range(s.Q)
        ]
        pa = rng.uniform(0.0, s.P)
        pb = rng.uniform(0.0, s.P)
        dists = np.empty(s.Q)
        for q in range(s.Q):
            proj_a = psd_trace_projection(ys[q], pa[q])
            proj_b = psd_trace_projection(ys[q], pb[q])
            dists[q] = np.linalg.norm(proj_a - proj_b, "fro")
            if dists[q] > abs(pa[q] - pb[q]) + slack:
                return VerifierReport(
                    "power-set-smoothness", "violation", i + 1, 1.0,
                    float(dists[q] / max(abs(pa[q] - pb[q]), 1e-300)), slack,
                    witness={"triple_index": i, "player": q,
                             "p_a": float(pa[q]), "p_b": float(pb[q])},
                )
        total = float(np.linalg.norm(dists))
        bound = float(np.linalg.norm(pa - pb))
        if total > bound + slack:
            return VerifierReport(
                "power-set-smoothness", "violation", i + 1, 1.0,
                total / max(bound, 1e-300), slack,
                witness={"triple_index": i, "p_a": pa.tolist(), "p_b": pb.tolist()},
            )
        if bound > 1e-12:
            worst = max(worst, total / bound)
    return VerifierReport("power-set-smoothness", "ok", n_triples, 1.0, worst, slack)


def estimate_power_smoothness(s, cfg=None, weights=None):
    """Sampled lower bound on the Lipschitz modulus of the optimal-power map.

    Draws profile pairs (half independent, half small perturbations of one
    another), computes the clipped Dinkelbach powers, and reports the
    largest observed ||p(Q) - p(Q')|| / ||Q - Q'|| in the Euclidean/Frobenius
    metric and in the Perron-weighted max/block-max metric. Pairs on which
    Dinkelbach fails to converge are skipped and counted.
    """
    cfg = cfg or PowerSmoothnessConfig()
    if weights is None:
        S = interference_matrix_square(s)
        _, weights, _ = spectral_radius(S.S)
    w = np.maximum(np.asarray(weights, dtype=float), W_FLOOR)
    rng = np.random.default_rng(cfg.seed)
    max_l2 = 0.0
    max_winf = 0.0
    used = 0
    skipped = 0

    def powers_of(profile):
        vals = np.empty(s.Q)
        for q in range(s.Q):
            p_u, _ = dinkelbach_power(s, q, profile, cfg.dinkelbach)
            vals[q] = min(float(s.P[q]), p_u)
        return vals

    for i in range(cfg.n_pairs):
        pa = random_profile(s, rng)
        if i % 2 == 0:
            pb = random_profile(s, rng)
        else:
            ref = random_profile(s, rng)
            t = cfg.perturbation
            pb = StrategyProfile([
                (1.0 - t) * a + t * b for a, b in zip(pa, ref)
            ])
        den_f = _profile_frob(pa, pb)
        den_w = max(
            float(np.linalg.norm(a - b, "fro")) / w[q]
            for q, (a, b) in enumerate(zip(pa, pb))
        )
        if den_f <= 1e-12 or den_w <= 1e-12:
            continue
        try:
            va = powers_of(pa)
            vb = powers_of(pb)
        except ConvergenceError:
            skipped += 1
            continue
        used += 1
        max_l2 = max(max_l2, float(np.linalg.norm(va - vb)) / den_f)
        max_winf = max(max_winf, float(np.max(np.abs(va - vb) / w)) / den_w)
    return PowerSmoothnessEstimate(max_l2, max_winf, used, skipped)


# --- the sqrt(Q) identity-channel construction ------------------------------

def identity_channel_scenario(Q, n=2, noise=1.0, power=None, circuit_power=1.0):
    """Scenario in which every channel matrix is the n x n identity."""
    from .model import scenario_from_matrices

    p = float(power) if power is not None else float(n)
    H = [[np.eye(n, dtype=complex) for _ in range(Q)] for _ in range(Q)]
    Rn = [noise * np.eye(n) for _ in range(Q)]
    return scenario_from_matrices(
        H, Rn, [p] * Q, [circuit_power] * Q, meta={"identity_channels": True},
    )


def sqrtq_observed_ratio(s, player=0, seed=0):
    """||F(Q) - F(Q')||_F / ||Q - Q'||_F for a single-player perturbation.

    With identity channels the numerator collapses to sqrt(Q) times the
    denominator exactly, which pins the best possible Lipschitz constant of
    the QVI mapping from below.
    """
    rng = np.random.default_rng(seed)
    pa = random_profile(s, rng, boundary=True)
    pb = pa.replace(player, random_covariance(
        int(s.ranks[player]), s.P[player], rng, boundary=True
    ))
    num = _mats_frob(qvi_map(s, pa), qvi_map(s, pb))
    den = _profile_frob(pa, pb)
    return num / den
