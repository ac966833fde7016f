"""Network scenarios and the interference game they induce.

Random channel generation at a target SNR/SIR, rank reduction of the direct
channels to a full-column-rank game, and the per-player interference-plus-
noise covariance, achievable rate and energy efficiency. Scenario objects
are immutable after construction; all evaluators are pure functions.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .linalg import as_complex_matrix, check_hermitian, compact_svd, hermitize

SNR_CONVENTIONS = ("per-stream", "total-power")
CHANNEL_KINDS = ("full", "diagonal")


def _freeze(a):
    a.flags.writeable = False
    return a


@dataclass
class NetworkScenario:
    """Q transmitter-receiver pairs over flat MIMO interference channels.

    ``H[q][r]`` is the nR[q] x nT[r] channel from transmitter r to receiver
    q, ``Rn[q]`` the positive-definite noise covariance at receiver q,
    ``P[q]`` the power budget and ``Psi[q]`` the circuit power of player q.
    """

    Q: int
    nT: np.ndarray
    nR: np.ndarray
    H: list
    Rn: list
    P: np.ndarray
    Psi: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.Q < 1:
            raise InvalidInputError("need at least one player")
        self.nT = np.asarray(self.nT, dtype=int)
        self.nR = np.asarray(self.nR, dtype=int)
        self.P = _freeze(np.asarray(self.P, dtype=float).copy())
        self.Psi = _freeze(np.asarray(self.Psi, dtype=float).copy())
        for name, arr in (("nT", self.nT), ("nR", self.nR)):
            if arr.shape != (self.Q,) or np.any(arr < 1):
                raise InvalidInputError(f"{name} must hold Q positive antenna counts")
        if self.P.shape != (self.Q,) or np.any(self.P <= 0):
            raise InvalidInputError("power budgets P must be positive")
        if self.Psi.shape != (self.Q,) or np.any(self.Psi <= 0):
            raise InvalidInputError("circuit powers Psi must be positive")
        if len(self.H) != self.Q or any(len(row) != self.Q for row in self.H):
            raise InvalidInputError("H must be a Q x Q table of matrices")
        self.H = [
            [
                _freeze(as_complex_matrix(self.H[q][r]).copy())
                for r in range(self.Q)
            ]
            for q in range(self.Q)
        ]
        for q in range(self.Q):
            for r in range(self.Q):
                want = (self.nR[q], self.nT[r])
                if self.H[q][r].shape != want:
                    raise InvalidInputError(
                        f"H[{q}][{r}] has shape {self.H[q][r].shape}, expected {want}"
                    )
        self.Rn = [
            _freeze(check_hermitian(self.Rn[q]).copy()) for q in range(self.Q)
        ]
        for q in range(self.Q):
            if self.Rn[q].shape != (self.nR[q], self.nR[q]):
                raise InvalidInputError(f"Rn[{q}] has the wrong shape")
            if np.linalg.eigvalsh(hermitize(self.Rn[q])).min() <= 0:
                raise InvalidInputError(f"Rn[{q}] is not positive definite")


def scenario_from_matrices(H, Rn, P, Psi, seed=None, meta=None):
    """Build a scenario from explicit matrices, inferring antenna counts."""
    Q = len(H)
    nR = [np.asarray(H[q][q]).shape[0] for q in range(Q)]
    nT = [np.asarray(H[q][q]).shape[1] for q in range(Q)]
    return NetworkScenario(
        Q=Q, nT=nT, nR=nR, H=H, Rn=Rn, P=P, Psi=Psi, seed=seed,
        meta=dict(meta or {}),
    )


def _channel_rng(seed, q, r):
    # Per-(q, r) stream from one master seed: matrices are reproducible and
    # unchanged by varying Q (up to the variance scale factor).
    return np.random.default_rng(np.random.SeedSequence((seed, q, r)))


def generate_scenario(Q, n, snr_db, sir_db, seed, power=None, circuit_power=1.0,
                      channel_kind="full", snr_convention="per-stream"):
    """Draw a random scenario at a target SNR/SIR.

    Direct-channel entries are i.i.d. circularly-symmetric complex Gaussian
    with unit variance; cross-channel entries have variance
    1 / ((Q-1) * SIR_linear) so the aggregate interference hits the target
    SIR. The noise level sets the per-stream SNR under uniform allocation,
    sigma_n^2 = (P/n) / SNR_linear (pass ``snr_convention="total-power"``
    for sigma_n^2 = P / SNR_linear instead).

    Parameters
    ----------
    Q, n : int
        Player count and antenna count (nT = nR = n for generated scenarios).
    snr_db, sir_db : float
        Targets in dB; ``sir_db = inf`` zeroes the cross channels.
    seed : int
        Master seed; every (q, r) channel gets its own derived stream.
    power, circuit_power : float
        Budget P (defaults to n, i.e. unit power per antenna) and circuit
        power Psi, shared by all players.
    channel_kind : "full" | "diagonal"
        "diagonal" draws diagonal channel matrices (parallel subchannels).
    """
    if Q < 1 or n < 1:
        raise InvalidInputError("Q and n must be >= 1")
    if seed is None or int(seed) < 0:
        raise InvalidInputError("seed must be a nonnegative integer")
    if channel_kind not in CHANNEL_KINDS:
        raise InvalidInputError(f"channel_kind must be one of {CHANNEL_KINDS}")
    if snr_convention not in SNR_CONVENTIONS:
        raise InvalidInputError(f"snr_convention must be one of {SNR_CONVENTIONS}")
    seed = int(seed)
    p = float(power) if power is not None else float(n)
    psi = float(circuit_power)
    snr_lin = 10.0 ** (float(snr_db) / 10.0)
    sigma_n2 = (p / n) / snr_lin if snr_convention == "per-stream" else p / snr_lin

    meta = {
        "snr_db": float(snr_db),
        "sir_db": float(sir_db),
        "snr_convention": snr_convention,
        "channel_kind": channel_kind,
    }
    sir_lin = 10.0 ** (float(sir_db) / 10.0)
    if Q == 1:
        if np.isfinite(sir_db):
            warnings.warn("single-player scenario: sir_db has no effect")
            meta["sir_ignored"] = True
        cross_var = 0.0
    else:
        cross_var = 1.0 / ((Q - 1) * sir_lin)

    H = []
    for q in range(Q):
        row = []
        for r in range(Q):
            var = 1.0 if r == q else cross_var
            rng = _channel_rng(seed, q, r)
            if channel_kind == "diagonal":
                h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                M = np.diag(np.sqrt(var / 2.0) * h)
            else:
                Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                M = np.sqrt(var / 2.0) * Z
            row.append(M)
        H.append(row)
    Rn = [sigma_n2 * np.eye(n) for _ in range(Q)]
    return NetworkScenario(
        Q=Q, nT=[n] * Q, nR=[n] * Q, H=H, Rn=Rn,
        P=[p] * Q, Psi=[psi] * Q, seed=seed, meta=meta,
    )


@dataclass
class ReducedScenario:
    """The full-column-rank game obtained by dropping the direct channels'
    null directions: Hbar[q][r] = H[q][r] @ V1[r], with V1[q] the right
    factor of the compact SVD of H[q][q] and ranks[q] its rank."""

    Q: int
    ranks: np.ndarray
    Hbar: list
    V1: list
    Rn: list
    P: np.ndarray
    Psi: np.ndarray
    meta: dict = field(default_factory=dict)


def reduce_scenario(s):
    """Reduce a scenario to its full-column-rank equivalent game.

    Raises if any player's direct channel is zero (such a player cannot
    communicate at all).
    """
    V1 = []
    ranks = []
    for q in range(s.Q):
        _, _, v1, r = compact_svd(s.H[q][q])
        if r == 0:
            raise InvalidInputError(f"player {q} has a zero direct channel")
        V1.append(_freeze(v1.copy()))
        ranks.append(r)
    Hbar = [
        [_freeze(s.H[q][r] @ V1[r]) for r in range(s.Q)]
        for q in range(s.Q)
    ]
    return ReducedScenario(
        Q=s.Q, ranks=np.asarray(ranks, dtype=int), Hbar=Hbar, V1=V1,
        Rn=s.Rn, P=s.P, Psi=s.Psi, meta=dict(s.meta),
    )


class StrategyProfile:
    """The per-player transmit covariances of the reduced game."""

    def __init__(self, mats):
        self.mats = [np.asarray(m, dtype=complex) for m in mats]

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, q):
        return self.mats[q]

    def __iter__(self):
        return iter(self.mats)

    def copy(self):
        return StrategyProfile([m.copy() for m in self.mats])

    def replace(self, q, mat):
        mats = list(self.mats)
        mats[q] = np.asarray(mat, dtype=complex)
        return StrategyProfile(mats)

    def traces(self):
        return np.array([float(np.trace(m).real) for m in self.mats])

    @classmethod
    def uniform(cls, s, fraction=1.0):
        """Uniform allocation Qbar_q = (fraction * P_q / r_q) I."""
        return cls([
            (fraction * s.P[q] / s.ranks[q]) * np.eye(s.ranks[q])
            for q in range(s.Q)
        ])

    @classmethod
    def zeros(cls, s):
        return cls([np.zeros((r, r), dtype=complex) for r in s.ranks])

    def validate(self, s, tol=1e-10):
        """Check PSD (up to an eigenvalue floor) and the trace budgets."""
        if len(self.mats) != s.Q:
            raise InvalidInputError("profile size does not match the scenario")
        for q, m in enumerate(self.mats):
            if m.shape != (s.ranks[q], s.ranks[q]):
                raise InvalidInputError(f"Qbar[{q}] has the wrong shape")
            check_hermitian(m)
            lo = float(np.linalg.eigvalsh(hermitize(m)).min())
            if lo < -tol * max(1.0, float(np.abs(m).max())):
                raise InvalidInputError(f"Qbar[{q}] is not PSD (min eig {lo:.3e})")
            tr = float(np.trace(m).real)
            if tr > s.P[q] + tol:
                raise InvalidInputError(
                    f"Qbar[{q}] exceeds the power budget: {tr} > {s.P[q]}"
                )
        return self


def mui_covariance(s, q, profile):
    """Interference-plus-noise covariance at receiver q."""
    R = np.array(s.Rn[q], dtype=complex)
    for r in range(s.Q):
        if r == q:
            continue
        Hqr = s.Hbar[q][r]
        R += Hqr @ profile[r] @ Hqr.conj().T
    return hermitize(R)


def whitened_gram(s, q, profile):
    """Gram matrix of player q's direct channel whitened by the MUI.

    Returns Hbar_qq^H R^{-1} Hbar_qq, positive definite whenever the
    reduced direct channel has full column rank.
    """
    R = mui_covariance(s, q, profile)
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise InvalidInputError(
            f"MUI covariance of player {q} is numerically singular"
        ) from None
    X = np.linalg.solve(L, s.Hbar[q][q])
    return hermitize(X.conj().T @ X)


def rate(s, q, profile):
    """Achievable rate of player q in nats, treating interference as noise.

    log det(I + G Qbar) evaluated through the eigenvalues of the symmetrized
    product G^(1/2) Qbar G^(1/2).
    """
    G = whitened_gram(s, q, profile)
    d, U = np.linalg.eigh(G)
    Ghalf = (U * np.sqrt(np.maximum(d, 0.0))) @ U.conj().T
    M = hermitize(Ghalf @ profile[q] @ Ghalf)
    lam = np.linalg.eigvalsh(M)
    return float(np.log1p(np.maximum(lam, 0.0)).sum())


def energy_efficiency(s, q, profile):
    """Rate per unit of consumed power (circuit plus radiated), nats/power."""
    tr = float(np.trace(profile[q]).real)
    return rate(s, q, profile) / (float(s.Psi[q]) + tr)


# --- scenario file format -------------------------------------------------
#
# JSON with complex entries as [re, im] pairs. Python's json module emits
# shortest round-trip decimal representations, so write/read is bit-exact.

def _complex_to_lists(A):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A, dtype=complex)]


def _lists_to_complex(L):
    return np.array([[complex(e[0], e[1]) for e in row] for row in L], dtype=complex)


def scenario_to_dict(s):
    return {
        "Q": int(s.Q),
        "nT": [int(x) for x in s.nT],
        "nR": [int(x) for x in s.nR],
        "H": [[_complex_to_lists(s.H[q][r]) for r in range(s.Q)] for q in range(s.Q)],
        "Rn": [_complex_to_lists(s.Rn[q]) for q in range(s.Q)],
        "P": [float(x) for x in s.P],
        "Psi": [float(x) for x in s.Psi],
        "seed": None if s.seed is None else int(s.seed),
        "meta": s.meta,
    }


def scenario_from_dict(d):
    try:
        H = [[_lists_to_complex(d["H"][q][r]) for r in range(d["Q"])] for q in range(d["Q"])]
        Rn = [_lists_to_complex(R) for R in d["Rn"]]
        return NetworkScenario(
            Q=d["Q"], nT=d["nT"], nR=d["nR"], H=H, Rn=Rn,
            P=d["P"], Psi=d["Psi"], seed=d.get("seed"), meta=d.get("meta", {}),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidInputError(f"malformed scenario document: {exc}") from None


def save_scenario(s, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(s), fh, indent=1)
        fh.write("\n")


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
