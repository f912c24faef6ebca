# physics/models.py
"""
Data models shared by the renewal, quantum, classical and theory layers.

All models are plain dataclasses. Array-valued fields are numpy arrays and are
treated as read-only once a model is constructed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.special import gamma

from physics.errors import DomainError


# Complex momentum-basis amplitudes, stored in FFT order (see RotatorConfig.levels)
QuantumState = NDArray[np.complex128]


class WaitingKind(str, Enum):
    """Waiting-time law of the renewal process."""
    DETERMINISTIC_UNIT = "deterministic_unit"   # every kick perturbed
    YULE_SIMON = "yule_simon"                   # power-law tail, exponent 1+alpha


@dataclass(frozen=True)
class WaitingTimeDist:
    """Integer waiting-time distribution between noise events."""
    kind: WaitingKind
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind == WaitingKind.YULE_SIMON:
            if self.alpha is None or not self.alpha > 0:
                raise DomainError(f"Yule-Simon requires alpha > 0, got {self.alpha}")

    @classmethod
    def deterministic_unit(cls) -> "WaitingTimeDist":
        return cls(WaitingKind.DETERMINISTIC_UNIT)

    @classmethod
    def yule_simon(cls, alpha: float) -> "WaitingTimeDist":
        return cls(WaitingKind.YULE_SIMON, float(alpha))

    @classmethod
    def from_alpha(cls, alpha: Optional[float]) -> "WaitingTimeDist":
        """None selects the deterministic unit law."""
        return cls.deterministic_unit() if alpha is None else cls.yule_simon(alpha)

    @property
    def tail_constant_c(self) -> float:
        """c in omega(tau) ~ c tau^(-1-alpha); c = alpha Gamma(alpha+1)."""
        if self.kind == WaitingKind.DETERMINISTIC_UNIT:
            return 0.0
        return self.alpha * gamma(self.alpha + 1.0)

    @property
    def mean_waiting_time(self) -> float:
        if self.kind == WaitingKind.DETERMINISTIC_UNIT:
            return 1.0
        if self.alpha <= 1.0:
            return math.inf
        return self.alpha / (self.alpha - 1.0)

    @property
    def is_stationary(self) -> bool:
        """Asymptotically stationary noise (finite mean waiting time)."""
        return math.isfinite(self.mean_waiting_time)

    @property
    def label(self) -> str:
        if self.kind == WaitingKind.DETERMINISTIC_UNIT:
            return "deterministic"
        return f"yule_simon(alpha={self.alpha:g})"


@dataclass(frozen=True, eq=False)
class NoiseTimeline:
    """
    Noise-event times of one renewal realization.

    Kicks are numbered 1..horizon_T. The count N(t', t'') is the number of
    events at kicks t'' < n <= t', i.e. the events acting between the state
    after t'' kicks and the state after t' kicks.
    """
    horizon_T: int
    event_times: NDArray[np.int64]
    seed_tag: str = ""

    def count(self, t_prime: int, t_dprime: int = 0) -> int:
        if t_dprime > t_prime:
            raise DomainError(f"t''={t_dprime} exceeds t'={t_prime}")
        lo = np.searchsorted(self.event_times, t_dprime, side="right")
        hi = np.searchsorted(self.event_times, t_prime, side="right")
        return int(hi - lo)

    def event_mask(self) -> NDArray[np.bool_]:
        """Boolean array over kicks 0..T (index 0 unused)."""
        mask = np.zeros(self.horizon_T + 1, dtype=bool)
        mask[self.event_times] = True
        return mask


@dataclass(frozen=True, eq=False)
class RenewalSeries:
    """Counting statistics of the inverse random time on t = 0..T."""
    dist: WaitingTimeDist
    horizon_T: int
    sprinkling_f: NDArray[np.float64]        # f[0] = 0 by convention
    mean_count_Nbar: NDArray[np.float64]
    mgf_values: Dict[float, NDArray[np.float64]] = field(default_factory=dict)


@dataclass(frozen=True)
class RotatorConfig:
    """
    Kicked-rotator parameters on the finite Hilbert space of dimension N.

    hbar = 2 pi M / N. Momentum levels l cover [-N/2, N/2) and are stored in
    FFT order (0, 1, ..., -1) so the angle representation is one FFT away.
    """
    K: float = 7.5
    M: int = 577
    N: int = 13872

    PRESETS = {
        "full": (577, 13872),
        "fast": (24, 577),
    }

    def __post_init__(self):
        if self.M < 1 or self.N < 2:
            raise DomainError(f"invalid (M, N) = ({self.M}, {self.N})")
        if (self.M * self.N) % 2:
            raise DomainError("M*N must be even for a momentum-periodic free rotation")

    @classmethod
    def preset(cls, name: str, K: float = 7.5) -> "RotatorConfig":
        try:
            M, N = cls.PRESETS[name]
        except KeyError:
            raise DomainError(f"unknown preset {name!r}; choose from {sorted(cls.PRESETS)}") from None
        return cls(K=K, M=M, N=N)

    @property
    def hbar(self) -> float:
        return 2.0 * math.pi * self.M / self.N

    @property
    def levels(self) -> NDArray[np.int64]:
        return np.rint(np.fft.fftfreq(self.N, d=1.0 / self.N)).astype(np.int64)

    @property
    def momenta(self) -> NDArray[np.float64]:
        return self.hbar * self.levels

    @property
    def angle_grid(self) -> NDArray[np.float64]:
        return 2.0 * math.pi * np.arange(self.N) / self.N

    @property
    def centered_order(self) -> NDArray[np.int64]:
        """Index permutation taking FFT order to increasing momentum."""
        return np.argsort(self.levels, kind="stable")

    def level_index(self, level: int) -> int:
        """Array index of momentum level l."""
        lo, hi = -(self.N // 2), self.N - self.N // 2
        if not lo <= level < hi:
            raise DomainError(f"level {level} outside [{lo}, {hi})")
        return level % self.N


@dataclass(frozen=True)
class NoiseParams:
    """Box-distributed kick detunings on (-W, W) applied at renewal events."""
    W: float
    dist: WaitingTimeDist

    def __post_init__(self):
        if self.W < 0:
            raise DomainError(f"W must be nonnegative, got {self.W}")

    @classmethod
    def from_kappa(cls, kappa: float, dist: WaitingTimeDist) -> "NoiseParams":
        if kappa < 0:
            raise DomainError(f"kappa must be nonnegative, got {kappa}")
        return cls(W=math.sqrt(3.0 * kappa), dist=dist)

    @property
    def kappa(self) -> float:
        return self.W ** 2 / 3.0


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """One timeline plus one uniform(-W, W) detuning per event."""
    timeline: NoiseTimeline
    detunings: NDArray[np.float64]

    def __post_init__(self):
        if self.detunings.shape != self.timeline.event_times.shape:
            raise DomainError("exactly one detuning per event time is required")


@dataclass
class ObservableSeries:
    """Ensemble observables; kick_* arrays cover every kick 0..t_max."""
    times: NDArray[np.int64]
    var_p: NDArray[np.float64]
    ipr: NDArray[np.float64]
    purity: NDArray[np.float64]
    purity_se: NDArray[np.float64]
    log_fidelity: NDArray[np.float64]
    log_fidelity_se: NDArray[np.float64]
    kick_var_p: NDArray[np.float64]
    kick_ipr: NDArray[np.float64]
    kick_mean_p: NDArray[np.float64]
    kick_mean_p_se: NDArray[np.float64]
    snapshots: Dict[int, NDArray[np.float64]] = field(default_factory=dict)
    realizations: int = 0
    skipped_fidelity_pairs: int = 0


@dataclass
class ClassicalEnsemble:
    """Standard-map particles; thetas stay in [0, 2 pi)."""
    thetas: NDArray[np.float64]
    momenta: NDArray[np.float64]

    @property
    def size(self) -> int:
        return int(self.momenta.size)


class Profile(str, Enum):
    """Momentum-distribution shape."""
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class TheoryParams:
    """Inputs of the analytic predictions; t_star and t_c are derived."""
    D_star: float
    hbar: float
    kappa: float
    dist: WaitingTimeDist

    def __post_init__(self):
        if self.D_star <= 0 or self.hbar <= 0:
            raise DomainError("D_star and hbar must be positive")
        if self.kappa < 0:
            raise DomainError("kappa must be nonnegative")

    @property
    def t_star(self) -> float:
        return self.D_star / self.hbar ** 2

    @property
    def t_c(self) -> float:
        return math.inf if self.kappa == 0 else 2.0 * self.hbar ** 2 / self.kappa

    @property
    def xi(self) -> float:
        return self.t_star / 2.0

    @property
    def p_star(self) -> float:
        return self.D_star / self.hbar

    @property
    def t_c_eff(self) -> float:
        """Decoherence time of stationary noise: mean waiting time times t_c."""
        return self.dist.mean_waiting_time * self.t_c

    @property
    def weak_noise(self) -> bool:
        return self.t_c > 10.0 * self.t_star

    @property
    def profile(self) -> Profile:
        """Profile used for the IPR term: Gaussian for stationary noise."""
        return Profile.GAUSSIAN if self.dist.is_stationary else Profile.EXPONENTIAL


@dataclass
class TheorySeries:
    times: NDArray[np.int64]
    var_p_pred: NDArray[np.float64]
    decoherence_D: NDArray[np.float64]
    ipr_pred: NDArray[np.float64]
    purity_pred: NDArray[np.float64]
    logfid_pred: NDArray[np.float64]
    ml_gap: Optional[float] = None
