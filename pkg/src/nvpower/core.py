"""Sensitivity formula chain: single NV, ensemble, PL saturation, figures of merit.

All quantities are SI.  Slope detection has ``kappa_prot = 1`` and a power
sensitivity in W/Hz; variance detection has ``kappa_prot = 2`` and W/Hz^(1/2).
"""
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DomainError

MU0 = 4e-7 * math.pi
GAMMA_E = 28e9  # Hz/T

SATURATED_BELOW = 0.1
LINEAR_ABOVE = 10.0


class ProtocolKind(enum.Enum):
    SLOPE = "slope"
    VARIANCE = "variance"


class Regime(enum.Enum):
    SATURATED = "saturated"
    INTERMEDIATE = "intermediate"
    LINEAR = "linear"


class Beam(enum.Enum):
    PARALLEL_CPW = "parallel"
    PERPENDICULAR_CPW = "perpendicular"
    LOOP_AXIAL = "loop"


def _positive(name, value):
    if not (value > 0) or math.isnan(value):
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


@dataclass(frozen=True)
class Protocol:
    kind: ProtocolKind
    beta_prot: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        _positive("beta_prot", self.beta_prot)

    @property
    def kappa_prot(self) -> int:
        return 1 if self.kind is ProtocolKind.SLOPE else 2

    @property
    def unit(self) -> str:
        return "W/Hz" if self.kind is ProtocolKind.SLOPE else "W/Hz^0.5"


@dataclass(frozen=True)
class NoiseModel:
    kappa_noise: float = 0.5
    xi_noise: float = 1.0

    def __post_init__(self):
        if self.kappa_noise not in (0.0, 0.5):
            raise DomainError(f"kappa_noise must be 0 or 0.5, got {self.kappa_noise!r}")
        if not self.xi_noise >= 1.0:
            raise DomainError(f"xi_noise must be >= 1, got {self.xi_noise!r}")
        object.__setattr__(self, "kappa_noise", float(self.kappa_noise))


@dataclass(frozen=True)
class Optics:
    """Laser power, saturation intensity and the beam cross-section on the probe."""
    p_laser: float
    i_sat: float
    beam_area: float
    path_length: Optional[float] = None
    beam: Beam = Beam.PARALLEL_CPW

    def __post_init__(self):
        _positive("p_laser", self.p_laser)
        _positive("i_sat", self.i_sat)
        _positive("beam_area", self.beam_area)
        if self.path_length is not None:
            _positive("path_length", self.path_length)
        object.__setattr__(self, "beam", Beam(self.beam))

    @property
    def saturation_parameter(self) -> float:
        """A * I_sat / P_laser; 1 at half saturation."""
        return self.beam_area * self.i_sat / self.p_laser

    @property
    def regime(self) -> Regime:
        return classify_regime(self.saturation_parameter)


@dataclass(frozen=True)
class NVEnsemble:
    rho_nv: float
    sigma_nv: float

    def __post_init__(self):
        _positive("rho_nv", self.rho_nv)
        _positive("sigma_nv", self.sigma_nv)


def sigma_nv_from_parts(emission_rate=1e7, duty_cycle=0.1, collection=0.1):
    """Collected PL rate per NV at saturation as emission x duty cycle x collection."""
    for name, v in (("emission_rate", emission_rate), ("duty_cycle", duty_cycle),
                    ("collection", collection)):
        _positive(name, v)
    if duty_cycle > 1 or collection > 1:
        raise DomainError("duty_cycle and collection are fractions in (0, 1]")
    return emission_rate * duty_cycle * collection


@dataclass(frozen=True)
class DetectorModel:
    protocol: Protocol
    noise: NoiseModel
    ensemble: NVEnsemble
    p_laser: float
    i_sat: float

    def __post_init__(self):
        _positive("p_laser", self.p_laser)
        _positive("i_sat", self.i_sat)


@dataclass(frozen=True)
class SensitivityResult:
    eta: float
    kappa_prot: int
    regime: Optional[Regime] = None
    avg_alpha_pow: Optional[float] = None
    volume: Optional[float] = None
    rho_pl: Optional[float] = None
    i_pl: Optional[float] = None
    zeta: Optional[float] = None

    @property
    def unit(self) -> str:
        return "W/Hz" if self.kappa_prot == 1 else "W/Hz^0.5"


def classify_regime(saturation_parameter) -> Regime:
    if saturation_parameter < SATURATED_BELOW:
        return Regime.SATURATED
    if saturation_parameter > LINEAR_ABOVE:
        return Regime.LINEAR
    return Regime.INTERMEDIATE


def pl_density(ensemble: NVEnsemble, optics: Optics, limit=None) -> float:
    """PL rate per unit volume from the optical saturation law.

    ``limit`` selects an asymptotic form instead: ``"saturated"`` gives
    sigma*rho, ``"linear"`` gives sigma*rho*P/(A*I_sat).
    """
    full = ensemble.sigma_nv * ensemble.rho_nv
    s = optics.saturation_parameter
    if limit is None:
        return full / (1.0 + s)
    if limit in ("saturated", Regime.SATURATED):
        return full
    if limit in ("linear", Regime.LINEAR):
        return full / s
    raise DomainError(f"unknown limit {limit!r}")


def snr_single(alpha, protocol: Protocol, noise: NoiseModel, i_pl, time, p_rf) -> float:
    _positive("alpha", alpha)
    _positive("i_pl", i_pl)
    _positive("time", time)
    if p_rf == 0:
        return 0.0
    _positive("p_rf", p_rf)
    kp = protocol.kappa_prot
    return ((alpha * protocol.beta_prot) ** kp / noise.xi_noise
            * i_pl ** (1.0 - noise.kappa_noise) * math.sqrt(time) * p_rf ** (kp / 2.0))


def eta_single(alpha, protocol: Protocol, noise: NoiseModel, i_pl) -> SensitivityResult:
    """Minimum detectable power of one NV (SNR of one, time-normalised)."""
    _positive("alpha", alpha)
    _positive("i_pl", i_pl)
    kp = protocol.kappa_prot
    base = noise.xi_noise / ((alpha * protocol.beta_prot) ** kp * i_pl ** (1.0 - noise.kappa_noise))
    return SensitivityResult(eta=base ** (2.0 / kp), kappa_prot=kp,
                             avg_alpha_pow=alpha ** kp, i_pl=i_pl)


def eta_ensemble(avg_alpha_pow, protocol: Protocol, noise: NoiseModel, rho_pl, volume,
                 regime=None, zeta=None) -> SensitivityResult:
    _positive("avg_alpha_pow", avg_alpha_pow)
    _positive("rho_pl", rho_pl)
    _positive("volume", volume)
    kp = protocol.kappa_prot
    i_pl = rho_pl * volume
    base = noise.xi_noise / (avg_alpha_pow * protocol.beta_prot ** kp
                             * i_pl ** (1.0 - noise.kappa_noise))
    return SensitivityResult(eta=base ** (2.0 / kp), kappa_prot=kp, regime=regime,
                             avg_alpha_pow=avg_alpha_pow, volume=volume, rho_pl=rho_pl,
                             i_pl=i_pl, zeta=zeta)


def fom_sat(avg_alpha_pow, volume, kappa_noise) -> float:
    _positive("avg_alpha_pow", avg_alpha_pow)
    _positive("volume", volume)
    return avg_alpha_pow * volume ** (1.0 - kappa_noise)


def fom_lin(avg_alpha_pow, volume, beam_area, kappa_noise) -> float:
    _positive("avg_alpha_pow", avg_alpha_pow)
    _positive("volume", volume)
    _positive("beam_area", beam_area)
    return avg_alpha_pow * (volume / beam_area) ** (1.0 - kappa_noise)


@dataclass(frozen=True)
class FomCheck:
    spread: float
    mixed_regimes: bool


def eta_from_fom_check(eta_list: Sequence, fom_list: Sequence[float], kappa_prot,
                       regimes: Optional[Sequence] = None) -> FomCheck:
    """Spread max/min of eta * FoM^(2/kappa_prot); 1 when eta is proportional to FoM^(-2/kp).

    ``eta_list`` may hold floats or :class:`SensitivityResult`; in the latter
    case regimes are read from the results unless given explicitly.
    """
    if len(eta_list) != len(fom_list) or len(eta_list) == 0:
        raise DomainError("eta_list and fom_list must be non-empty and of equal length")
    etas = []
    found = []
    for e in eta_list:
        if isinstance(e, SensitivityResult):
            etas.append(e.eta)
            found.append(e.regime)
        else:
            etas.append(float(e))
            found.append(None)
    if regimes is None:
        regimes = found
    products = [e * f ** (2.0 / kappa_prot) for e, f in zip(etas, fom_list)]
    spread = max(products) / min(products) if len(products) > 1 else 1.0
    known = {Regime(r) for r in regimes if r is not None}
    return FomCheck(spread=spread, mixed_regimes=len(known) > 1)


def beta_from_protocol(c_max, tau) -> float:
    """Field-to-contrast ratio of a slope-detection sequence, C_max * gamma_e * tau."""
    if not 0.0 <= c_max <= 1.0:
        raise DomainError(f"c_max must lie in [0, 1], got {c_max!r}")
    _positive("tau", tau)
    return c_max * GAMMA_E * tau


def magnetic_from_power(eta: SensitivityResult, alpha_ref) -> float:
    """Magnetic sensitivity: alpha*sqrt(eta) in T/Hz^0.5 (slope), alpha^2*eta in T^2/Hz^0.5 (variance)."""
    _positive("alpha_ref", alpha_ref)
    _positive("eta", eta.eta)
    if eta.kappa_prot == 1:
        return alpha_ref * math.sqrt(eta.eta)
    return alpha_ref ** 2 * eta.eta


def magnetic_unit(kappa_prot) -> str:
    return "T/Hz^0.5" if kappa_prot == 1 else "T^2/Hz^0.5"
