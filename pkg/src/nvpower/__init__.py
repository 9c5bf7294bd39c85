"""Input-power sensitivity of NV-diamond RF detectors with CPW and loop concentrators."""
__version__ = "0.1.0"

from .core import (Beam, DetectorModel, NoiseModel, NVEnsemble, Optics, Protocol, ProtocolKind,  # noqa: E402
                   Regime, SensitivityResult, eta_ensemble, eta_single, pl_density)
from .errors import ConfigError, DomainError, GeometryError, NumericalError, ResolutionError  # noqa: E402
