"""Bath spectral densities and thermal factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("ohmic_lorentz_sq", "ohmic_exp")


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic coupling density with a Lorentzian-squared or exponential cutoff.

    ohmic_lorentz_sq: J(w) = eta * w / (1 + w^2/w_c^2)^2
    ohmic_exp:        J(w) = eta * (w/pi) * exp(-w/w_c)
    """

    kind: str
    eta: float
    omega_c: float

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral density kind {self.kind!r}")
        if self.omega_c <= 0:
            raise ValueError("cutoff must be positive")

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.kind == "ohmic_lorentz_sq":
            out = self.eta * w / (1.0 + (w / self.omega_c) ** 2) ** 2
        else:
            out = self.eta * (w / np.pi) * np.exp(-w / self.omega_c)
        return out if out.ndim else float(out)

    @property
    def slope_at_zero(self) -> float:
        """dJ/dw at w = 0; sets the zero-frequency limit of thermal rates."""
        return self.eta if self.kind == "ohmic_lorentz_sq" else self.eta / np.pi


def thermal_occupation(beta: float, omega) -> np.ndarray | float:
    """Bose occupation 1/(exp(beta*omega) - 1) for omega > 0."""
    w = np.asarray(omega, dtype=float)
    out = 1.0 / np.expm1(beta * w)
    return out if out.ndim else float(out)


def thermal_weight(beta: float, omega) -> np.ndarray | float:
    """2 n(beta, omega) + 1 = coth(beta*omega/2); saturates to 1 for large omega."""
    w = np.asarray(omega, dtype=float)
    out = 1.0 / np.tanh(beta * w / 2.0)
    return out if out.ndim else float(out)
