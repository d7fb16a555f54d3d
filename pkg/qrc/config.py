"""
Configuration models for algorithms, simulation and ingestion
"""

from itertools import product
from pathlib import Path
from typing import Dict, List, Optional
import os

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# ======================
# Algorithm Parameters
# ======================

def _unit():
    return Field(default=0.0, ge=0.0, le=1.0)


class QRParams(BaseModel):
    """Exponents and mean penalties of the QR algorithm"""
    model_config = ConfigDict(frozen=True)

    theta_q: float = _unit()
    theta_r: float = _unit()
    rho_q: float = _unit()
    rho_r: float = _unit()

    def as_tuple(self):
        return (self.theta_q, self.theta_r, self.rho_q, self.rho_r)

    def label(self) -> str:
        for name, preset in PRESETS.items():
            if preset == self:
                return name
        return "QR(%g,%g,%g,%g)" % self.as_tuple()


class QRCParams(BaseModel):
    """QR parameters plus the author-credit coupling"""
    model_config = ConfigDict(frozen=True)

    qr: QRParams = Field(default_factory=QRParams)
    phi_a: float = _unit()
    phi_p: float = _unit()
    rho_a: float = _unit()
    lam: float = _unit()


class ConvergenceConfig(BaseModel):
    """Stopping rule of the fixed-point iterations"""
    model_config = ConfigDict(frozen=True)

    tolerance: float = Field(default=1e-8, gt=0.0)
    max_iterations: int = Field(default=10_000, ge=1)


BIHITS = QRParams()
QR1 = QRParams(theta_r=1.0)
QR2 = QRParams(theta_r=1.0, rho_q=1.0)

PRESETS: Dict[str, QRParams] = {"biHITS": BIHITS, "QR1": QR1, "QR2": QR2}

# QRC operating point on real data: QR1 base, credit accumulated over papers,
# averaged over co-authors
QRC_DEFAULT = QRCParams(qr=QR1, phi_a=0.0, phi_p=1.0, rho_a=0.0, lam=0.57)


def binary_qr_grid() -> List[QRParams]:
    """All 16 settings with every QR parameter in {0, 1}"""
    return [
        QRParams(theta_q=tq, theta_r=tr, rho_q=rq, rho_r=rr)
        for tq, tr, rq, rr in product((0.0, 1.0), repeat=4)
    ]

# ======================
# Simulation & Ingestion
# ======================

class SimConfig(BaseModel):
    """Agent-based model settings (defaults reproduce the benchmark setup)"""
    model_config = ConfigDict(frozen=True)

    n_users: int = Field(default=1000, ge=0)
    mu: float = Field(default=0.5, gt=0.0, le=1.0)
    x_max: float = Field(default=0.5, ge=0.0, le=1.0)
    h: float = Field(default=5.0, gt=0.0)
    p_upload: float = Field(default=0.1, ge=0.0, le=1.0)
    steps: int = Field(default=200, ge=0)
    w_up: float = Field(default=1.0, gt=0.0)
    w_down: float = Field(default=0.1, gt=0.0)
    downloads_per_step: int = Field(default=2, ge=0)
    seed: int = 0

    @property
    def xi(self) -> float:
        """Download to upload weight ratio; QR results depend only on it"""
        return self.w_down / self.w_up


class WeightScheme(BaseModel):
    """Link weight per interaction type"""
    model_config = ConfigDict(frozen=True)

    w_up: float = Field(default=1.0, gt=0.0)
    w_down: float = Field(default=0.1, gt=0.0)
    w_view: float = Field(default=0.05, gt=0.0)

# ======================
# Runtime Settings
# ======================

class RuntimeSettings(BaseModel):
    """Process-level settings read from QRC_* environment variables"""
    log_level: str = Field(default="INFO")
    log_file: Optional[Path] = None
    workers: int = Field(default=1, ge=1)
    tolerance: float = Field(default=1e-8, gt=0.0)
    max_iterations: int = Field(default=10_000, ge=1)

    def convergence(self) -> ConvergenceConfig:
        return ConvergenceConfig(tolerance=self.tolerance, max_iterations=self.max_iterations)


ENV_PREFIX = "QRC_"


def load_settings(env_file: Optional[str] = None) -> RuntimeSettings:
    """Load settings from the environment, after an optional .env file"""
    load_dotenv(env_file, override=False)

    values = {}
    for name in RuntimeSettings.model_fields:
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw not in (None, ""):
            values[name] = raw
    return RuntimeSettings(**values)
