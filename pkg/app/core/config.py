from pydantic import field_validator
from pydantic_settings import BaseSettings
from functools import lru_cache

class Settings(BaseSettings):
    # Aplicación
    APP_NAME: str = "csma-lab"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    # Protocolo
    G_ALPHA: float = 4.0

    # Límites de instancia
    MAX_ENUMERATION_NODES: int = 20
    MAX_CHAIN_NODES: int = 6
    MAX_CONDUCTANCE_STATES: int = 20

    # Simulador
    DEFAULT_RECORD_EVERY: int = 100
    RNG_CHUNK_SLOTS: int = 65536
    LIPSCHITZ_THRESHOLD: float = 100.0
    LIPSCHITZ_CHECK: bool = True

    # Clasificación de estabilidad
    STABLE_SLOPE: float = 0.01
    UNSTABLE_SLOPE: float = 0.05
    MIN_CLASSIFIER_ROWS: int = 10_000

    # Estimación de deriva
    DRIFT_MAX_HORIZON: int = 200_000

    # Numérico
    MATRIX_TOLERANCE: float = 1e-12
    LP_TOLERANCE: float = 1e-9

    @field_validator('G_ALPHA')
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        if v <= 2:
            raise ValueError('G_ALPHA must be greater than 2')
        return v

    class Config:
        env_file = ".env"
        case_sensitive = True

@lru_cache()
def get_settings():
    return Settings()

settings = get_settings()
