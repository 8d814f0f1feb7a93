# /backend/app/core/config.py

"""
Módulo de Configuración Central de la Aplicación.

Utiliza Pydantic para cargar, validar y gestionar las variables de entorno
de forma segura y tipada. Este archivo define el "contrato" de todas las
configuraciones que el simulador espera (rutas de fixtures y de salida,
semilla por defecto, paralelismo), sirviendo como única fuente de verdad.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
import os
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Directorio 'backend/', punto de referencia para las rutas relativas.
BACKEND_DIR = Path(__file__).resolve().parents[2]

# ==============================================================================
# SECCIÓN 2: DEFINICIÓN DE LA CLASE DE CONFIGURACIÓN
# ==============================================================================

class Settings(BaseSettings):
    """
    Define y valida todas las variables de entorno que la aplicación necesita.
    """

    # --- Configuración General de la Aplicación ---
    ENV: str = Field("development", description="Entorno de ejecución.")
    PROJECT_NAME: str = Field("ChannelDance Sim", description="Nombre del proyecto.")
    PROJECT_VERSION: str = Field("1.0.0", description="Versión del proyecto.")
    API_V1_PREFIX: str = Field("/api/v1", description="Prefijo para la API v1.")

    # --- Rutas de Datos ---
    FIXTURES_DIR: Path = Field(BACKEND_DIR / "fixtures", description="Directorio de fixtures empaquetados.")
    OUTPUT_DIR: Path = Field(Path("out"), description="Directorio por defecto para los reportes.")

    # --- Simulación ---
    DEFAULT_SEED: int = Field(20240601, ge=0, description="Semilla usada cuando el escenario no define una.")
    MAX_WORKERS: int = Field(0, ge=0, description="Procesos para celdas independientes (0 = núm. de CPUs, 1 = en proceso).")

    # --- Observabilidad ---
    LOG_LEVEL: str = Field("INFO", description="Nivel del logger raíz.")

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = str(v).upper().strip()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"LOG_LEVEL '{v}' no es un nivel de logging válido.")
        return level

    def resolved_workers(self) -> int:
        """Número efectivo de procesos para ejecutar celdas en paralelo."""
        return self.MAX_WORKERS or (os.cpu_count() or 1)

    # --- Configuración del comportamiento de pydantic-settings ---
    model_config = SettingsConfigDict(
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8"
    )

# ==============================================================================
# SECCIÓN 3: INSTANCIA GLOBAL DE LA CONFIGURACIÓN
# ==============================================================================

settings = Settings()


def configure_logging(level: str | None = None) -> None:
    """Configura el logger raíz con el formato común de los puntos de entrada."""
    logging.basicConfig(
        level=level or settings.LOG_LEVEL,
        format='%(levelname)s:     %(message)s',
    )
