# /backend/app/main.py

"""
Punto de Entrada Principal de la Aplicación FastAPI.

Expone el simulador como servicio HTTP:
- Configura el logging con el formato común de los puntos de entrada.
- Precalcula en el arranque la tabla de estados de reloj del tag.
- Registra el router principal de la API con un prefijo versionado.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api import api_router
from app.core.config import configure_logging, settings
from app.modules.scenarios import scenario_service
from app.modules.tag_core.clock_service import build_clock_table

# ==============================================================================
# SECCIÓN 2: CICLO DE VIDA DE LA APLICACIÓN (LIFESPAN)
# ==============================================================================

@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("--- Iniciando el servicio de simulación ---")
    table = build_clock_table()
    logger.info(f"Tabla de reloj lista: {len(table.states)} estados.")
    logger.info(f"Fixtures en '{settings.FIXTURES_DIR}'.")
    yield
    logger.info("--- Servicio de simulación detenido ---")

# ==============================================================================
# SECCIÓN 3: CONFIGURACIÓN DE LA APLICACIÓN
# ==============================================================================

configure_logging()
logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.PROJECT_NAME,
    version=settings.PROJECT_VERSION,
    description="API del simulador de backscatter BLE con salto de canal.",
    lifespan=lifespan,
    docs_url="/api/docs" if settings.ENV == "development" else None,
    redoc_url="/api/redoc" if settings.ENV == "development" else None,
    openapi_url=f"{settings.API_V1_PREFIX}/openapi.json",
)

# ==============================================================================
# SECCIÓN 4: REGISTRO DE RUTAS DE LA API
# ==============================================================================

app.include_router(api_router, prefix=settings.API_V1_PREFIX)

# ==============================================================================
# SECCIÓN 5: ENDPOINTS GLOBALES (RAÍZ Y VERIFICACIÓN DE SALUD)
# ==============================================================================

@app.get("/", tags=["Sistema"], include_in_schema=False)
async def read_root():
    return {"message": f"Bienvenido a la API de {settings.PROJECT_NAME} v{settings.PROJECT_VERSION}."}


@app.get("/health", tags=["Sistema"], summary="Verifica la salud del servicio")
async def health_check():
    """Informa el estado del servicio y la cantidad de tipos de escenario registrados."""
    return {
        "status": "healthy",
        "services": {
            "scenarios": len(scenario_service.list_scenarios()),
            "clock_states": len(build_clock_table().states),
        },
    }
