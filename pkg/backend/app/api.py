# /backend/app/api.py

"""
Concentrador Principal de Rutas de la API (API Router Hub).

Importa los routers de cada módulo y los une bajo un único `APIRouter`.
El prefijo global '/api/v1' se aplica en `main.py`.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES DE ROUTERS
# ==============================================================================

from fastapi import APIRouter

from app.modules.scenarios import scenario_routes as scenarios_router

# ==============================================================================
# SECCIÓN 2: ENSAMBLAJE DEL ROUTER PRINCIPAL
# ==============================================================================

api_router = APIRouter()

# --- Simulación ---
api_router.include_router(scenarios_router.router)
