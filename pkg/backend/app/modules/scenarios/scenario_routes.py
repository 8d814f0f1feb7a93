# /backend/app/modules/scenarios/scenario_routes.py

"""
Define los endpoints de la API para el módulo de Escenarios.

Replica la CLI: listar los tipos registrados y validar + ejecutar una
configuración, devolviendo el resumen JSON sin escribir archivos.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from typing import Any, Dict, List, Optional

from fastapi import APIRouter, Body, HTTPException, Query, status

from app.core.exceptions import DomainError, ScenarioConfigError, UnknownScenarioError
from . import scenario_service
from .scenario_models import ScenarioInfo, ScenarioResult

# ==============================================================================
# SECCIÓN 2: CONFIGURACIÓN DEL ROUTER
# ==============================================================================

router = APIRouter(
    prefix="/scenarios",
    tags=["Escenarios"]
)

# ==============================================================================
# SECCIÓN 3: ENDPOINTS DE LA API
# ==============================================================================

@router.get(
    "",
    response_model=List[ScenarioInfo],
    summary="Listar los tipos de escenario registrados",
)
def list_scenarios_route():
    return scenario_service.list_scenarios()


@router.post(
    "/run",
    response_model=ScenarioResult,
    summary="Validar y ejecutar una configuración de escenario",
    responses={
        404: {"description": "El tipo de escenario no está registrado."},
        422: {"description": "La configuración es inválida o viola una precondición del dominio."},
    },
)
def run_scenario_route(
    config: Dict[str, Any] = Body(..., description="Documento JSON del escenario."),
    seed: Optional[int] = Query(None, ge=0, description="Reemplaza la semilla del escenario."),
):
    """
    Ejecuta el escenario en el proceso del servidor. Los criterios de
    aceptación se evalúan y se devuelven en `checks`, pero no provocan error.
    """
    try:
        parsed = scenario_service.parse_config(config)
        return scenario_service.run_scenario(parsed, seed=seed, write=False)
    except UnknownScenarioError as error:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(error))
    except (ScenarioConfigError, DomainError) as error:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(error))
