# /backend/app/repositories/base_repository.py

"""
Define la Clase Base para los Repositorios de Fixtures de la Aplicación.

Los fixtures (modelos de canal, perfiles de latencia, perfiles de PER y
configuraciones de escenario) son documentos JSON agrupados por colección en
subdirectorios de `settings.FIXTURES_DIR`. `FixtureRepository` los carga y los
valida contra un modelo de Pydantic, de modo que cualquier escenario puede
referirse a ellos por nombre.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import json
from pathlib import Path
from typing import Any, Dict, Generic, List, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.core.config import settings
from app.core.exceptions import ScenarioConfigError

# ==============================================================================
# SECCIÓN 2: DEFINICIÓN DE TIPOS GENÉRICOS
# ==============================================================================

ModelType = TypeVar("ModelType", bound=BaseModel)

# ==============================================================================
# SECCIÓN 3: CLASE BASE DEL REPOSITORIO
# ==============================================================================

class FixtureRepository(Generic[ModelType]):
    """Repositorio de solo lectura sobre una colección de fixtures JSON."""

    def __init__(self, collection: str, model: Type[ModelType], root: Optional[Path] = None):
        """
        Args:
            collection: Subdirectorio de fixtures (ej. 'channel_models').
            model: Modelo de Pydantic que valida cada documento.
            root: Raíz alternativa; por defecto `settings.FIXTURES_DIR`.
        """
        self.directory: Path = Path(root or settings.FIXTURES_DIR) / collection
        self.collection = collection
        self.model: Type[ModelType] = model

    def path_for(self, name: str) -> Path:
        return self.directory / f"{name}.json"

    def list_names(self) -> List[str]:
        """Nombres disponibles en orden alfabético."""
        if not self.directory.is_dir():
            return []
        return sorted(path.stem for path in self.directory.glob("*.json"))

    def find_raw(self, name: str) -> Dict[str, Any]:
        path = self.path_for(name)
        if not path.is_file():
            raise ScenarioConfigError(
                f"No existe el fixture '{name}' en '{self.collection}'. Disponibles: {', '.join(self.list_names()) or 'ninguno'}."
            )
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as error:
            raise ScenarioConfigError(f"El fixture '{path.name}' no es JSON válido: {error}") from error

    def find_one(self, name: str) -> ModelType:
        """Carga y valida el fixture `name`."""
        try:
            return self.model.model_validate(self.find_raw(name))
        except ValidationError as error:
            raise ScenarioConfigError(f"El fixture '{name}' de '{self.collection}' es inválido: {error}") from error
