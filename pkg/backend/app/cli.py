# /backend/app/cli.py

"""
Punto de entrada de línea de comandos (`channeldance`).

    channeldance list-scenarios
    channeldance run <config.json> [--seed N] [--assert] [--out-dir DIR]

Códigos de salida: 0 éxito; 1 criterio de aceptación fallido (--assert);
2 error de configuración o de uso.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import configure_logging
from app.core.exceptions import AcceptanceError, DomainError, ScenarioConfigError
from app.modules.scenarios import scenario_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2

# ==============================================================================
# SECCIÓN 2: PARSER
# ==============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channeldance",
        description="Simulador de backscatter BLE con seguimiento del salto de canal.",
    )
    parser.add_argument("--log-level", default=None, help="Nivel de logging (por defecto LOG_LEVEL).")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Ejecuta un escenario desde su archivo JSON.")
    run.add_argument("config", type=Path, help="Archivo de escenario o nombre de un fixture empaquetado.")
    run.add_argument("--seed", type=int, default=None, help="Reemplaza la semilla del escenario.")
    run.add_argument("--assert", dest="check", action="store_true",
                     help="Falla con código 1 si algún criterio de aceptación no se cumple.")
    run.add_argument("--out-dir", type=Path, default=None, help="Directorio de salida de los reportes.")

    commands.add_parser("list-scenarios", help="Lista los tipos de escenario registrados.")
    return parser

# ==============================================================================
# SECCIÓN 3: COMANDOS
# ==============================================================================

def _list_scenarios() -> int:
    for info in scenario_service.list_scenarios():
        print(f"{info.kind:<14} {info.description} [{info.fixture}.json]")
    return EXIT_OK


def _run(config_path: Path, seed: Optional[int], check: bool, out_dir: Optional[Path]) -> int:
    try:
        config = scenario_service.load_config(config_path)
        result = scenario_service.run_scenario(config, seed=seed, out_dir=out_dir)
    except (ScenarioConfigError, DomainError) as error:
        logger.error(str(error))
        return EXIT_CONFIG

    for path in result.outputs:
        print(path)
    for item in result.checks:
        print(f"[{'OK' if item.passed else 'FALLA'}] {item.name} {item.detail}".rstrip())

    if check:
        try:
            scenario_service.assert_acceptance(result)
        except AcceptanceError as error:
            logger.error(str(error))
            return EXIT_ACCEPTANCE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return EXIT_OK if error.code == 0 else EXIT_CONFIG
    configure_logging(args.log_level.upper() if args.log_level else None)

    if args.command == "list-scenarios":
        return _list_scenarios()
    return _run(args.config, args.seed, args.check, args.out_dir)


if __name__ == "__main__":
    sys.exit(main())
