# /backend/app/models/shared.py

"""
Utilidades y Tipos de Datos Compartidos para los Modelos Pydantic.

Este archivo centraliza los tipos reutilizados por varios módulos del
proyecto, en particular las palabras binarias de ancho fijo (access address,
CRC init, contadores) que en los archivos JSON se escriben como cadenas
hexadecimales ("0x8E89BED6") y en memoria se manejan como enteros.
"""

# ==============================================================================
# SECCIÓN 1: IMPORTACIONES
# ==============================================================================

from typing import Any, ClassVar

from pydantic import GetCoreSchemaHandler
from pydantic_core import CoreSchema, core_schema

# ==============================================================================
# SECCIÓN 2: TIPO BASE PARA PALABRAS BINARIAS
# ==============================================================================

class HexWord(int):
    """
    Entero sin signo de ancho fijo con integración completa en Pydantic V2.

    - Validación: acepta un entero o una cadena hexadecimal (con o sin '0x').
      El valor debe caber en `BITS` bits.
    - Serialización: en modo JSON se emite como cadena hexadecimal con el
      ancho completo, lo que mantiene los reportes legibles y estables.
    """

    BITS: ClassVar[int] = 32

    @classmethod
    def __get_pydantic_core_schema__(
        cls,
        source_type: Any,
        handler: GetCoreSchemaHandler,
    ) -> CoreSchema:
        """
        Define el esquema central que Pydantic utiliza para este tipo.
        """
        bits = cls.BITS
        digits = (bits + 3) // 4

        def validate_range(value: int) -> int:
            if not 0 <= value < (1 << bits):
                raise ValueError(f"{value:#x} no cabe en {bits} bits")
            return int(value)

        def validate_from_str(value: str) -> int:
            """Convierte una cadena hexadecimal al entero correspondiente."""
            try:
                parsed = int(value, 16)
            except ValueError as error:
                raise ValueError(f"'{value}' no es una cadena hexadecimal válida") from error
            return validate_range(parsed)

        from_str_schema = core_schema.chain_schema(
            [
                core_schema.str_schema(),
                core_schema.no_info_plain_validator_function(validate_from_str),
            ]
        )
        from_int_schema = core_schema.chain_schema(
            [
                core_schema.int_schema(strict=True),
                core_schema.no_info_plain_validator_function(validate_range),
            ]
        )

        return core_schema.union_schema(
            [from_int_schema, from_str_schema],
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda instance: f"0x{int(instance):0{digits}X}",
                when_used="json",
            ),
        )


class Hex32(HexWord):
    """Palabra de 32 bits (access address)."""
    BITS: ClassVar[int] = 32


class Hex24(HexWord):
    """Palabra de 24 bits (CRC init, CRC-24)."""
    BITS: ClassVar[int] = 24


class Hex16(HexWord):
    """Palabra de 16 bits (contadores de evento y de paquete)."""
    BITS: ClassVar[int] = 16
