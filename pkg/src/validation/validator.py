from typing import Any, Dict, List, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from src.errors import ValidationFailure
from src.observability import record_error

Row = TypeVar("Row", bound=BaseModel)

# Dead letter queue of rejected rows
REJECTED_ROWS: List[Dict[str, Any]] = []


def _offending_value(payload: Dict[str, Any], loc: tuple) -> Any:
    if loc and loc[0] in payload:
        return payload[loc[0]]
    return None


def validate_row(schema: Type[Row], payload: Dict[str, Any], path: Optional[str] = None, line: Optional[int] = None) -> Row:
    """
    Parse one row against its schema.

    On failure the row goes to the dead letter queue and a ValidationFailure
    naming file, line, field and offending value is raised.
    """
    try:
        return schema.model_validate(payload)
    except ValidationError as e:
        errors = [f"{'.'.join(str(x) for x in err['loc']) or 'row'}: {err['msg']}" for err in e.errors()]
        REJECTED_ROWS.append({"path": path, "line": line, "payload": payload, "errors": errors})
        record_error("row_rejected", {"path": path, "line": line, "errors": errors})
        first = e.errors()[0]
        raise ValidationFailure("; ".join(errors), path=path, line=line, value=_offending_value(payload, first["loc"])) from None


def get_rejected_rows() -> List[Dict[str, Any]]:
    return REJECTED_ROWS


def clear_rejected_rows() -> None:
    REJECTED_ROWS.clear()
