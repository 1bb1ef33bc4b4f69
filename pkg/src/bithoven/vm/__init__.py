"""Reference interpreter and script machine."""

from .context import ExecContext, ExecResult, cast_to_bool, load_oracle
from .interpreter import RuntimeTypeFault, Value, exec_bithoven
from .machine import exec_script
from .scriptnum import ScriptNumError, num_decode, num_encode

__all__ = [
    "ExecContext",
    "ExecResult",
    "RuntimeTypeFault",
    "ScriptNumError",
    "Value",
    "cast_to_bool",
    "exec_bithoven",
    "exec_script",
    "load_oracle",
    "num_decode",
    "num_encode",
]
