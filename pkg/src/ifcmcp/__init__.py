"""IFC building-model toolkit with an MCP tool server.

Layers, bottom up: STEP file kernel (:mod:`ifcmcp.step`,
:mod:`ifcmcp.guid`), typed model graph (:mod:`ifcmcp.model`), parametric
geometry (:mod:`ifcmcp.geometry`, :mod:`ifcmcp.skeleton`), element
builders (:mod:`ifcmcp.builders`), read-only scene context
(:mod:`ifcmcp.scene`, :mod:`ifcmcp.snapshot`), the query DSL
(:mod:`ifcmcp.dsl`), lexical retrieval (:mod:`ifcmcp.knowledge`), and the
JSON-RPC service (:mod:`ifcmcp.service`) driven by :mod:`ifcmcp.cli`.
"""

from .guid import guid_decode, guid_encode
from .model import IfcModel, load_model, new_model, open_model
from .step import parse_step, write_step

__version__ = "0.1.0"

__all__ = [
    "IfcModel",
    "guid_decode",
    "guid_encode",
    "load_model",
    "new_model",
    "open_model",
    "parse_step",
    "write_step",
    "__version__",
]
