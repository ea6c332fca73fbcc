"""MCP server core: tool registry, argument validation, JSON-RPC dispatch.

Transport is newline-delimited JSON-RPC 2.0 over stdio (or a local TCP
listener for test harnesses). Tool failures are reported in-band via
``isError`` results so a client LLM can read them and try again;
protocol-level errors (-32700/-32601/-32602) are reserved for malformed
traffic.
"""

from __future__ import annotations

import json
import os
import socketserver
import sys
from dataclasses import dataclass, field
from typing import Callable

import jsonschema

from . import builders, dsl, model as model_mod, scene, snapshot
from .errors import DuplicateName, IfcError, InvalidParams
from .geometry import TriMesh
from .knowledge import KnowledgeIndex, index_corpus
from .model import IfcModel, PropertySpec

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "ifcmcp"
SERVER_VERSION = "0.1.0"

GROUPS = ("query", "create", "edit", "knowledge", "snapshot")
GROUP_SHORTHAND = {"q": "query", "c": "create", "e": "edit",
                   "k": "knowledge", "s": "snapshot"}

CORPUS_ENV_VAR = "IFC_MCP_CORPUS"

_POINT2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POINT2_OR_3 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}
_POINT3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_GUID = {"type": "string", "minLength": 22, "maxLength": 22}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}


def _schema(properties: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": properties, "required": required}


@dataclass
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict
    group: str
    handler: Callable
    read_only: bool = False
    destructive: bool = False

    def wire_format(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema,
            "annotations": {
                "readOnlyHint": self.read_only,
                "destructiveHint": self.destructive,
            },
        }


def validate_args(schema: dict, args) -> list[dict]:
    """Schema violations as (json-pointer path, message) pairs; no coercion."""
    validator = jsonschema.Draft202012Validator(schema)
    violations = []
    for error in validator.iter_errors(args):
        path = "/" + "/".join(str(p) for p in error.absolute_path)
        violations.append({"path": path, "message": error.message})
    violations.sort(key=lambda v: (v["path"], v["message"]))
    return violations


@dataclass
class Session:
    """One client connection: one model, strictly serial tool calls."""

    model: IfcModel
    groups: tuple[str, ...] = GROUPS
    knowledge: KnowledgeIndex | None = None
    session_id: str = "local"
    call_count: int = 0
    tools: dict[str, ToolDescriptor] = field(default_factory=dict)
    tool_order: list[str] = field(default_factory=list)

    def __post_init__(self):
        for descriptor in build_registry(self):
            if descriptor.name in self.tools:
                raise DuplicateName(f"duplicate tool name {descriptor.name!r}")
            self.tools[descriptor.name] = descriptor
        self.tool_order = [d.name for d in sorted(
            self.tools.values(), key=lambda d: (GROUPS.index(d.group), d.name))]

    def require_knowledge(self) -> KnowledgeIndex:
        if self.knowledge is None:
            corpus = os.environ.get(CORPUS_ENV_VAR)
            if corpus:
                self.knowledge = index_corpus(corpus)
            else:
                raise InvalidParams(
                    f"no knowledge index loaded; set {CORPUS_ENV_VAR} or run "
                    "the index command"
                )
        return self.knowledge


def build_registry(session: Session) -> list[ToolDescriptor]:
    m = session.model
    tools: list[ToolDescriptor] = []

    def tool(name, description, properties, required, group, handler,
             read_only=False, destructive=False):
        if group not in session.groups:
            return
        tools.append(ToolDescriptor(
            name, description, _schema(properties, required), group, handler,
            read_only=read_only, destructive=destructive,
        ))

    # --- query ---
    tool(
        "get_scene_info",
        "List scene objects (spatial containers, building elements and type "
        "objects) with name, type, location, visibility and GUID. Paginated.",
        {"offset": {"type": "integer", "minimum": 0},
         "limit": {"type": "integer", "minimum": 1}},
        [],
        "query",
        lambda args: scene.get_scene_info(m, args.get("offset", 0),
                                          args.get("limit", scene.DEFAULT_PAGE_LIMIT)),
        read_only=True,
    )
    tool(
        "get_object_info",
        "Full record of one object by GUID: class, placement, bounding box, "
        "property sets, classifications and relationships.",
        {"guid": _GUID}, ["guid"],
        "query",
        lambda args: scene.get_object_info(m, args["guid"]),
        read_only=True,
    )
    tool(
        "get_ifc_scene_overview",
        "Aggregate model statistics: per-class counts, storeys with "
        "elevations, total floor area and overall bounding box.",
        {}, [],
        "query",
        lambda args: scene.get_ifc_scene_overview(m),
        read_only=True,
    )
    tool(
        "get_door_properties",
        "Dimensions, sill height and host wall of a door by GUID.",
        {"guid": _GUID}, ["guid"],
        "query",
        lambda args: scene.get_door_properties(m, args["guid"]),
        read_only=True,
    )
    tool(
        "execute_ifc_query",
        "Run a query pipeline over the model, e.g. 'walls | count', "
        "'slabs | sum(area)', 'walls | filter(height > 3) | list(name)' or "
        "a batch mutation such as 'walls | rename(\"Wall-{height}m\")'.",
        {"query": {"type": "string", "maxLength": dsl.MAX_QUERY_BYTES}},
        ["query"],
        "query",
        lambda args: _run_query(session, args["query"]),
        read_only=False,
    )

    # --- create ---
    tool(
        "create_wall",
        "Create a wall from start/end points (metres), height and thickness. "
        "Returns the new GUID.",
        {"start": _POINT2_OR_3, "end": _POINT2_OR_3, "height": _POSITIVE,
         "thickness": _POSITIVE, "storey": _GUID, "name": {"type": "string"}},
        ["start", "end", "height", "thickness"],
        "create",
        lambda args: {"guid": builders.create_wall(
            m, args["start"][:2], args["end"][:2], args["height"],
            args["thickness"], storey=args.get("storey"), name=args.get("name"))},
    )
    tool(
        "create_wall_chain",
        "Create a chain of walls through a list of points; set close=true "
        "to add the closing segment. Returns the GUIDs in order.",
        {"points": {"type": "array", "items": _POINT2_OR_3, "minItems": 2},
         "height": _POSITIVE, "thickness": _POSITIVE,
         "close": {"type": "boolean"}, "storey": _GUID},
        ["points", "height", "thickness"],
        "create",
        lambda args: _guids_payload(builders.create_wall_chain(
            m, [p[:2] for p in args["points"]], args["height"],
            args["thickness"], close=args.get("close", False),
            storey=args.get("storey"))),
    )
    tool(
        "create_slab",
        "Create a floor slab from a closed polygon outline; the top face "
        "sits at the given elevation and the slab extrudes downward.",
        {"outline": {"type": "array", "items": _POINT2_OR_3, "minItems": 3},
         "thickness": _POSITIVE, "elevation": {"type": "number"},
         "name": {"type": "string"}},
        ["outline", "thickness"],
        "create",
        lambda args: {"guid": builders.create_slab(
            m, [p[:2] for p in args["outline"]], args["thickness"],
            elevation=args.get("elevation", 0.0), name=args.get("name"))},
    )
    tool(
        "create_roof",
        "Create a roof over a 2D outline. Styles: hip (straight-skeleton), "
        "gable (rectangular outlines) or flat.",
        {"outline": {"type": "array", "items": _POINT2_OR_3, "minItems": 3},
         "style": {"type": "string", "enum": ["hip", "gable", "flat"]},
         "slope_deg": {"type": "number", "minimum": 5, "maximum": 85},
         "base_z": {"type": "number"}, "name": {"type": "string"}},
        ["outline"],
        "create",
        lambda args: _roof_payload(builders.create_roof(
            m, [p[:2] for p in args["outline"]], style=args.get("style", "hip"),
            slope_deg=args.get("slope_deg", 30.0),
            base_z=args.get("base_z", 0.0), name=args.get("name"))),
    )
    tool(
        "create_roof_over_walls",
        "Create a roof on top of a closed circuit of walls; the outline is "
        "reconstructed from the wall axes and the base sits on the tallest wall.",
        {"wall_guids": {"type": "array", "items": _GUID, "minItems": 3},
         "style": {"type": "string", "enum": ["hip", "gable", "flat"]},
         "slope_deg": {"type": "number", "minimum": 5, "maximum": 85}},
        ["wall_guids"],
        "create",
        lambda args: _roof_payload(builders.create_roof_over_walls(
            m, args["wall_guids"], style=args.get("style", "hip"),
            slope_deg=args.get("slope_deg", 30.0))),
    )
    tool(
        "create_door",
        "Insert a door into a wall. Give wall_guid plus position_along_axis, "
        "or just a position point to pick the nearest wall. Defaults 0.9 x 2.1 m.",
        {"wall_guid": _GUID, "position": _POINT2_OR_3,
         "position_along_axis": {"type": "number", "minimum": 0},
         "width": _POSITIVE, "height": _POSITIVE, "name": {"type": "string"}},
        [],
        "create",
        lambda args: _filled_payload("door", builders.create_door(
            m, wall_guid=args.get("wall_guid"), position=args.get("position"),
            position_along_axis=args.get("position_along_axis"),
            width=args.get("width", builders.DOOR_WIDTH),
            height=args.get("height", builders.DOOR_HEIGHT),
            name=args.get("name"))),
    )
    tool(
        "create_window",
        "Insert a window into a wall; sill_height sets the bottom of the "
        "opening. Defaults 1.2 x 1.4 m with a 0.9 m sill.",
        {"wall_guid": _GUID, "position": _POINT2_OR_3,
         "position_along_axis": {"type": "number", "minimum": 0},
         "width": _POSITIVE, "height": _POSITIVE,
         "sill_height": {"type": "number", "minimum": 0},
         "name": {"type": "string"}},
        [],
        "create",
        lambda args: _filled_payload("window", builders.create_window(
            m, wall_guid=args.get("wall_guid"), position=args.get("position"),
            position_along_axis=args.get("position_along_axis"),
            width=args.get("width", builders.WINDOW_WIDTH),
            height=args.get("height", builders.WINDOW_HEIGHT),
            sill_height=args.get("sill_height", builders.WINDOW_SILL),
            name=args.get("name"))),
    )
    tool(
        "create_stairs",
        "Create a straight stair flight from an origin point: total rise and "
        "run are split into equal steps of the given count.",
        {"origin": _POINT3, "direction_deg": {"type": "number"},
         "total_rise": _POSITIVE, "total_run": _POSITIVE,
         "step_count": {"type": "integer", "minimum": 2}, "width": _POSITIVE,
         "name": {"type": "string"}},
        ["origin", "total_rise", "total_run", "step_count", "width"],
        "create",
        lambda args: {"guid": builders.create_stairs(
            m, args["origin"], args.get("direction_deg", 0.0),
            args["total_rise"], args["total_run"], args["step_count"],
            args["width"], name=args.get("name"))},
    )
    tool(
        "create_mesh_element",
        "Create an element from a triangle mesh (vertices in metres, faces "
        "as vertex-index triples). The IFC class must come from the allowed set.",
        {"ifc_class": {"type": "string"},
         "vertices": {"type": "array", "items": _POINT3, "minItems": 3},
         "faces": {"type": "array", "minItems": 1,
                   "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                             "minItems": 3, "maxItems": 3}},
         "name": {"type": "string"}, "storey": _GUID},
        ["ifc_class", "vertices", "faces", "name"],
        "create",
        lambda args: {"guid": builders.create_mesh_element(
            m, args["ifc_class"], TriMesh(args["vertices"], args["faces"]),
            args["name"], storey=args.get("storey"))},
    )

    # --- edit ---
    tool(
        "edit_attributes",
        "Edit direct attributes (Name, Description, ObjectType, LongName, "
        "Tag) of an element by GUID. Returns old/new pairs.",
        {"guid": _GUID,
         "updates": {"type": "object",
                     "additionalProperties": {"type": ["string", "number", "boolean", "null"]}}},
        ["guid", "updates"],
        "edit",
        lambda args: {"guid": args["guid"], "changed": model_mod.edit_attributes(
            m, args["guid"], dict(args["updates"]))},
    )
    tool(
        "add_property_set",
        "Attach a named property set to an element; merges into an existing "
        "set of the same name. Values are scalars (string, number, boolean).",
        {"guid": _GUID, "pset_name": {"type": "string", "minLength": 1},
         "properties": {"type": "object",
                        "additionalProperties": {"type": ["string", "number", "boolean"]},
                        "minProperties": 1}},
        ["guid", "pset_name", "properties"],
        "edit",
        lambda args: {"pset_guid": model_mod.add_property_set(
            m, args["guid"], PropertySpec(
                args["pset_name"],
                [(k, v, None) for k, v in args["properties"].items()]))},
    )
    tool(
        "add_classification",
        "Classify an element under a classification system code, e.g. "
        "Uniclass 2015 Ss_25_10_20.",
        {"guid": _GUID, "system": {"type": "string", "minLength": 1},
         "code": {"type": "string", "minLength": 1}},
        ["guid", "system", "code"],
        "edit",
        lambda args: {"association_guid": model_mod.add_classification(
            m, args["guid"], args["system"], args["code"])},
    )
    tool(
        "delete_element",
        "Delete a building element and everything only it owns (placement, "
        "geometry, openings, fillings). Spatial containers cannot be deleted.",
        {"guid": _GUID}, ["guid"],
        "edit",
        lambda args: {"removed": model_mod.delete_element(m, args["guid"])},
        destructive=True,
    )
    tool(
        "set_owner_history",
        "Attach an owner history (user plus unix timestamp) to the listed "
        "elements; all-or-nothing on unknown GUIDs.",
        {"guids": {"type": "array", "items": _GUID},
         "user": {"type": "string", "minLength": 1},
         "timestamp": {"type": "integer"}},
        ["guids", "user", "timestamp"],
        "edit",
        lambda args: {"updated": model_mod.set_owner_history(
            m, args["guids"], args["user"], args["timestamp"])},
    )

    # --- knowledge ---
    tool(
        "search_ifc_knowledge",
        "Search the local IFC/BIM documentation store; returns the top-k "
        "chunks ranked lexically.",
        {"query": {"type": "string", "minLength": 1},
         "k": {"type": "integer", "minimum": 1}},
        ["query"],
        "knowledge",
        lambda args: _search_payload(session, args["query"], args.get("k", 5)),
        read_only=True,
    )

    # --- snapshot ---
    tool(
        "capture_plan_view",
        "Render a top-down plan section of a storey as SVG (50 px per metre, "
        "walls filled, door/window glyphs, element GUIDs as ids).",
        {"storey": _GUID,
         "cut_height": {"type": "number", "exclusiveMinimum": 0}},
        [],
        "snapshot",
        lambda args: {"svg": snapshot.render_plan(
            m, storey_guid=args.get("storey"),
            cut_height=args.get("cut_height", 1.2))},
        read_only=True,
    )
    tool(
        "capture_elevation_view",
        "Render an orthographic elevation (north, south, east or west) as SVG.",
        {"view": {"type": "string", "enum": ["north", "south", "east", "west"]}},
        ["view"],
        "snapshot",
        lambda args: {"svg": snapshot.render_elevation(m, args["view"])},
        read_only=True,
    )
    return tools


def _guids_payload(guids: list[str]) -> dict:
    return {"guids": guids, "count": len(guids)}


def _roof_payload(result: tuple[str, list[str]]) -> dict:
    guid, warnings = result
    payload = {"guid": guid}
    if warnings:
        payload["warnings"] = warnings
    return payload


def _filled_payload(kind: str, result: tuple[str, str]) -> dict:
    filler, opening = result
    return {kind: filler, "opening": opening, "guid": filler}


def _run_query(session: Session, text: str) -> dict:
    program = dsl.parse_query(text)
    if program.is_mutation and "edit" not in session.groups:
        raise InvalidParams("mutation queries require the edit tool group")
    result, log, _changed = dsl.eval_query(session.model, program)
    return {"result": result, "log": log}


def _search_payload(session: Session, query: str, k: int) -> dict:
    index = session.require_knowledge()
    results = [
        {
            "doc_id": chunk.doc_id,
            "chunk_index": chunk.chunk_index,
            "score": round(score, 6),
            "text": chunk.text,
            "source_path": chunk.source_path,
            "tags": chunk.tags,
        }
        for chunk, score in index.search(query, k=k)
    ]
    return {"results": results}


# --- JSON-RPC plumbing ---

def _error(request_id, code: int, message: str, data=None) -> dict:
    error: dict = {"code": code, "message": message}
    if data is not None:
        error["data"] = data
    return {"jsonrpc": "2.0", "id": request_id, "error": error}


def _result(request_id, result) -> dict:
    return {"jsonrpc": "2.0", "id": request_id, "result": result}


def handle_request(session: Session, raw) -> dict | None:
    """One JSON-RPC message in, one response (or None for notifications)."""
    if isinstance(raw, (str, bytes)):
        try:
            message = json.loads(raw)
        except json.JSONDecodeError as exc:
            return _error(None, -32700, f"parse error: {exc.msg}")
    else:
        message = raw
    if not isinstance(message, dict):
        return _error(None, -32600, "request must be a JSON object")

    request_id = message.get("id")
    is_notification = "id" not in message
    method = message.get("method")
    params = message.get("params") or {}
    if not isinstance(params, dict):
        return None if is_notification else _error(
            request_id, -32602, "params must be an object")

    def reply(result):
        return None if is_notification else _result(request_id, result)

    if method == "initialize":
        return reply({
            "protocolVersion": PROTOCOL_VERSION,
            "capabilities": {"tools": {}},
            "serverInfo": {"name": SERVER_NAME, "version": SERVER_VERSION},
        })
    if method == "notifications/initialized":
        return reply({})
    if method == "ping":
        return reply({})
    if method == "tools/list":
        return reply({
            "tools": [session.tools[name].wire_format()
                      for name in session.tool_order],
        })
    if method == "tools/call":
        name = params.get("name")
        arguments = params.get("arguments") or {}
        descriptor = session.tools.get(name) if isinstance(name, str) else None
        if descriptor is None:
            payload = {"error": {"type": "UnknownTool",
                                 "message": f"unknown tool {name!r}"}}
            return reply({
                "content": [{"type": "text", "text": json.dumps(payload)}],
                "isError": True,
            })
        violations = validate_args(descriptor.input_schema, arguments)
        if violations:
            if is_notification:
                return None
            return _error(request_id, -32602, "invalid params",
                          data={"violations": violations})
        session.call_count += 1
        try:
            payload = descriptor.handler(arguments)
        except IfcError as exc:
            payload = {"error": {"type": exc.type_name, "message": str(exc)}}
            return reply({
                "content": [{"type": "text", "text": json.dumps(payload)}],
                "isError": True,
            })
        return reply({
            "content": [{"type": "text", "text": json.dumps(payload)}],
        })
    return None if is_notification else _error(
        request_id, -32601, f"method not found: {method}")


def serve_stdio(session: Session, stdin=None, stdout=None) -> int:
    """Newline-delimited JSON-RPC loop; returns when stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        response = handle_request(session, line)
        if response is not None:
            stdout.write(json.dumps(response) + "\n")
            stdout.flush()
    return 0


def serve_tcp(port: int, session_factory: Callable[[], Session]) -> None:
    """One session per connection; each owns an independent model."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            session = session_factory()
            for raw in self.rfile:
                raw = raw.strip()
                if not raw:
                    continue
                response = handle_request(session, raw.decode("utf-8"))
                if response is not None:
                    self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
                    self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server(("127.0.0.1", port), Handler) as server:
        server.serve_forever()
