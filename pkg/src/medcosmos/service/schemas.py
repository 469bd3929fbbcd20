"""Published JSON Schemas for every API payload.

The pipeline and the test suite validate all emitted payloads against these.
"""
from __future__ import annotations

import jsonschema

_TYPE_NAMES = ["dis", "sym", "dru", "equ", "pro", "bod", "ite", "mic", "dep"]

_TYPE_COUNTS = {
    "type": "object",
    "additionalProperties": {"type": "integer", "minimum": 0},
}

_ENTITY = {
    "type": "object",
    "required": ["normalized", "type"],
    "properties": {
        "normalized": {"type": "string"},
        "type": {"enum": _TYPE_NAMES},
    },
}

CORPUS_SCHEMA = {
    "$id": "medcosmos/corpus",
    "type": "object",
    "required": ["corpus_id", "content_hash", "document_count", "paragraph_count"],
    "properties": {
        "corpus_id": {"type": "string"},
        "content_hash": {"type": "string"},
        "document_count": {"type": "integer", "minimum": 1},
        "paragraph_count": {"type": "integer", "minimum": 1},
        "rejections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["line_number", "reason"],
                "properties": {
                    "line_number": {"type": "integer", "minimum": 1},
                    "reason": {"type": "string"},
                },
            },
        },
    },
}

SEARCH_SCHEMA = {
    "$id": "medcosmos/search",
    "type": "object",
    "required": ["corpus_id", "keywords", "documents"],
    "properties": {
        "corpus_id": {"type": "string"},
        "keywords": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "documents": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "title", "text_length", "topic", "top_terms"],
                "properties": {
                    "id": {"type": "string"},
                    "title": {"type": "string"},
                    "text_length": {"type": "integer", "minimum": 0},
                    "topic": {"type": ["integer", "null"]},
                    "top_terms": {"type": "array", "items": {"type": "string"}, "maxItems": 5},
                },
            },
        },
    },
}

SESSION_SCHEMA = {
    "$id": "medcosmos/session",
    "type": "object",
    "required": ["session_id", "corpus_id", "theta", "max_subgraph_size"],
    "properties": {
        "session_id": {"type": "string"},
        "corpus_id": {"type": "string"},
        "theta": {"type": "number", "minimum": 0, "maximum": 1},
        "max_subgraph_size": {"type": "integer", "minimum": 1},
        "selected_document_ids": {"type": "array", "items": {"type": "string"}},
        "selected_part_ids": {"type": "array", "items": {"type": "integer"}},
        "created_at": {"type": "string"},
    },
}

SPACE_SCHEMA = {
    "$id": "medcosmos/space",
    "type": "object",
    "required": ["theta", "seed", "nodes", "links"],
    "properties": {
        "theta": {"type": "number", "minimum": 0, "maximum": 1},
        "seed": {"type": "integer"},
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "x", "y", "z", "radius", "topic"],
                "properties": {
                    "id": {"type": "string"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "z": {"type": "number"},
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                    "topic": {"type": ["integer", "null"]},
                },
            },
        },
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target", "similarity"],
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "similarity": {"type": "number", "minimum": -1, "maximum": 1},
                },
            },
        },
    },
}

STARMAP_SCHEMA = {
    "$id": "medcosmos/starmap",
    "type": "object",
    "required": [
        "theta",
        "seed",
        "max_size",
        "boundary_radius",
        "poles",
        "stars",
        "constellation_lines",
        "parts",
        "cut_weight",
    ],
    "properties": {
        "theta": {"type": "number"},
        "seed": {"type": "integer"},
        "max_size": {"type": "integer", "minimum": 1},
        "boundary_radius": {"type": "number", "exclusiveMinimum": 0},
        "cut_weight": {"type": "number", "minimum": 0},
        "iterations_used": {"type": "integer", "minimum": 1},
        "max_residual": {"type": "number", "minimum": 0},
        "poles": {
            "type": "array",
            "minItems": 9,
            "maxItems": 9,
            "items": {
                "type": "object",
                "required": ["type", "angle", "x", "y"],
                "properties": {
                    "type": {"enum": _TYPE_NAMES},
                    "angle": {"type": "number"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                },
            },
        },
        "stars": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": [
                    "id",
                    "part",
                    "document_id",
                    "entity_set_id",
                    "x",
                    "y",
                    "radius",
                    "constellation_color",
                    "brightness_level",
                    "border_luminance",
                    "total_entities",
                ],
                "properties": {
                    "id": {"type": "string"},
                    "part": {"type": "integer", "minimum": 0},
                    "document_id": {"type": "string"},
                    "entity_set_id": {"type": "string"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                    "constellation_color": {"type": "string", "pattern": "^#[0-9a-f]{6}$"},
                    "brightness_level": {"type": "number", "minimum": 0, "maximum": 1},
                    "border_luminance": {"type": "number", "minimum": 0.3, "maximum": 1},
                    "total_entities": {"type": "integer", "minimum": 0},
                    "counts": _TYPE_COUNTS,
                    "snippet": {"type": "string"},
                },
            },
        },
        "constellation_lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target"],
                "properties": {"source": {"type": "string"}, "target": {"type": "string"}},
            },
        },
        "parts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "paragraph_ids", "mes_ids"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "paragraph_ids": {"type": "array", "items": {"type": "string"}},
                    "mes_ids": {"type": "array", "items": {"type": "string"}},
                    "document_ids": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
    },
}

_TREE_NODE = {
    "type": "object",
    "required": ["id", "kind", "color", "children"],
    "properties": {
        "id": {"type": "string"},
        "kind": {"enum": ["root", "mes", "me"]},
        "color": {"type": "string", "pattern": "^#[0-9a-f]{6}$"},
        "angle": {"type": "number"},
        "ring": {"type": "integer", "minimum": 0},
        "entity": _ENTITY,
        "entity_set_id": {"type": "string"},
        "entities": {"type": "array", "items": _ENTITY},
        "children": {"type": "array", "items": {"$ref": "#/$defs/node"}},
    },
}

TREE_SCHEMA = {
    "$id": "medcosmos/tree",
    "type": "object",
    "required": ["root", "mes_count"],
    "properties": {
        "mes_count": {"type": "integer", "minimum": 0},
        "root": {"$ref": "#/$defs/node"},
    },
    "$defs": {"node": _TREE_NODE},
}

FOCUS_SCHEMA = {
    "$id": "medcosmos/focus",
    "type": "object",
    "required": ["core", "donut", "associates", "h_t"],
    "properties": {
        "core": {
            "type": "object",
            "required": ["kind", "label"],
            "properties": {
                "kind": {"enum": ["me", "mes"]},
                "label": {"type": "string"},
                "type": {"enum": _TYPE_NAMES},
            },
        },
        "donut": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type", "proportion"],
                "properties": {
                    "type": {"enum": _TYPE_NAMES},
                    "proportion": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                },
            },
        },
        "h_t": {"type": "number", "exclusiveMinimum": 0},
        "associates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "strength", "heights", "entities"],
                "properties": {
                    "id": {"type": "string"},
                    "strength": {"type": "integer", "minimum": 1},
                    "heights": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
                    "entities": {"type": "array", "items": _ENTITY},
                },
            },
        },
        "geometry": {
            "type": "object",
            "required": ["inner_radius", "axes", "bands"],
            "properties": {
                "inner_radius": {"type": "number", "minimum": 0},
                "axes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["index", "angle", "entity_set_id"],
                        "properties": {
                            "index": {"type": "integer", "minimum": 0},
                            "angle": {"type": "number"},
                            "entity_set_id": {"type": "string"},
                        },
                    },
                },
                "bands": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": [
                            "type",
                            "axis_a",
                            "axis_b",
                            "angle_a",
                            "angle_b",
                            "base_a",
                            "top_a",
                            "base_b",
                            "top_b",
                        ],
                        "properties": {"type": {"enum": _TYPE_NAMES}},
                    },
                },
            },
        },
    },
}

DOCUMENT_SCHEMA = {
    "$id": "medcosmos/document",
    "type": "object",
    "required": ["document_id", "title", "paragraphs"],
    "properties": {
        "document_id": {"type": "string"},
        "title": {"type": "string"},
        "paragraphs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["paragraph_id", "text", "spans"],
                "properties": {
                    "paragraph_id": {"type": "string"},
                    "text": {"type": "string"},
                    "spans": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["start", "end", "surface", "type"],
                            "properties": {
                                "start": {"type": "integer", "minimum": 0},
                                "end": {"type": "integer", "exclusiveMinimum": 0},
                                "surface": {"type": "string"},
                                "type": {"enum": _TYPE_NAMES},
                            },
                        },
                    },
                },
            },
        },
    },
}

PARTITION_SCHEMA = {
    "$id": "medcosmos/partition",
    "type": "object",
    "required": ["parts", "cut_weight", "max_size", "seed"],
    "properties": {
        "parts": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "cut_weight": {"type": "number", "minimum": 0},
        "max_size": {"type": "integer", "minimum": 1},
        "seed": {"type": ["integer", "null"]},
    },
}

SCHEMAS: dict[str, dict] = {
    "corpus": CORPUS_SCHEMA,
    "search": SEARCH_SCHEMA,
    "session": SESSION_SCHEMA,
    "space": SPACE_SCHEMA,
    "starmap": STARMAP_SCHEMA,
    "tree": TREE_SCHEMA,
    "focus": FOCUS_SCHEMA,
    "document": DOCUMENT_SCHEMA,
    "partition": PARTITION_SCHEMA,
}


def validate_payload(name: str, payload: dict) -> None:
    """Raise ``jsonschema.ValidationError`` when the payload does not match
    its published schema."""
    jsonschema.validate(payload, SCHEMAS[name])
