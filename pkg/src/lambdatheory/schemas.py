"""JSON schemas for everything the command-line tool writes."""

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 0}

MANIFEST = {
    "type": "object",
    "required": ["seed", "horizon", "command", "version", "timestamps"],
    "properties": {
        "seed": _INT,
        "horizon": _INT,
        "command": {"type": "array", "items": {"type": "string"}},
        "version": {"type": "string"},
        "timestamps": {
            "type": "object",
            "required": ["started", "finished"],
            "properties": {"started": {"type": "string"}, "finished": {"type": "string"}},
        },
    },
}

DECISION = {
    "type": "object",
    "required": ["label", "answer", "mode", "witness_count"],
    "properties": {
        "label": {"type": "string"},
        "answer": {"type": "boolean"},
        "mode": {"enum": ["exact", "heuristic"]},
        "witness_count": {"type": ["integer", "null"]},
    },
    "additionalProperties": False,
}


def _with_manifest(schema: dict) -> dict:
    out = dict(schema)
    out["required"] = list(schema.get("required", [])) + ["manifest"]
    out["properties"] = {**schema.get("properties", {}), "manifest": MANIFEST}
    return out


HR_EVAL = _with_manifest({
    "type": "object",
    "required": ["value_label", "classification", "standard_part", "oracle_decisions_used"],
    "properties": {
        "value_label": {"type": "string"},
        "classification": {"enum": ["Infinitesimal", "FiniteNonInfinitesimal", "Infinite", None]},
        "standard_part": {"type": ["string", "null"]},
        "oracle_decisions_used": _INT,
        "value": {"type": ["boolean", "null"]},
        "heuristic": {"type": "boolean"},
    },
})

ORACLE_LOG_HEADER = {"type": "object", "required": ["manifest"], "properties": {"manifest": MANIFEST}}

TRANSFER_CHECK = _with_manifest({
    "type": "object",
    "required": ["file", "results"],
    "properties": {
        "file": {"type": "string"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["line", "formula", "value", "exact"],
                "properties": {
                    "line": _INT,
                    "formula": {"type": "string"},
                    "value": {"type": "boolean"},
                    "exact": {"type": "boolean"},
                },
            },
        },
        "decision_log": {"type": "array", "items": DECISION},
    },
})

COEFFS = _with_manifest({
    "type": "object",
    "required": ["basis", "m", "coeffs"],
    "properties": {
        "basis": {"enum": ["hat", "sine"]},
        "m": {"type": "integer", "minimum": 2},
        "coeffs": {"type": "array", "items": _NUM},
        "f": {"type": "string"},
        "l2_error": _NUM,
        "max_residual": _NUM,
        "input_coeffs": {"type": "array", "items": _NUM},
    },
})

_LEVEL = {
    "type": "object",
    "required": ["m", "h", "j_value", "sup_norm", "grad_norm", "iterations", "starts_used", "converged"],
    "properties": {
        "m": {"type": "integer", "minimum": 2},
        "h": _NUM,
        "j_value": {"type": "number", "minimum": 0},
        "sup_norm": _NUM,
        "grad_norm": _NUM,
        "iterations": _INT,
        "starts_used": _INT,
        "converged": {"type": "boolean"},
    },
}

SWEEP = _with_manifest({
    "type": "object",
    "required": ["levels", "order_j", "order_sup", "certificate"],
    "properties": {
        "levels": {"type": "array", "items": _LEVEL, "minItems": 4},
        "order_j": {"type": ["number", "null"]},
        "order_sup": {"type": ["number", "null"]},
        "certificate": {"enum": ["PASS", "FAIL"]},
        "monotone": {"type": "boolean"},
        "reasons": {"type": "array", "items": {"type": "string"}},
        "reading": {"type": "string"},
    },
})
