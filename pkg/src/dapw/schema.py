"""JSON Schema of ``dapw decompose --json`` output."""

_COMPONENT = {
    "type": "object",
    "required": ["f_m", "phi_m", "delta_m", "k_m"],
    "properties": {
        "f_m": {"type": "number", "exclusiveMinimum": 0},
        "phi_m": {"type": "number", "minimum": 0, "exclusiveMaximum": 6.283185307179587},
        "delta_m": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "k_m": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dapw decomposition result",
    "type": "object",
    "required": ["input", "demodulated", "components", "warnings", "diagnostics"],
    "properties": {
        "input": {
            "type": "object",
            "required": ["path", "fs", "n_samples"],
            "properties": {
                "path": {"type": "string"},
                "fs": {"type": "number", "exclusiveMinimum": 0},
                "n_samples": {"type": "integer", "minimum": 1},
            },
        },
        "demodulated": {"type": "boolean"},
        "carrier": {
            "type": ["object", "null"],
            "properties": {
                "f_c_est": {"type": "number"},
                "scale": {"type": "number"},
                "quality": {"type": "number"},
            },
        },
        "components": {"type": "array", "items": _COMPONENT},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "diagnostics": {
            "type": "object",
            "required": ["frequency_stage"],
            "properties": {
                "frequency_stage": {"type": "object"},
                "components": {"type": "array", "items": {"type": "object"}},
            },
        },
    },
}
