// generated by scripts/sync-schema.mjs from ../../schema/wire.schema.json
// do not edit by hand
export const WIRE_SCHEMA = {
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "physid live-session wire protocol",
  "definitions": {
    "material": {
      "type": "object",
      "properties": {
        "linear_stiffness": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "damping_coefficient": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "angular_stiffness": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "volume_preservation": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "dynamic_friction": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        }
      },
      "required": [
        "linear_stiffness",
        "damping_coefficient",
        "angular_stiffness",
        "volume_preservation",
        "dynamic_friction"
      ],
      "additionalProperties": false
    },
    "vec3": {
      "type": "array",
      "items": {
        "type": "number"
      },
      "minItems": 3,
      "maxItems": 3
    },
    "load": {
      "type": "object",
      "properties": {
        "type": {
          "const": "load"
        },
        "mesh": {
          "type": "string",
          "minLength": 1
        },
        "body": {
          "enum": [
            "soft",
            "rigid"
          ]
        },
        "material": {
          "$ref": "#/definitions/material"
        }
      },
      "required": [
        "type",
        "mesh",
        "body"
      ],
      "additionalProperties": false
    },
    "pointer": {
      "type": "object",
      "properties": {
        "type": {
          "const": "pointer"
        },
        "phase": {
          "enum": [
            "down",
            "move",
            "up"
          ]
        },
        "x": {
          "type": "integer"
        },
        "y": {
          "type": "integer"
        },
        "strength": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        }
      },
      "required": [
        "type",
        "phase",
        "x",
        "y",
        "strength"
      ],
      "additionalProperties": false
    },
    "set_material": {
      "type": "object",
      "properties": {
        "type": {
          "const": "set_material"
        },
        "linear_stiffness": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "damping_coefficient": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "angular_stiffness": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "volume_preservation": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        },
        "dynamic_friction": {
          "type": "number",
          "minimum": 0,
          "maximum": 1
        }
      },
      "required": [
        "type",
        "linear_stiffness",
        "damping_coefficient",
        "angular_stiffness",
        "volume_preservation",
        "dynamic_friction"
      ],
      "additionalProperties": false
    },
    "set_mask": {
      "type": "object",
      "properties": {
        "type": {
          "const": "set_mask"
        },
        "png_b64": {
          "type": "string",
          "minLength": 1
        }
      },
      "required": [
        "type",
        "png_b64"
      ],
      "additionalProperties": false
    },
    "client_message": {
      "oneOf": [
        {
          "$ref": "#/definitions/load"
        },
        {
          "$ref": "#/definitions/pointer"
        },
        {
          "$ref": "#/definitions/set_material"
        },
        {
          "$ref": "#/definitions/set_mask"
        }
      ]
    },
    "state": {
      "type": "object",
      "properties": {
        "type": {
          "const": "state"
        },
        "frame": {
          "type": "integer",
          "minimum": 0
        },
        "positions": {
          "type": "array",
          "items": {
            "$ref": "#/definitions/vec3"
          }
        }
      },
      "required": [
        "type",
        "frame",
        "positions"
      ],
      "additionalProperties": false
    },
    "loaded": {
      "type": "object",
      "properties": {
        "type": {
          "const": "loaded"
        },
        "nodes": {
          "type": "integer",
          "minimum": 0
        },
        "faces": {
          "type": "array",
          "items": {
            "type": "array",
            "items": {
              "type": "integer",
              "minimum": 0
            },
            "minItems": 3,
            "maxItems": 3
          }
        },
        "camera": {
          "type": "object",
          "properties": {
            "view": {
              "type": "array",
              "items": {
                "type": "number"
              },
              "minItems": 16,
              "maxItems": 16
            },
            "fov_y_deg": {
              "type": "number"
            },
            "viewport": {
              "type": "array",
              "items": {
                "type": "integer"
              },
              "minItems": 2,
              "maxItems": 2
            }
          },
          "required": [
            "view",
            "fov_y_deg",
            "viewport"
          ],
          "additionalProperties": false
        }
      },
      "required": [
        "type",
        "nodes",
        "faces"
      ],
      "additionalProperties": false
    },
    "error": {
      "type": "object",
      "properties": {
        "type": {
          "const": "error"
        },
        "code": {
          "type": "string"
        },
        "detail": {
          "type": "string"
        }
      },
      "required": [
        "type",
        "code"
      ],
      "additionalProperties": false
    },
    "server_message": {
      "oneOf": [
        {
          "$ref": "#/definitions/state"
        },
        {
          "$ref": "#/definitions/loaded"
        },
        {
          "$ref": "#/definitions/error"
        }
      ]
    }
  }
} as const;
