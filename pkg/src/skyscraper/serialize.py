"""Structured text for transformations, reports and certified maps.

Every artifact is canonical JSON: sorted keys, two-space indent, a trailing
newline, and exact numbers written as strings in the ``p/q+r/s*sqrt(d)``
format.  Equal artifacts therefore serialize to identical bytes.

Certified maps carry their closures, so they are not serialized directly.
A saved map records the construction and its inputs; :func:`rebuild`
reruns the (deterministic) construction.
"""
from __future__ import annotations

import json
from typing import Any

from .dynamics import Transformation
from .exact import as_exact

__all__ = [
    "ArtifactError",
    "FORMAT",
    "dumps",
    "loads",
    "envelope",
    "open_envelope",
    "transformation_text",
    "parse_transformation",
    "map_artifact",
    "rebuild",
]

FORMAT = "skyscraper/1"


class ArtifactError(ValueError):
    pass


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"not a valid artifact: {exc}") from None


def envelope(kind: str, data: Any) -> dict:
    return {"format": FORMAT, "kind": kind, "data": data}


def open_envelope(obj: Any, kind: str | None = None) -> Any:
    """``data`` of an artifact, checking its format and (optionally) its kind."""
    if not isinstance(obj, dict) or obj.get("format") != FORMAT or "kind" not in obj:
        raise ArtifactError("missing or unknown artifact format")
    if kind is not None and obj["kind"] != kind:
        raise ArtifactError(f"expected a {kind} artifact, got {obj['kind']}")
    return obj["data"]


def transformation_text(T: Transformation, meta: dict | None = None) -> str:
    data = T.to_json()
    if meta:
        data = dict(data, meta=meta)
    return dumps(envelope("transformation", data))


def parse_transformation(text_or_obj) -> Transformation:
    obj = loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
    return Transformation.from_json(open_envelope(obj, "transformation"))


# ---------------------------------------------------------------------------
# certified maps


def map_artifact(construction: str, T1: Transformation, T2: Transformation | None, params: dict, m) -> dict:
    """Artifact for a certified map: inputs, parameters and the resulting report."""
    return envelope("certified_map", {
        "construction": construction,
        "inputs": [T1.to_json(), T2.to_json() if T2 is not None else None],
        "params": {k: (str(v) if not isinstance(v, (int, type(None))) else v) for k, v in sorted(params.items())},
        "result": m.to_json(),
    })


def _param(params: dict, key: str, default=None):
    v = params.get(key, default)
    return as_exact(v) if isinstance(v, str) else v


def rebuild(obj) -> tuple:
    """Rerun the construction recorded in a certified-map artifact.

    Returns ``(map, stored)`` where ``stored`` is the saved result; callers
    compare ``map.to_json()`` against it to confirm reproduction.
    """
    from .conjugacy import absorb, lambda_approx_conjugacy, mu_approx_conjugacy

    data = open_envelope(obj, "certified_map")
    t1, t2 = data["inputs"]
    T1 = Transformation.from_json(t1)
    T2 = Transformation.from_json(t2) if t2 is not None else None
    params = data["params"]
    eps = _param(params, "epsilon")
    construction = data["construction"]
    if construction == "absorb":
        m = absorb(T1, eps, params.get("budget") or 100_000)
    elif construction == "lambda":
        m = lambda_approx_conjugacy(T1, T2, eps, params.get("force_through", 8), params.get("budget"))
    elif construction == "mu":
        m = mu_approx_conjugacy(T1, T2, eps)
    else:
        raise ArtifactError(f"unknown construction {construction!r}")
    return m, data["result"]
