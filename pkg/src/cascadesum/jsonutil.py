"""Canonical JSON encoding shared by transcript and report serialization."""

import json


def canonical_json_bytes(obj) -> bytes:
    """Encode ``obj`` as deterministic UTF-8 JSON.

    Keys are sorted lexicographically and no insignificant whitespace is
    emitted, so equal values always serialize to identical bytes.
    """
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
