import hashlib
import json
from typing import List


def clean_string(s):
    if s is None or len(s) == 0:
        return ""
    return " ".join(s.split())


def split_items(s) -> List[str]:
    """
    Splits a comma-separated list, trimming items and dropping empty ones.
    """
    if not s:
        return []
    return [clean_string(item) for item in s.split(",") if clean_string(item)]


def stable_json(payload) -> str:
    """
    Canonical JSON text: sorted keys, compact separators, UTF-8 kept as is.
    """
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)


def sha256_hex(payload) -> str:
    text = payload if isinstance(payload, str) else stable_json(payload)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
