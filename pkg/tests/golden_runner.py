"""Replay golden request/response conformance files against a live server.

Generated identifiers are matched by pattern placeholders; everything else
must match bit-exactly.
"""

import base64
import json
import re
import urllib.error
import urllib.parse
import urllib.request

_PATTERNS = {
    "<any>": lambda v: isinstance(v, str),
    "<person_id>": lambda v: isinstance(v, str) and re.fullmatch(r"p\d{4}", v),
    "<face_id>": lambda v: isinstance(v, str) and re.fullmatch(r"[0-9a-f]{32}", v),
    "<int>": lambda v: isinstance(v, int),
}


def match(expected, actual, path=""):
    if isinstance(expected, str) and expected in _PATTERNS:
        assert _PATTERNS[expected](actual), f"{path}: {actual!r} !~ {expected}"
    elif isinstance(expected, str) and expected.startswith("<approx:"):
        _, target, tol = expected.rstrip(">").split(":")
        assert abs(actual - float(target)) <= float(tol), f"{path}: {actual}"
    elif isinstance(expected, dict):
        assert isinstance(actual, dict) and set(actual) == set(expected), \
            f"{path}: keys {sorted(actual)} != {sorted(expected)}"
        for k in expected:
            match(expected[k], actual[k], f"{path}.{k}")
    elif isinstance(expected, list):
        assert isinstance(actual, list) and len(actual) == len(expected), path
        for i, (e, a) in enumerate(zip(expected, actual)):
            match(e, a, f"{path}[{i}]")
    else:
        assert expected == actual, f"{path}: {actual!r} != {expected!r}"


def _dig(doc, path):
    for part in path.split("."):
        doc = doc[int(part)] if part.isdigit() else doc[part]
    return doc


def run_conformance(golden_path, endpoint, api_key):
    with open(golden_path) as f:
        exchanges = json.load(f)["exchanges"]
    variables = {}
    for ex in exchanges:
        path = ex["path"].format(**variables)
        if "json" in ex:
            body_doc = json.loads(json.dumps(ex["json"]).replace(
                "{fid}", variables.get("fid", "")))
            body = json.dumps(body_doc).encode()
        elif "pgm_base64" in ex:
            body = base64.b64decode(ex["pgm_base64"])
        elif "raw_body" in ex:
            body = ex["raw_body"].encode()
        else:
            body = None
        req = urllib.request.Request(
            endpoint + urllib.parse.quote(path), data=body, method=ex["method"])
        if not ex.get("no_auth"):
            req.add_header("X-Api-Key", api_key)
        try:
            with urllib.request.urlopen(req, timeout=5) as resp:
                status, payload = resp.status, json.load(resp)
        except urllib.error.HTTPError as e:
            status, payload = e.code, json.load(e)
        assert status == ex["expect_status"], \
            f"{ex['name']}: got {status}, body {payload}"
        match(ex["expect_body"], payload, ex["name"])
        for var, src in ex.get("save", {}).items():
            variables[var] = _dig(payload, src)
    return len(exchanges)
