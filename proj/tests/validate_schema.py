"""Validate scenario files against the schema printed by `mfg schema`.

usage: validate_schema.py <mfg executable> <scenario.json>...
Exits 77 (skipped) when the jsonschema package is unavailable.
"""
import json
import subprocess
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)

schema = json.loads(subprocess.run([sys.argv[1], "schema"], check=True, capture_output=True, text=True).stdout)
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)
failed = False
for path in sys.argv[2:]:
    with open(path) as f:
        errors = list(validator.iter_errors(json.load(f)))
    for e in errors:
        print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}")
    failed |= bool(errors)
    print(f"{path}: {'invalid' if errors else 'valid'}")
sys.exit(1 if failed else 0)
