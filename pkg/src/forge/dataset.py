"""Dataset manifests: JSON schema, validation, split bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

ENTRY_SCHEMA = {
    "type": "object",
    "required": ["id", "label", "theta", "phi", "seed", "gbuffer", "images"],
    "properties": {
        "id": {"type": "string"},
        "label": {"type": "integer", "minimum": 0},
        "theta": {"type": "number"},
        "phi": {"type": "number"},
        "seed": {"type": "integer"},
        "gbuffer": {"type": "string"},
        "images": {
            "type": "object",
            "required": ["low", "mid", "high"],
            "properties": {
                "low": {"type": "string"},
                "mid": {"type": "string"},
                "high": {"type": "string"},
            },
        },
        "split": {"enum": ["train", "val", "test"]},
        "refiner_id": {"type": ["string", "integer"]},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["class_count", "entries"],
    "properties": {
        "class_count": {"type": "integer", "minimum": 1},
        "entries": {"type": "array", "items": ENTRY_SCHEMA},
    },
}


class ManifestError(ValueError):
    pass


@dataclass
class DatasetManifest:
    class_count: int
    entries: list = field(default_factory=list)

    def validate(self, check_files=False, root=None):
        jsonschema.validate(
            {"class_count": self.class_count, "entries": self.entries},
            MANIFEST_SCHEMA)
        ids = [e["id"] for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate entry ids")
        labels = {e["label"] for e in self.entries}
        if labels and (min(labels) < 0 or max(labels) >= self.class_count):
            raise ManifestError("labels must cover [0, class_count)")
        if check_files:
            root = Path(root or ".")
            for e in self.entries:
                for ref in [e["gbuffer"], *e["images"].values()]:
                    if not (root / ref).exists():
                        raise ManifestError(f"missing referenced file {ref}")

    def split(self, tag):
        return [e for e in self.entries if e.get("split") == tag]

    def save(self, path, check_files=False):
        self.validate(check_files=check_files,
                      root=Path(path).parent)
        with open(path, "w") as f:
            json.dump({"class_count": self.class_count,
                       "entries": self.entries}, f, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            raw = json.load(f)
        m = cls(class_count=raw["class_count"], entries=raw["entries"])
        m.validate()
        return m
