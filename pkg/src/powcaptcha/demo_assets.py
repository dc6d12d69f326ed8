"""Synthetic placeholder catalog for desk-scale testing and demos.

Generates solid-color PNG tiles with the category name embedded, plus the
manifest JSON, so the full pipeline runs without a real illusion-image
asset set.
"""
from __future__ import annotations

import json
from pathlib import Path

from PIL import Image, ImageDraw

DEFAULT_CATEGORIES = {
    "circles": (70, 130, 180),
    "squares": (178, 34, 34),
    "triangles": (34, 139, 34),
}

TILE_SIZE = (128, 128)


def make_demo_catalog(
    dest: Path | str,
    categories: dict[str, tuple[int, int, int]] | None = None,
    per_category: int = 6,
) -> Path:
    """Write per_category labeled tiles for each category under dest and
    return the manifest path."""
    if categories is None:
        categories = DEFAULT_CATEGORIES
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    manifest = {"categories": []}
    for name, color in categories.items():
        cat_dir = dest / name
        cat_dir.mkdir(exist_ok=True)
        assets = []
        for i in range(per_category):
            filename = f"{name}_{i}.png"
            img = Image.new("RGB", TILE_SIZE, color)
            draw = ImageDraw.Draw(img)
            draw.text((8, 8), f"{name} #{i}", fill=(255, 255, 255))
            img.save(cat_dir / filename)
            assets.append(
                {"id": f"{name}-{i}", "path": f"{name}/{filename}", "illusion": False}
            )
        manifest["categories"].append({"name": name, "assets": assets})
    manifest_path = dest / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path
