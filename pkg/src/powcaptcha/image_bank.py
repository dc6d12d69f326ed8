"""Categorized image catalog plus six-tile selection challenges.

The catalog is immutable after ingestion and freely shareable across
threads. Challenge grading mutates the single-attempt counter under a
per-challenge lock, same linearizability contract as token redemption.
"""
from __future__ import annotations

import json
import math
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Iterable, Optional

TILES_PER_CHALLENGE = 6
TARGET_SIZES = (2, 3)
MIN_CATEGORIES = 2
MIN_CATEGORY_ASSETS = 4
DEFAULT_CHALLENGE_TTL_MS = 120_000


class CatalogError(Exception):
    pass


class ManifestMalformed(CatalogError):
    pass


class AssetMissing(CatalogError):
    pass


class CategoryTooSmall(CatalogError):
    pass


class CatalogExhausted(CatalogError):
    """No category arrangement can fill the tile counts."""


@dataclass(frozen=True)
class ImageAsset:
    asset_id: str
    path: Path
    category: str
    illusion: bool = False


@dataclass(frozen=True)
class Catalog:
    categories: dict[str, tuple[ImageAsset, ...]]

    @property
    def category_names(self) -> list[str]:
        return list(self.categories)

    def all_assets(self) -> Iterable[ImageAsset]:
        for assets in self.categories.values():
            yield from assets

    def __len__(self) -> int:
        return sum(len(a) for a in self.categories.values())


@dataclass
class ImageChallenge:
    captcha_id: str
    tiles: list[ImageAsset]  # exactly 6, all distinct
    prompt_category: str
    target_indices: frozenset[int]  # server-side only, never on the wire
    created_at: int
    ttl_ms: int
    attempts_remaining: int = 1
    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    @property
    def expires_at(self) -> int:
        return self.created_at + self.ttl_ms

    @property
    def prompt(self) -> str:
        # Deliberately silent about how many tiles are correct.
        return f"Select all images containing {self.prompt_category}"


def load_catalog(manifest_path: Path | str) -> Catalog:
    """Ingest a manifest JSON and validate the catalog. Fails loudly,
    naming the offending entry, on duplicates, missing files, or categories
    below the minimum size."""
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestMalformed(f"{manifest_path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("categories"), list):
        raise ManifestMalformed(f"{manifest_path}: missing 'categories' list")

    base = manifest_path.parent
    categories: dict[str, tuple[ImageAsset, ...]] = {}
    seen_ids: set[str] = set()
    for cat in doc["categories"]:
        if not isinstance(cat, dict) or "name" not in cat or "assets" not in cat:
            raise ManifestMalformed(f"category entry missing name/assets: {cat!r}")
        name = cat["name"]
        if name in categories:
            raise ManifestMalformed(f"duplicate category name: {name}")
        assets = []
        for entry in cat["assets"]:
            if not isinstance(entry, dict) or "id" not in entry or "path" not in entry:
                raise ManifestMalformed(f"asset entry missing id/path: {entry!r}")
            asset_id = entry["id"]
            if asset_id in seen_ids:
                raise ManifestMalformed(f"duplicate asset id: {asset_id}")
            seen_ids.add(asset_id)
            path = base / entry["path"]
            if not path.is_file():
                raise AssetMissing(f"asset {asset_id}: {path}")
            if path.suffix.lower() not in (".png", ".jpg", ".jpeg"):
                raise ManifestMalformed(
                    f"asset {asset_id}: unsupported format {path.suffix}"
                )
            assets.append(
                ImageAsset(asset_id, path, name, bool(entry.get("illusion", False)))
            )
        if len(assets) < MIN_CATEGORY_ASSETS:
            raise CategoryTooSmall(f"category {name}: {len(assets)} assets")
        categories[name] = tuple(assets)
    if len(categories) < MIN_CATEGORIES:
        raise ManifestMalformed(f"need >= {MIN_CATEGORIES} categories")
    return Catalog(categories)


def assemble_challenge(
    catalog: Catalog,
    rng: Random,
    now: int,
    ttl_ms: int = DEFAULT_CHALLENGE_TTL_MS,
    k: Optional[int] = None,
) -> ImageChallenge:
    """Build a six-tile challenge: uniform prompt category, k in {2, 3}
    uniform (unless forced), k targets from the prompt category, 6-k decoys
    from the others, tile order shuffled uniformly."""
    names = catalog.category_names
    prompt = names[rng.randrange(len(names))]
    if k is None:
        k = TARGET_SIZES[rng.randrange(len(TARGET_SIZES))]
    elif k not in TARGET_SIZES:
        raise ValueError(f"k must be in {TARGET_SIZES}: {k}")

    pool = list(catalog.categories[prompt])
    if len(pool) < k:
        raise CatalogExhausted(f"category {prompt} has only {len(pool)} assets")
    targets = rng.sample(pool, k)

    decoy_pool = [
        a for name in names if name != prompt for a in catalog.categories[name]
    ]
    if len(decoy_pool) < TILES_PER_CHALLENGE - k:
        raise CatalogExhausted(
            f"only {len(decoy_pool)} decoys available outside {prompt}"
        )
    decoys = rng.sample(decoy_pool, TILES_PER_CHALLENGE - k)

    tiles = targets + decoys
    rng.shuffle(tiles)
    target_ids = {a.asset_id for a in targets}
    target_indices = frozenset(
        i for i, a in enumerate(tiles) if a.asset_id in target_ids
    )
    return ImageChallenge(
        captcha_id=secrets.token_hex(16),
        tiles=tiles,
        prompt_category=prompt,
        target_indices=target_indices,
        created_at=now,
        ttl_ms=ttl_ms,
    )


def grade(challenge: ImageChallenge, selections: Iterable[int], now: int) -> bool:
    """Exact-set grading with a single attempt per challenge. Every call
    consumes the attempt; a hostile caller learns only pass/fail, never
    which check tripped or how many tiles were correct."""
    try:
        picked = {int(i) for i in selections}
    except (TypeError, ValueError):
        picked = None
    with challenge._lock:
        if challenge.attempts_remaining <= 0:
            return False
        challenge.attempts_remaining -= 1
        if now >= challenge.expires_at:
            return False
        if picked is None or not picked <= set(range(TILES_PER_CHALLENGE)):
            return False
        if len(picked) not in TARGET_SIZES:
            return False
        return picked == set(challenge.target_indices)


def random_guess_success_probability(
    n_tiles: int, k_targets: int, attacker_knows_k: bool
) -> float:
    """Chance that one uniform guess passes exact-set grading. An attacker
    who knows k picks among C(n, k) subsets; one who does not picks among
    all admissible sizes, C(n, 2) + C(n, 3) under this design."""
    if not 1 <= k_targets < n_tiles:
        raise ValueError(f"need 1 <= k_targets < n_tiles: ({n_tiles}, {k_targets})")
    if attacker_knows_k:
        return 1.0 / math.comb(n_tiles, k_targets)
    admissible = sum(math.comb(n_tiles, size) for size in TARGET_SIZES)
    return 1.0 / admissible
