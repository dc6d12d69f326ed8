import json
from itertools import chain, combinations
from random import Random

import pytest

from powcaptcha import image_bank
from powcaptcha.image_bank import (
    AssetMissing,
    CatalogExhausted,
    CategoryTooSmall,
    ManifestMalformed,
    assemble_challenge,
    grade,
    load_catalog,
    random_guess_success_probability,
)


def write_manifest(tmp_path, categories, create_files=True):
    doc = {"categories": []}
    for name, count in categories:
        assets = []
        for i in range(count):
            rel = f"{name}_{i}.png"
            if create_files:
                (tmp_path / rel).write_bytes(b"\x89PNG fake")
            assets.append({"id": f"{name}-{i}", "path": rel, "illusion": False})
        doc["categories"].append({"name": name, "assets": assets})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return path


class TestLoadCatalog:
    def test_minimum_viable(self, tmp_path):
        catalog = load_catalog(write_manifest(tmp_path, [("a", 4), ("b", 4)]))
        assert len(catalog) == 8
        assert set(catalog.category_names) == {"a", "b"}

    def test_missing_file(self, tmp_path):
        path = write_manifest(tmp_path, [("a", 4), ("b", 4)], create_files=False)
        with pytest.raises(AssetMissing, match="a-0"):
            load_catalog(path)

    def test_small_category(self, tmp_path):
        with pytest.raises(CategoryTooSmall, match="b"):
            load_catalog(write_manifest(tmp_path, [("a", 4), ("b", 3)]))

    def test_duplicate_asset_id(self, tmp_path):
        path = write_manifest(tmp_path, [("a", 4), ("b", 4)])
        doc = json.loads(path.read_text())
        doc["categories"][1]["assets"][0]["id"] = "a-0"
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestMalformed, match="duplicate asset id"):
            load_catalog(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("not json {")
        with pytest.raises(ManifestMalformed):
            load_catalog(path)

    def test_too_few_categories(self, tmp_path):
        with pytest.raises(ManifestMalformed):
            load_catalog(write_manifest(tmp_path, [("a", 4)]))

    def test_demo_catalog_loads(self, catalog):
        assert len(catalog.category_names) == 3
        for assets in catalog.categories.values():
            assert len(assets) >= 4
            for asset in assets:
                assert asset.path.is_file()


def check_invariants(challenge, catalog):
    assert len(challenge.tiles) == 6
    assert len({a.asset_id for a in challenge.tiles}) == 6
    assert len(challenge.target_indices) in (2, 3)
    for i, asset in enumerate(challenge.tiles):
        if i in challenge.target_indices:
            assert asset.category == challenge.prompt_category
        else:
            assert asset.category != challenge.prompt_category
    assert challenge.prompt_category in catalog.categories


class TestAssemble:
    def test_structural_invariants(self, catalog):
        rng = Random(1)
        for _ in range(2000):
            check_invariants(assemble_challenge(catalog, rng, now=0), catalog)

    def test_k_frequency_uniform(self, catalog):
        rng = Random(2)
        twos = sum(
            len(assemble_challenge(catalog, rng, 0).target_indices) == 2
            for _ in range(10_000)
        )
        assert 0.46 <= twos / 10_000 <= 0.54

    def test_position_frequency_uniform(self, catalog):
        rng = Random(3)
        hits = [0] * 6
        n = 10_000
        for _ in range(n):
            for i in assemble_challenge(catalog, rng, 0).target_indices:
                hits[i] += 1
        for count in hits:
            assert abs(count / n - 2.5 / 6) <= 0.02

    def test_forced_k(self, catalog):
        rng = Random(4)
        for k in (2, 3):
            ch = assemble_challenge(catalog, rng, 0, k=k)
            assert len(ch.target_indices) == k

    def test_exhausted_two_category_min(self, tmp_path):
        # 2 categories x 4 assets still works for both k values.
        path = write_manifest(tmp_path, [("a", 4), ("b", 4)])
        catalog = load_catalog(path)
        rng = Random(5)
        for _ in range(200):
            check_invariants(assemble_challenge(catalog, rng, 0), catalog)

    def test_invalid_k(self, catalog):
        with pytest.raises(ValueError):
            assemble_challenge(catalog, Random(6), 0, k=4)


def all_nonempty_subsets(n=6):
    positions = range(n)
    return chain.from_iterable(combinations(positions, r) for r in range(1, n + 1))


class TestGrade:
    def test_exact_match_passes(self, catalog):
        ch = assemble_challenge(catalog, Random(7), 0)
        assert grade(ch, set(ch.target_indices), now=1)

    def test_superset_fails(self, catalog):
        ch = assemble_challenge(catalog, Random(8), 0, k=2)
        extra = next(i for i in range(6) if i not in ch.target_indices)
        assert not grade(ch, set(ch.target_indices) | {extra}, now=1)

    def test_expired_fails(self, catalog):
        ch = assemble_challenge(catalog, Random(9), 0)
        assert not grade(ch, set(ch.target_indices), now=ch.ttl_ms)

    def test_exhaustive_subsets(self, catalog):
        rng = Random(10)
        for _ in range(100):
            target = None
            for subset in all_nonempty_subsets():
                ch = assemble_challenge(catalog, rng, 0)
                target = set(ch.target_indices)
                expect = set(subset) == target
                assert grade(ch, subset, now=1) == expect

    def test_one_shot(self, catalog):
        ch = assemble_challenge(catalog, Random(11), 0)
        assert grade(ch, set(ch.target_indices), now=1)
        assert not grade(ch, set(ch.target_indices), now=1)

    def test_failed_attempt_consumes(self, catalog):
        ch = assemble_challenge(catalog, Random(12), 0)
        assert not grade(ch, set(), now=1)
        assert not grade(ch, set(ch.target_indices), now=1)

    def test_out_of_range_positions_fail(self, catalog):
        ch = assemble_challenge(catalog, Random(13), 0)
        assert not grade(ch, {0, 6}, now=1)

    def test_garbage_selection_fails(self, catalog):
        ch = assemble_challenge(catalog, Random(14), 0)
        assert not grade(ch, ["x", "y"], now=1)


class TestGuessProbability:
    def enumerate_rate(self, n, k, sizes):
        """Count subsets of the given sizes; one of them is the target."""
        universe = range(n)
        admissible = [
            s for r in sizes for s in combinations(universe, r)
        ]
        return 1 / len(admissible)

    def test_known_k2(self):
        assert random_guess_success_probability(6, 2, True) == pytest.approx(
            self.enumerate_rate(6, 2, [2])
        )
        assert random_guess_success_probability(6, 2, True) == pytest.approx(1 / 15)

    def test_known_k3(self):
        assert random_guess_success_probability(6, 3, True) == pytest.approx(
            self.enumerate_rate(6, 3, [3])
        )
        assert random_guess_success_probability(6, 3, True) == pytest.approx(0.05)

    def test_unknown_k(self):
        assert random_guess_success_probability(6, 2, False) == pytest.approx(
            self.enumerate_rate(6, 2, [2, 3])
        )
        assert random_guess_success_probability(6, 2, False) == pytest.approx(1 / 35)

    @pytest.mark.parametrize("n,k", [(6, 0), (6, 6), (6, 7), (0, 1)])
    def test_domain_errors(self, n, k):
        with pytest.raises(ValueError):
            random_guess_success_probability(n, k, True)
