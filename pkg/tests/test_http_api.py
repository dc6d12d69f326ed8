import json
from random import Random

import pytest
from fastapi.testclient import TestClient

from powcaptcha import pow_core
from powcaptcha.http_api import ApiConfig, DENIAL_BODY, create_app
from powcaptcha.pow_core import PowChallenge, solve


class FakeClock:
    def __init__(self, start=1_000_000):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, ms):
        self.now += ms


@pytest.fixture
def clock():
    return FakeClock()


def make_client(catalog, clock, **overrides):
    overrides.setdefault("difficulty_bits", 8)
    config = ApiConfig(**overrides)
    app = create_app(config, catalog=catalog, clock=clock, rng=Random(1234))
    return TestClient(app)


@pytest.fixture
def client(catalog, clock):
    return make_client(catalog, clock)


def solve_challenge(body):
    challenge = PowChallenge(
        body["challenge_id"],
        bytes.fromhex(body["salt"]),
        body["difficulty_bits"],
        0,
        body["expires_in_ms"],
    )
    return solve(challenge, 0, 1 << 24)


def obtain_token(client):
    body = client.get("/api/pow-challenge").json()
    nonce = solve_challenge(body)
    resp = client.post(
        "/api/pow-verify", json={"challenge_id": body["challenge_id"], "nonce": nonce}
    )
    assert resp.status_code == 200
    return resp.json()["token"]


class TestPowChallenge:
    def test_shape_and_default_difficulty(self, catalog, clock):
        client = make_client(catalog, clock, difficulty_bits=16)
        resp = client.get("/api/pow-challenge")
        assert resp.status_code == 200
        body = resp.json()
        assert body["difficulty_bits"] == 16
        assert len(body["salt"]) == 32
        assert body["expires_in_ms"] == 120_000
        assert "pc_session" in resp.cookies

    def test_hardened_preset(self, catalog, clock):
        client = make_client(catalog, clock, hardened=True)
        assert client.get("/api/pow-challenge").json()["difficulty_bits"] == 20

    def test_fresh_every_request(self, client):
        a = client.get("/api/pow-challenge").json()
        b = client.get("/api/pow-challenge").json()
        assert a["challenge_id"] != b["challenge_id"]
        assert a["salt"] != b["salt"]


class TestPowVerify:
    def test_round_trip(self, client):
        assert len(obtain_token(client)) == 32

    def test_replay_denied(self, client):
        body = client.get("/api/pow-challenge").json()
        nonce = solve_challenge(body)
        payload = {"challenge_id": body["challenge_id"], "nonce": nonce}
        assert client.post("/api/pow-verify", json=payload).status_code == 200
        assert client.post("/api/pow-verify", json=payload).status_code == 403

    def test_bad_nonce_denied(self, client):
        body = client.get("/api/pow-challenge").json()
        nonce = solve_challenge(body)
        resp = client.post(
            "/api/pow-verify",
            json={"challenge_id": body["challenge_id"], "nonce": nonce + 10**15},
        )
        assert resp.status_code == 403

    def test_unknown_challenge_denied_without_hashing(self, client):
        before = pow_core.hash_meter.count
        resp = client.post(
            "/api/pow-verify", json={"challenge_id": "f" * 32, "nonce": 1}
        )
        assert resp.status_code == 403
        assert pow_core.hash_meter.count == before

    def test_expired_challenge_denied_without_hashing(self, client, clock):
        body = client.get("/api/pow-challenge").json()
        nonce = solve_challenge(body)
        clock.advance(120_001)
        before = pow_core.hash_meter.count
        resp = client.post(
            "/api/pow-verify", json={"challenge_id": body["challenge_id"], "nonce": nonce}
        )
        assert resp.status_code == 403
        assert pow_core.hash_meter.count == before

    def test_non_json_body_is_400(self, client):
        resp = client.post(
            "/api/pow-verify",
            content=b"not json",
            headers={"content-type": "application/json"},
        )
        assert resp.status_code == 400

    def test_single_hash_per_valid_request(self, client):
        body = client.get("/api/pow-challenge").json()
        nonce = solve_challenge(body)
        before = pow_core.hash_meter.count
        client.post(
            "/api/pow-verify", json={"challenge_id": body["challenge_id"], "nonce": nonce}
        )
        assert pow_core.hash_meter.count == before + 1


class TestChallengeFetch:
    def test_token_redeems_for_six_tiles(self, client):
        token = obtain_token(client)
        resp = client.get(f"/api/challenge?token={token}")
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["tiles"]) == 6
        assert body["prompt"].startswith("Select all images containing ")
        assert "target" not in json.dumps(body)

    def test_token_single_use(self, client):
        token = obtain_token(client)
        assert client.get(f"/api/challenge?token={token}").status_code == 200
        assert client.get(f"/api/challenge?token={token}").status_code == 403

    def test_missing_token_denied(self, client):
        assert client.get("/api/challenge").status_code == 403

    def test_cross_session_denied(self, catalog, clock):
        client = make_client(catalog, clock)
        token = obtain_token(client)
        client.cookies.clear()
        assert client.get(f"/api/challenge?token={token}").status_code == 403

    def test_expired_token_denied(self, client, clock):
        token = obtain_token(client)
        clock.advance(120_001)
        assert client.get(f"/api/challenge?token={token}").status_code == 403

    def test_tiles_serve_image_bytes(self, client):
        token = obtain_token(client)
        body = client.get(f"/api/challenge?token={token}").json()
        for url in body["tiles"]:
            resp = client.get(url)
            assert resp.status_code == 200
            assert resp.headers["content-type"] == "image/png"
            assert resp.content.startswith(b"\x89PNG")

    def test_tiles_dead_after_expiry(self, client, clock):
        token = obtain_token(client)
        body = client.get(f"/api/challenge?token={token}").json()
        clock.advance(120_001)
        assert client.get(body["tiles"][0]).status_code == 403


class TestAnswer:
    def fetch(self, client):
        token = obtain_token(client)
        body = client.get(f"/api/challenge?token={token}").json()
        service = client.app.state.service
        challenge = service._live[body["captcha_id"]]
        return body["captcha_id"], sorted(challenge.target_indices)

    def test_correct_selection_passes(self, client):
        captcha_id, targets = self.fetch(client)
        resp = client.post(
            "/api/answer", json={"captcha_id": captcha_id, "selections": targets}
        )
        assert resp.json() == {"pass": True}

    def test_one_shot(self, client):
        captcha_id, targets = self.fetch(client)
        payload = {"captcha_id": captcha_id, "selections": targets}
        assert client.post("/api/answer", json=payload).json()["pass"]
        assert not client.post("/api/answer", json=payload).json()["pass"]

    def test_wrong_selection_fails(self, client):
        captcha_id, targets = self.fetch(client)
        wrong = sorted(set(range(6)) - set(targets))[: len(targets)]
        resp = client.post(
            "/api/answer", json={"captcha_id": captcha_id, "selections": wrong}
        )
        assert resp.json() == {"pass": False}

    def test_unknown_captcha_fails(self, client):
        resp = client.post(
            "/api/answer", json={"captcha_id": "nope", "selections": [0, 1]}
        )
        assert resp.json() == {"pass": False}

    def test_non_json_is_400(self, client):
        resp = client.post(
            "/api/answer",
            content=b"{",
            headers={"content-type": "application/json"},
        )
        assert resp.status_code == 400


class TestDenialUniformity:
    def test_all_denials_byte_identical(self, client, catalog, clock):
        bodies = []
        # unknown challenge
        bodies.append(
            client.post(
                "/api/pow-verify", json={"challenge_id": "f" * 32, "nonce": 1}
            )
        )
        # bad nonce
        ch = client.get("/api/pow-challenge").json()
        bodies.append(
            client.post(
                "/api/pow-verify",
                json={"challenge_id": ch["challenge_id"], "nonce": "zzz"},
            )
        )
        # missing / unknown / reused token
        bodies.append(client.get("/api/challenge"))
        bodies.append(client.get("/api/challenge?token=" + "0" * 32))
        token = obtain_token(client)
        client.get(f"/api/challenge?token={token}")
        bodies.append(client.get(f"/api/challenge?token={token}"))
        # dead tile route
        bodies.append(client.get("/img/deadbeef/0"))
        for resp in bodies:
            assert resp.status_code == 403
            assert resp.content == DENIAL_BODY


class TestGatekeeping:
    def test_non_solving_client_sees_nothing(self, catalog, clock):
        client = make_client(catalog, clock)
        probes = [
            client.get("/api/challenge"),
            client.get("/api/challenge?token=" + "a" * 32),
            client.get("/img/0123/0"),
            client.get("/img/../../etc/passwd/0"),
            client.post("/api/pow-verify", json={"challenge_id": "x", "nonce": 0}),
            client.post("/api/answer", json={"captcha_id": "x", "selections": [0, 1]}),
            client.get("/api/pow-challenge"),
        ]
        for resp in probes:
            assert not resp.headers.get("content-type", "").startswith("image/")
            assert b"\x89PNG" not in resp.content
            assert b"Select all images" not in resp.content

    def test_hash_budget_under_invalid_flood(self, catalog, clock):
        client = make_client(catalog, clock)
        n = 200
        before = pow_core.hash_meter.count
        for i in range(n):
            client.post(
                "/api/pow-verify", json={"challenge_id": f"{i:032x}", "nonce": i}
            )
        assert pow_core.hash_meter.count - before <= n


class TestConfig:
    def test_from_file_with_env_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps(
                {"difficulty_hex_digits": 5, "port": 9000, "manifest_path": "x.json"}
            )
        )
        monkeypatch.setenv("POWCAPTCHA_BIND", "0.0.0.0:8123")
        monkeypatch.setenv("POWCAPTCHA_MANIFEST", "/data/manifest.json")
        config = ApiConfig.from_file(path)
        assert config.difficulty_bits == 20
        assert (config.host, config.port) == ("0.0.0.0", 8123)
        assert config.manifest_path == "/data/manifest.json"

    def test_serving_difficulty_capped(self):
        with pytest.raises(ValueError):
            ApiConfig(difficulty_bits=33)

    def test_positive_ttls(self):
        with pytest.raises(ValueError):
            ApiConfig(pow_ttl_ms=0)
