"""HTTP surface for the two-phase protocol.

Strict gatekeeping: no challenge imagery or prompt text crosses the wire
before a PoW token is redeemed. Every verification failure collapses to one
byte-identical 403 body so attackers get no oracle; the internal reason
goes to the structured log only.

Endpoints:
    GET  /api/pow-challenge            mint a PoW puzzle, set session cookie
    POST /api/pow-verify               {challenge_id, nonce} -> {token}
    GET  /api/challenge?token=<hex>    redeem token -> six-tile challenge
    POST /api/answer                   {captcha_id, selections} -> {pass}
    GET  /img/<captcha_id>/<idx>       tile bytes, live challenges only
"""
from __future__ import annotations

import json
import logging
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import image_bank, pow_core, token_ledger

log = logging.getLogger("powcaptcha.api")

SESSION_COOKIE = "pc_session"
DENIAL_BODY = b'{"error":"denied"}'
HARDENED_DIFFICULTY_BITS = 20
MAX_SERVING_DIFFICULTY_BITS = 32

_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    difficulty_bits: int = 16
    hardened: bool = False
    pow_ttl_ms: int = 120_000
    challenge_ttl_ms: int = 120_000
    manifest_path: Optional[str] = None
    journal_path: Optional[str] = None
    asset_prefix: str = "/img"
    allowed_origins: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        bits = self.effective_difficulty_bits
        if not 0 <= bits <= MAX_SERVING_DIFFICULTY_BITS:
            raise ValueError(f"serving difficulty out of range: {bits}")
        if self.pow_ttl_ms <= 0 or self.challenge_ttl_ms <= 0:
            raise ValueError("TTLs must be positive")

    @property
    def effective_difficulty_bits(self) -> int:
        return HARDENED_DIFFICULTY_BITS if self.hardened else self.difficulty_bits

    @classmethod
    def from_file(cls, path: Path | str) -> "ApiConfig":
        """Load config JSON; POWCAPTCHA_BIND (host:port) and
        POWCAPTCHA_MANIFEST environment variables override the file."""
        doc = json.loads(Path(path).read_text())
        # Convenience alias: difficulty in hex digits, 4 bits each.
        if "difficulty_hex_digits" in doc:
            doc["difficulty_bits"] = 4 * doc.pop("difficulty_hex_digits")
        if "allowed_origins" in doc:
            doc["allowed_origins"] = tuple(doc["allowed_origins"])
        cfg = cls(**doc)
        bind = os.environ.get("POWCAPTCHA_BIND")
        if bind:
            host, _, port = bind.rpartition(":")
            cfg.host, cfg.port = host, int(port)
        manifest = os.environ.get("POWCAPTCHA_MANIFEST")
        if manifest:
            cfg.manifest_path = manifest
        return cfg


def _log_event(kind: str, **fields) -> None:
    log.info(json.dumps({"event": kind, **fields}, sort_keys=True))


@dataclass
class _PendingChallenge:
    challenge: pow_core.PowChallenge
    session_id: str


class CaptchaService:
    """All cross-request state: pending PoW challenges, the token ledger,
    and live image challenges. Each map is guarded by one lock."""

    def __init__(
        self,
        config: ApiConfig,
        catalog: image_bank.Catalog,
        clock: Optional[Callable[[], int]] = None,
        rng: Optional[Random] = None,
    ) -> None:
        self.config = config
        self.catalog = catalog
        self.clock = clock or (lambda: time.time_ns() // 1_000_000)
        self.rng = rng or Random(secrets.randbits(64))
        self.ledger = token_ledger.TokenLedger(
            Path(config.journal_path) if config.journal_path else None
        )
        self._lock = threading.Lock()
        self._pending: dict[str, _PendingChallenge] = {}
        self._live: dict[str, image_bank.ImageChallenge] = {}
        self._sweep_tick = 0

    def _sweep(self, now: int) -> None:
        # Lazy cleanup; caller holds the lock.
        self._sweep_tick += 1
        if self._sweep_tick % 64:
            return
        for cid in [
            c for c, p in self._pending.items() if now >= p.challenge.expires_at
        ]:
            del self._pending[cid]
        for cid in [c for c, ch in self._live.items() if now >= ch.expires_at]:
            del self._live[cid]
        self.ledger.purge_expired(now)

    def issue_pow_challenge(self, session_id: str) -> pow_core.PowChallenge:
        now = self.clock()
        challenge = pow_core.new_challenge(
            self.config.effective_difficulty_bits, self.config.pow_ttl_ms, now
        )
        with self._lock:
            self._pending[challenge.challenge_id] = _PendingChallenge(
                challenge, session_id
            )
            self._sweep(now)
        _log_event(
            "minted",
            challenge_id=challenge.challenge_id,
            difficulty_bits=challenge.difficulty_bits,
            session=session_id,
        )
        return challenge

    def verify_pow(self, challenge_id, nonce, session_id: str):
        """Returns a token on success, or an internal denial reason."""
        now = self.clock()
        with self._lock:
            pending = self._pending.get(challenge_id)
        if pending is None:
            return None, "unknown_challenge"
        verdict = pow_core.check_solution(pending.challenge, nonce, now)
        if not verdict.accepted:
            return None, verdict.reason.value
        try:
            token = self.ledger.mint(
                challenge_id, session_id, now, self.config.pow_ttl_ms
            )
        except token_ledger.AlreadyConsumedError:
            return None, "challenge_replayed"
        with self._lock:
            self._pending.pop(challenge_id, None)
        _log_event("verified", challenge_id=challenge_id, token=token.token_id)
        return token, None

    def fetch_challenge(self, token_id, session_id: str):
        """Redeem the token and assemble a fresh image challenge."""
        now = self.clock()
        if not isinstance(token_id, str):
            return None, "missing_token"
        result = self.ledger.redeem(token_id, session_id, now)
        if result is not token_ledger.RedeemResult.REDEEMED:
            return None, result.value
        with self._lock:
            challenge = image_bank.assemble_challenge(
                self.catalog, self.rng, now, self.config.challenge_ttl_ms
            )
            self._live[challenge.captcha_id] = challenge
        _log_event("redeemed", token=token_id, captcha_id=challenge.captcha_id)
        return challenge, None

    def answer(self, captcha_id, selections) -> bool:
        now = self.clock()
        with self._lock:
            challenge = self._live.get(captcha_id)
        if challenge is None or not isinstance(selections, list):
            _log_event("graded", captcha_id=captcha_id, result="fail")
            return False
        passed = image_bank.grade(challenge, selections, now)
        _log_event(
            "graded", captcha_id=captcha_id, result="pass" if passed else "fail"
        )
        return passed

    def tile_bytes(self, captcha_id: str, tile_index: int):
        """Tile image bytes, only while the challenge is live."""
        now = self.clock()
        with self._lock:
            challenge = self._live.get(captcha_id)
        if (
            challenge is None
            or now >= challenge.expires_at
            or challenge.attempts_remaining <= 0
            or not 0 <= tile_index < image_bank.TILES_PER_CHALLENGE
        ):
            return None, None
        asset = challenge.tiles[tile_index]
        media_type = _MEDIA_TYPES[asset.path.suffix.lower()]
        return asset.path.read_bytes(), media_type


def create_app(
    config: ApiConfig,
    catalog: Optional[image_bank.Catalog] = None,
    clock: Optional[Callable[[], int]] = None,
    rng: Optional[Random] = None,
) -> FastAPI:
    if catalog is None:
        if config.manifest_path is None:
            raise ValueError("config.manifest_path required when no catalog given")
        catalog = image_bank.load_catalog(config.manifest_path)
    service = CaptchaService(config, catalog, clock=clock, rng=rng)
    app = FastAPI(title="powcaptcha", docs_url=None, redoc_url=None)
    app.state.service = service

    if config.allowed_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.allowed_origins),
            allow_methods=["GET", "POST"],
            allow_credentials=True,
        )

    def session_of(request: Request) -> tuple[str, bool]:
        sid = request.cookies.get(SESSION_COOKIE)
        if sid and len(sid) == 32:
            return sid, False
        return secrets.token_hex(16), True

    def with_session(response: Response, sid: str, fresh: bool) -> Response:
        if fresh:
            response.set_cookie(
                SESSION_COOKIE, sid, httponly=True, samesite="strict"
            )
        return response

    def denied(reason: str, sid: str, fresh: bool) -> Response:
        _log_event("denied", reason=reason)
        response = Response(
            content=DENIAL_BODY, status_code=403, media_type="application/json"
        )
        return with_session(response, sid, fresh)

    async def body_json(request: Request):
        try:
            doc = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            return None
        return doc if isinstance(doc, dict) else None

    BAD_REQUEST = {"error": "bad request"}

    @app.get("/api/pow-challenge")
    def pow_challenge(request: Request) -> Response:
        sid, fresh = session_of(request)
        challenge = service.issue_pow_challenge(sid)
        response = JSONResponse(
            {
                "challenge_id": challenge.challenge_id,
                "salt": challenge.salt.hex(),
                "difficulty_bits": challenge.difficulty_bits,
                "expires_in_ms": challenge.ttl_ms,
            }
        )
        return with_session(response, sid, fresh)

    @app.post("/api/pow-verify")
    async def pow_verify(request: Request) -> Response:
        sid, fresh = session_of(request)
        doc = await body_json(request)
        if doc is None:
            return with_session(JSONResponse(BAD_REQUEST, status_code=400), sid, fresh)
        token, reason = service.verify_pow(doc.get("challenge_id"), doc.get("nonce"), sid)
        if token is None:
            return denied(reason, sid, fresh)
        return with_session(JSONResponse({"token": token.token_id}), sid, fresh)

    @app.get("/api/challenge")
    def challenge(request: Request) -> Response:
        sid, fresh = session_of(request)
        token = request.query_params.get("token")
        result, reason = service.fetch_challenge(token, sid)
        if result is None:
            return denied(reason, sid, fresh)
        tiles = [
            f"{config.asset_prefix}/{result.captcha_id}/{i}"
            for i in range(image_bank.TILES_PER_CHALLENGE)
        ]
        response = JSONResponse(
            {
                "captcha_id": result.captcha_id,
                "prompt": result.prompt,
                "tiles": tiles,
                "expires_in_ms": result.ttl_ms,
            }
        )
        return with_session(response, sid, fresh)

    @app.post("/api/answer")
    async def answer(request: Request) -> Response:
        sid, fresh = session_of(request)
        doc = await body_json(request)
        if doc is None:
            return with_session(JSONResponse(BAD_REQUEST, status_code=400), sid, fresh)
        passed = service.answer(doc.get("captcha_id"), doc.get("selections"))
        return with_session(JSONResponse({"pass": passed}), sid, fresh)

    @app.get(config.asset_prefix + "/{captcha_id}/{tile_index}")
    def tile(request: Request, captcha_id: str, tile_index: str) -> Response:
        sid, fresh = session_of(request)
        try:
            index = int(tile_index)
        except ValueError:
            index = -1
        data, media_type = service.tile_bytes(captcha_id, index)
        if data is None:
            return denied("tile_not_live", sid, fresh)
        return with_session(Response(content=data, media_type=media_type), sid, fresh)

    return app
