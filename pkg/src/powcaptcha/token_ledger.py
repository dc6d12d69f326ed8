"""Single-use token ledger: proof that a client paid the PoW cost.

Each solved challenge mints exactly one token, bound to the minting session.
A token redeems at most once, only in-window, only for its own session.
All operations are linearizable per token_id / challenge_id via one ledger
lock; contention is negligible at the scale this service runs at.

An optional append-only journal keeps the ledger honest across restarts.
"""
from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

DEFAULT_TOKEN_TTL_MS = 120_000
# Terminal entries linger for audit logging before purge removes them.
RETENTION_MS = 600_000


class TokenState(Enum):
    LIVE = "live"
    REDEEMED = "redeemed"
    EXPIRED = "expired"


class RedeemResult(Enum):
    REDEEMED = "redeemed"
    UNKNOWN = "unknown"
    ALREADY_REDEEMED = "already_redeemed"
    EXPIRED = "expired"
    SESSION_MISMATCH = "session_mismatch"


class AlreadyConsumedError(Exception):
    """The challenge_id already minted a token (PoW solution replay)."""


@dataclass
class PowToken:
    token_id: str
    session_id: str
    minted_at: int
    ttl_ms: int
    state: TokenState = TokenState.LIVE

    @property
    def expires_at(self) -> int:
        return self.minted_at + self.ttl_ms


@dataclass
class LedgerEntry:
    challenge_id: str
    token: PowToken
    redeemed_at: Optional[int] = None
    terminal_at: Optional[int] = field(default=None, repr=False)


class TokenLedger:
    """In-memory ledger with optional journal file for restart recovery."""

    def __init__(self, journal_path: Optional[Path] = None) -> None:
        self._lock = threading.Lock()
        self._by_token: dict[str, LedgerEntry] = {}
        self._by_challenge: dict[str, LedgerEntry] = {}
        # Tombstones survive purge so a challenge can never re-mint.
        self._consumed_challenges: set[str] = set()
        self._journal_path = Path(journal_path) if journal_path else None
        self._journal = None
        if self._journal_path is not None:
            if self._journal_path.exists():
                self._replay(self._journal_path)
            self._journal = self._journal_path.open("a")

    def _replay(self, path: Path) -> None:
        for line in path.read_text().splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "mint" and len(parts) == 6:
                challenge_id, token_id, session_id = parts[1], parts[2], parts[3]
                minted_at, ttl_ms = int(parts[4]), int(parts[5])
                token = PowToken(token_id, session_id, minted_at, ttl_ms)
                entry = LedgerEntry(challenge_id, token)
                self._by_token[token_id] = entry
                self._by_challenge[challenge_id] = entry
                self._consumed_challenges.add(challenge_id)
            elif parts[0] == "redeem" and len(parts) == 3:
                entry = self._by_token.get(parts[1])
                if entry is not None:
                    entry.token.state = TokenState.REDEEMED
                    entry.redeemed_at = int(parts[2])
                    entry.terminal_at = entry.redeemed_at

    def _append(self, line: str) -> None:
        if self._journal is not None:
            self._journal.write(line + "\n")
            self._journal.flush()

    def mint(
        self,
        challenge_id: str,
        session_id: str,
        now: int,
        ttl_ms: int = DEFAULT_TOKEN_TTL_MS,
    ) -> PowToken:
        """Consume a solved challenge and issue a Live token bound to the
        session. Raises AlreadyConsumedError on the second presentation of
        the same challenge_id, which is the replay defense for solutions."""
        if ttl_ms <= 0:
            raise ValueError(f"ttl_ms must be positive: {ttl_ms}")
        token_id = secrets.token_hex(16)
        with self._lock:
            if challenge_id in self._consumed_challenges:
                raise AlreadyConsumedError(challenge_id)
            token = PowToken(token_id, session_id, now, ttl_ms)
            entry = LedgerEntry(challenge_id, token)
            self._by_token[token_id] = entry
            self._by_challenge[challenge_id] = entry
            self._consumed_challenges.add(challenge_id)
            self._append(
                f"mint {challenge_id} {token_id} {session_id} {now} {ttl_ms}"
            )
            return token

    def redeem(self, token_id: str, session_id: str, now: int) -> RedeemResult:
        """Atomically spend a token. Exactly one of any number of concurrent
        redeems of the same token succeeds. The distinct failure results are
        for logging; the wire collapses them all to one denial."""
        with self._lock:
            entry = self._by_token.get(token_id)
            if entry is None:
                return RedeemResult.UNKNOWN
            token = entry.token
            if token.state is TokenState.REDEEMED:
                return RedeemResult.ALREADY_REDEEMED
            if now >= token.expires_at:
                if token.state is TokenState.LIVE:
                    token.state = TokenState.EXPIRED
                    entry.terminal_at = token.expires_at
                return RedeemResult.EXPIRED
            if token.state is TokenState.EXPIRED:
                return RedeemResult.EXPIRED
            if token.session_id != session_id:
                return RedeemResult.SESSION_MISMATCH
            token.state = TokenState.REDEEMED
            entry.redeemed_at = now
            entry.terminal_at = now
            self._append(f"redeem {token_id} {now}")
            return RedeemResult.REDEEMED

    def purge_expired(self, now: int, retention_ms: int = RETENTION_MS) -> int:
        """Drop terminal entries past the retention horizon. Live in-window
        tokens are never touched; Live tokens past expiry transition to
        Expired first and get purged once the horizon passes."""
        removed = 0
        with self._lock:
            for token_id in list(self._by_token):
                entry = self._by_token[token_id]
                token = entry.token
                if token.state is TokenState.LIVE and now >= token.expires_at:
                    token.state = TokenState.EXPIRED
                    entry.terminal_at = token.expires_at
                if (
                    token.state is not TokenState.LIVE
                    and entry.terminal_at is not None
                    and now >= entry.terminal_at + retention_ms
                ):
                    del self._by_token[token_id]
                    del self._by_challenge[entry.challenge_id]
                    removed += 1
        return removed

    def get(self, token_id: str) -> Optional[LedgerEntry]:
        with self._lock:
            return self._by_token.get(token_id)

    def __len__(self) -> int:
        with self._lock:
            return len(self._by_token)

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()
            self._journal = None
