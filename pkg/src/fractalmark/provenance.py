"""Feature fingerprints, Merkle commitments, Shamir sharing, royalties and NFT metadata."""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (BpsOutOfRange, EmptyFeatures, IndexOutOfRange, NotPrime,
                     TooFewShares)

FIXED_POINT = 10 ** 6
DEFAULT_ARTIST = "MindSpore-VGG-Pollock"
METADATA_SCHEMA_ID = "fractalmark-meta/1"
METADATA_FIELDS = ("fractal_dimension", "turbulence_mean_power", "turbulence_variance_power",
                   "timestamp", "artist", "token_id", "merkle_root")


def _hash(data: bytes, algorithm: str = "sha256") -> bytes:
    return hashlib.new(algorithm, data).digest()


# --------------------------------------------------------------------------
# canonical serialization and fingerprints


def fixed_point(values) -> list[int]:
    """Round each feature to an integer number of millionths (half away from zero)."""
    out = []
    for v in np.asarray(values, dtype=np.float64).ravel():
        if not math.isfinite(v):
            raise ValueError("features must be finite")
        scaled = abs(float(v)) * FIXED_POINT
        q = int(math.floor(scaled + 0.5))
        out.append(q if v >= 0 else -q)
    return out


def serialize_features(values) -> bytes:
    """``uint32`` little-endian count followed by one signed ``int64`` per fixed-point feature."""
    ints = fixed_point(values)
    if not ints:
        raise EmptyFeatures("feature vector is empty")
    return struct.pack("<I", len(ints)) + struct.pack(f"<{len(ints)}q", *ints)


def feature_leaves(values) -> list[bytes]:
    """One Merkle leaf per feature: its index and fixed-point value, both little-endian."""
    return [struct.pack("<Iq", i, v) for i, v in enumerate(fixed_point(values))]


@dataclass(frozen=True)
class FeatureFingerprint:
    features: tuple
    token_id: bytes
    merkle_root: bytes

    @property
    def token_hex(self) -> str:
        return self.token_id.hex()

    @property
    def root_hex(self) -> str:
        return self.merkle_root.hex()

    def to_dict(self) -> dict:
        return {"features": list(self.features), "token_id": self.token_hex, "merkle_root": self.root_hex}


def fingerprint(features, algorithm: str = "sha256") -> FeatureFingerprint:
    vals = np.asarray(features, dtype=np.float64).ravel()
    if vals.size == 0:
        raise EmptyFeatures("feature vector is empty")
    token = _hash(serialize_features(vals), algorithm)
    root = merkle_build(feature_leaves(vals), algorithm)
    return FeatureFingerprint(tuple(float(v) for v in vals), token, root)


# --------------------------------------------------------------------------
# Merkle tree


def merkle_levels(leaves, algorithm: str = "sha256") -> list[list[bytes]]:
    """All tree levels, leaf hashes first; odd levels duplicate their last node."""
    if len(leaves) == 0:
        raise IndexOutOfRange("Merkle tree needs at least one leaf")
    level = [_hash(bytes(x), algorithm) for x in leaves]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
        level = [_hash(level[i] + level[i + 1], algorithm) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_build(leaves, algorithm: str = "sha256") -> bytes:
    return merkle_levels(leaves, algorithm)[-1][0]


@dataclass(frozen=True)
class MerkleProof:
    index: int
    path: tuple  # sibling hashes, bottom-up
    root: bytes

    def to_dict(self) -> dict:
        return {"index": self.index, "path": [p.hex() for p in self.path], "root": self.root.hex()}

    @classmethod
    def from_dict(cls, d) -> "MerkleProof":
        return cls(int(d["index"]), tuple(bytes.fromhex(p) for p in d["path"]), bytes.fromhex(d["root"]))


def merkle_prove(leaves, index: int, algorithm: str = "sha256") -> MerkleProof:
    if not 0 <= index < len(leaves):
        raise IndexOutOfRange(f"leaf index {index} outside 0..{len(leaves) - 1}")
    levels = merkle_levels(leaves, algorithm)
    path = []
    i = index
    for level in levels[:-1]:
        sib = i ^ 1
        path.append(level[sib] if sib < len(level) else level[i])
        i //= 2
    return MerkleProof(index, tuple(path), levels[-1][0])


def merkle_verify(proof: MerkleProof, leaf: bytes, algorithm: str = "sha256") -> bool:
    h = _hash(bytes(leaf), algorithm)
    i = proof.index
    for sib in proof.path:
        h = _hash(h + sib, algorithm) if i % 2 == 0 else _hash(sib + h, algorithm)
        i //= 2
    return h == proof.root


# --------------------------------------------------------------------------
# Shamir secret sharing


def is_prime(p: int) -> bool:
    from sympy import isprime

    return bool(isprime(int(p)))


@dataclass(frozen=True)
class ShamirShares:
    p: int
    k: int
    shares: tuple  # ((x, y), ...)

    def to_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "shares": [list(s) for s in self.shares]}

    def share_json(self, i: int) -> str:
        x, y = self.shares[i]
        return json.dumps({"p": self.p, "k": self.k, "x": x, "y": y}, sort_keys=True)


def _poly_eval(coeffs, x, p):
    acc = 0
    for a in reversed(coeffs):
        acc = (acc * x + a) % p
    return acc


def shamir_split(secret: int, k: int, n: int, p: int, seed=None, coefficients=None) -> ShamirShares:
    """Shares ``(i, f(i) mod p)`` for ``i = 1..n`` of a random degree ``k-1`` polynomial with ``f(0) = secret``.

    ``coefficients`` (a_1..a_{k-1}) overrides the random draw, for reproducible fixtures.
    """
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if not 1 <= k <= n:
        raise TooFewShares(f"need 1 <= k <= n, got k={k}, n={n}")
    if p <= n:
        raise NotPrime(f"modulus {p} must exceed the share count {n}")
    if not 0 <= secret < p:
        raise ValueError("secret must lie in [0, p)")
    if coefficients is None:
        rng = np.random.default_rng(seed)
        # 8 spare bytes make the modulo bias negligible for any p
        width = (p.bit_length() + 7) // 8 + 8
        coefficients = [int.from_bytes(rng.bytes(width), "little") % p for _ in range(k - 1)]
    elif len(coefficients) != k - 1:
        raise ValueError("need exactly k-1 coefficients")
    coeffs = [int(secret)] + [int(a) % p for a in coefficients]
    shares = tuple((i, _poly_eval(coeffs, i, p)) for i in range(1, n + 1))
    return ShamirShares(p, k, shares)


def lagrange_at_zero(points, p: int) -> int:
    total = 0
    for j, (xj, yj) in enumerate(points):
        num, den = 1, 1
        for m, (xm, _) in enumerate(points):
            if m != j:
                num = num * (-xm) % p
                den = den * (xj - xm) % p
        total = (total + yj * num * pow(den, -1, p)) % p
    return total


def shamir_reconstruct(shares, p: int | None = None, k: int | None = None) -> int:
    """Secret from at least ``k`` shares (a :class:`ShamirShares` or a list of ``(x, y)``)."""
    if isinstance(shares, ShamirShares):
        p = shares.p if p is None else p
        k = shares.k if k is None else k
        shares = shares.shares
    if p is None:
        raise ValueError("modulus p is required")
    pts = [(int(x), int(y)) for x, y in shares]
    if len({x for x, _ in pts}) != len(pts):
        raise ValueError("share indices must be distinct")
    need = k if k is not None else len(pts)
    if len(pts) < need or not pts:
        raise TooFewShares(f"need {need} shares, got {len(pts)}")
    return lagrange_at_zero(pts[:need], p)


# --------------------------------------------------------------------------
# royalties


def royalty(sale_price: int, basis_points: int) -> int:
    if not 0 <= basis_points <= 10_000:
        raise BpsOutOfRange(f"basis points {basis_points} outside 0..10000")
    if sale_price < 0:
        raise ValueError("sale price must be non-negative")
    return int(sale_price) * int(basis_points) // 10_000


# --------------------------------------------------------------------------
# metadata


def normalize_timestamp(ts=None) -> str:
    """ISO-8601 UTC with second precision and a ``Z`` suffix."""
    if ts is None:
        dt = datetime.now(timezone.utc)
    elif isinstance(ts, datetime):
        dt = ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)
    else:
        # tolerate "2025-01-01 T12:34:56Z" style spacing around the separator
        text = str(ts).strip().replace(" T", "T").replace("T ", "T").replace("Z", "+00:00")
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise ValueError(f"unparseable timestamp {ts!r}") from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


class _Fixed2(float):
    """Float that serializes with exactly two decimals."""

    def __repr__(self):
        return f"{float(self):.2f}"


def _fixed2(v: float) -> "_Fixed2":
    if not math.isfinite(v):
        raise ValueError("metadata numbers must be finite")
    return _Fixed2(round(float(v), 2))


@dataclass
class NftMetadata:
    fractal_dimension: float
    turbulence_mean_power: float
    turbulence_variance_power: float
    timestamp: str
    artist: str
    token_id: str
    merkle_root: str
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        parts = []
        for name in METADATA_FIELDS:
            v = getattr(self, name)
            if name in METADATA_FIELDS[:3]:
                parts.append(f'  "{name}": {_fixed2(v)!r}')
            else:
                parts.append(f"  {json.dumps(name)}: {json.dumps(v)}")
        return "{\n" + ",\n".join(parts) + "\n}\n"

    @classmethod
    def from_json(cls, text: str) -> "NftMetadata":
        d = json.loads(text)
        return cls(**{k: d[k] for k in METADATA_FIELDS})


def emit_metadata(fp: FeatureFingerprint, fractal_dimension: float, mean_power: float,
                  variance_power: float, artist: str = DEFAULT_ARTIST, timestamp=None) -> NftMetadata:
    """Metadata record; the three feature values use the watermark matrix's 8-bit units."""
    return NftMetadata(
        fractal_dimension=float(fractal_dimension),
        turbulence_mean_power=float(mean_power),
        turbulence_variance_power=float(variance_power),
        timestamp=normalize_timestamp(timestamp),
        artist=str(artist),
        token_id=fp.token_hex,
        merkle_root=fp.root_hex,
    )


def metadata_from_watermark(fp: FeatureFingerprint, W, artist: str = DEFAULT_ARTIST,
                            timestamp=None) -> NftMetadata:
    return emit_metadata(fp, W.D, W.mu, W.sigma, artist, timestamp)


METADATA_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": METADATA_SCHEMA_ID,
    "title": "fractalmark NFT metadata",
    "type": "object",
    "additionalProperties": False,
    "required": list(METADATA_FIELDS),
    "properties": {
        "fractal_dimension": {"type": "number"},
        "turbulence_mean_power": {"type": "number", "minimum": 0},
        "turbulence_variance_power": {"type": "number", "minimum": 0},
        "timestamp": {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$"},
        "artist": {"type": "string"},
        "token_id": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "merkle_root": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    },
}


@dataclass
class ProvenanceRecord:
    """Registration record; the zero-knowledge proof field is not produced and stays absent."""

    token_id: str
    merkle_root: str
    owner: str
    timestamp: str
    royalty_bps: int = 0

    def to_dict(self) -> dict:
        return {"token_id": self.token_id, "merkle_root": self.merkle_root, "owner": self.owner,
                "timestamp": self.timestamp, "royalty_bps": self.royalty_bps}
