import hashlib
import itertools
import json
import struct
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractalmark.errors import (BpsOutOfRange, EmptyFeatures, IndexOutOfRange, NotPrime,
                                TooFewShares)
from fractalmark.provenance import (DEFAULT_ARTIST, METADATA_SCHEMA, MerkleProof, NftMetadata,
                                    ProvenanceRecord, emit_metadata, feature_leaves, fingerprint,
                                    fixed_point, is_prime, lagrange_at_zero, merkle_build,
                                    merkle_levels, merkle_prove, merkle_verify,
                                    metadata_from_watermark, normalize_timestamp, royalty,
                                    serialize_features, shamir_reconstruct, shamir_split)
from fractalmark.watermark import WatermarkMatrix

GOLDEN = Path(__file__).parent / "golden" / "nft_metadata.json"
TABLE = [1.88, 2067.82, 3552.45]
TABLE_TS = "2025-01-01 T12:34:56Z"


def H(b):
    return hashlib.sha256(b).digest()


def _leaves(n, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.bytes(int(rng.integers(1, 40))) for _ in range(n)]


# Merkle

def test_single_leaf_root():
    assert merkle_build([b"A"]) == H(b"A")
    p = merkle_prove([b"A"], 0)
    assert p.path == () and merkle_verify(p, b"A")


def test_two_leaves():
    root = merkle_build([b"A", b"B"])
    assert root == H(H(b"A") + H(b"B"))
    p = merkle_prove([b"A", b"B"], 0)
    assert p.path == (H(b"B"),) and merkle_verify(p, b"A")


def test_seven_leaves_every_index_and_tamper():
    leaves = _leaves(7, 1)
    for i, leaf in enumerate(leaves):
        proof = merkle_prove(leaves, i)
        assert merkle_verify(proof, leaf)
        for j in range(len(leaf)):
            bad = bytearray(leaf)
            bad[j] ^= 0xFF
            assert not merkle_verify(proof, bytes(bad))


def test_seven_leaves_root_by_hand():
    L = [bytes([i]) for i in range(7)]
    h = [H(x) for x in L] + [H(L[6])]
    l1 = [H(h[i] + h[i + 1]) for i in range(0, 8, 2)]
    l2 = [H(l1[0] + l1[1]), H(l1[2] + l1[3])]
    assert merkle_build(L) == H(l2[0] + l2[1])


def test_exhaustive_sizes_1_to_64():
    for n in range(1, 65):
        leaves = _leaves(n, n)
        levels = merkle_levels(leaves)
        depth = len(levels) - 1
        assert depth == (n - 1).bit_length()
        for i, leaf in enumerate(leaves):
            proof = merkle_prove(leaves, i)
            assert len(proof.path) == depth
            assert merkle_verify(proof, leaf)
            assert merkle_verify(MerkleProof.from_dict(proof.to_dict()), leaf)


def test_single_bit_flips_change_root():
    rng = np.random.default_rng(9)
    leaves = _leaves(64, 3)
    root = merkle_build(leaves)
    for _ in range(100):
        i = int(rng.integers(64))
        bit = int(rng.integers(len(leaves[i]) * 8))
        bad = bytearray(leaves[i])
        bad[bit // 8] ^= 1 << (bit % 8)
        tampered = leaves[:i] + [bytes(bad)] + leaves[i + 1:]
        assert merkle_build(tampered) != root
        assert not merkle_verify(merkle_prove(leaves, i), bytes(bad))


def test_merkle_index_errors():
    with pytest.raises(IndexOutOfRange):
        merkle_prove([b"a", b"b"], 2)
    with pytest.raises(IndexOutOfRange):
        merkle_build([])


# Shamir

def test_k1_constant_polynomial():
    sh = shamir_split(42, 1, 5, 257, seed=0)
    assert all(y == 42 for _, y in sh.shares)


def test_hand_example_p17():
    sh = shamir_split(5, 2, 3, 17, coefficients=[3])
    assert sh.shares == ((1, 8), (2, 11), (3, 14))
    for pair in itertools.combinations(sh.shares, 2):
        assert shamir_reconstruct(list(pair), 17) == 5


def test_all_three_of_five_subsets():
    sh = shamir_split(123, 3, 5, 257, seed=4)
    for sub in itertools.combinations(sh.shares, 3):
        assert shamir_reconstruct(list(sub), 257, 3) == 123


def test_k_minus_one_shares_hide_secret():
    # for every pair of share values, each candidate secret is explained by exactly one polynomial
    p, k = 257, 3
    xs = (2, 5)
    for y1, y2 in [(0, 0), (17, 200), (256, 1)]:
        consistent = set()
        for s in range(p):
            # f(x) = s + a1 x + a2 x^2; two equations fix (a1, a2) uniquely for each s
            found = 0
            for a1 in range(p):
                a2n = (y1 - s - a1 * xs[0]) % p
                a2 = a2n * pow(xs[0] ** 2, -1, p) % p
                if (s + a1 * xs[1] + a2 * xs[1] ** 2) % p == y2:
                    found += 1
            assert found == 1
            consistent.add(s)
        assert len(consistent) == p


def test_shamir_errors():
    with pytest.raises(NotPrime):
        shamir_split(1, 2, 3, 15)
    with pytest.raises(TooFewShares):
        shamir_split(1, 4, 3, 17)
    sh = shamir_split(9, 3, 5, 17, seed=1)
    with pytest.raises(TooFewShares):
        shamir_reconstruct(list(sh.shares[:2]), 17, 3)


def test_big_prime_round_trip():
    p = 2 ** 521 - 1
    assert is_prime(p)
    secret = int.from_bytes(H(b"token"), "big")
    sh = shamir_split(secret, 2, 3, p, seed=7)
    assert shamir_reconstruct(list(sh.shares[1:]), p, 2) == secret


@given(st.integers(0, 256), st.integers(1, 5), st.integers(0, 2 ** 31))
def test_reconstruct_property(secret, k, seed):
    sh = shamir_split(secret, k, 5, 257, seed=seed)
    assert shamir_reconstruct(sh) == secret
    assert lagrange_at_zero(list(sh.shares[-k:]), 257) == secret


# royalties

@pytest.mark.parametrize("price,bps,out", [(10000, 250, 250), (12345, 0, 0), (999, 10000, 999), (199, 50, 0)])
def test_royalty(price, bps, out):
    assert royalty(price, bps) == out


def test_royalty_range():
    with pytest.raises(BpsOutOfRange):
        royalty(100, 10001)
    with pytest.raises(BpsOutOfRange):
        royalty(100, -1)


# fingerprints

def test_fingerprint_deterministic_and_sensitive():
    v = [3, 200, 17, 0, 255]
    assert fingerprint(v).token_id == fingerprint(list(v)).token_id
    w = list(v)
    w[2] += 1
    assert fingerprint(w).token_id != fingerprint(v).token_id


def test_empty_features():
    with pytest.raises(EmptyFeatures):
        fingerprint([])
    with pytest.raises(EmptyFeatures):
        serialize_features([])


def test_serialization_oracle():
    ints = [1_880_000, 2_067_820_000, 3_552_450_000]
    assert fixed_point(TABLE) == ints
    assert serialize_features(TABLE) == struct.pack("<I", 3) + struct.pack("<3q", *ints)
    assert feature_leaves(TABLE)[1] == struct.pack("<Iq", 1, ints[1])
    assert fixed_point([-0.0000005, 0.0000005]) == [-1, 1]


# metadata

def _table_metadata():
    return emit_metadata(fingerprint(TABLE), *TABLE, timestamp=TABLE_TS)


def test_metadata_golden_file():
    assert _table_metadata().to_json() == GOLDEN.read_text()


def test_metadata_fields_and_oracle_token():
    d = json.loads(_table_metadata().to_json())
    assert list(d) == ["fractal_dimension", "turbulence_mean_power", "turbulence_variance_power",
                       "timestamp", "artist", "token_id", "merkle_root"]
    assert d["fractal_dimension"] == 1.88 and d["turbulence_mean_power"] == 2067.82
    assert d["turbulence_variance_power"] == 3552.45
    assert d["artist"] == DEFAULT_ARTIST == "MindSpore-VGG-Pollock"
    assert d["timestamp"] == "2025-01-01T12:34:56Z"
    ints = [1_880_000, 2_067_820_000, 3_552_450_000]
    assert d["token_id"] == H(struct.pack("<I", 3) + struct.pack("<3q", *ints)).hex()
    leaf = [H(struct.pack("<Iq", i, v)) for i, v in enumerate(ints)]
    assert d["merkle_root"] == H(H(leaf[0] + leaf[1]) + H(leaf[2] + leaf[2])).hex()
    jsonschema.validate(d, METADATA_SCHEMA)


def test_metadata_byte_identical_and_two_decimals():
    assert _table_metadata().to_json() == _table_metadata().to_json()
    md = emit_metadata(fingerprint([1]), 1.0, 2.5, 3.0, timestamp=TABLE_TS)
    assert '"fractal_dimension": 1.00' in md.to_json()
    assert NftMetadata.from_json(md.to_json()).artist == DEFAULT_ARTIST


def test_metadata_from_watermark():
    W = WatermarkMatrix(*TABLE)
    md = metadata_from_watermark(fingerprint(TABLE), W, timestamp=TABLE_TS)
    assert md.to_json() == GOLDEN.read_text()


def test_timestamps():
    assert normalize_timestamp("2025-01-01T12:34:56+02:00") == "2025-01-01T10:34:56Z"
    assert normalize_timestamp("2025-01-01T12:34:56") == "2025-01-01T12:34:56Z"
    with pytest.raises(ValueError):
        normalize_timestamp("yesterday")


def test_provenance_record_has_no_proof_field():
    rec = ProvenanceRecord("ab" * 32, "cd" * 32, "owner", "2025-01-01T00:00:00Z", 250)
    assert "zkProof" not in rec.to_dict() and rec.to_dict()["royalty_bps"] == 250
