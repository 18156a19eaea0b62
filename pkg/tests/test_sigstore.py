from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from odcheck import CorruptSignatureError, SignatureError, SignatureStore, load_signature, save_signature
from odcheck.sigstore import ChangeRecord, Signature

from helpers import random_signature

GOLDEN = "ODSIG 1\ncategory default\nlssc 1\nrec 1 1 1\n"


class TestStoreBasics:
    def test_fresh_store_is_empty(self, tmp_path):
        store = SignatureStore.open(tmp_path / "s.odsig", "default")
        assert store.get_count() is None
        assert store.get_record(1) is None

    def test_put_then_get(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        assert store.get_record(1) == ChangeRecord(1, 1, 1)

    def test_get_past_count_is_miss(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        assert store.get_record(2) is None

    def test_miss_on_empty(self):
        assert SignatureStore("default").get_record(1) is None

    def test_non_dense_key_rejected(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        with pytest.raises(SignatureError):
            store.put_record(ChangeRecord(3, 2, 1))

    def test_duplicate_key_rejected(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        with pytest.raises(SignatureError):
            store.put_record(ChangeRecord(1, 1, 1))

    def test_fetch_counter(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        store.get_record(1)
        store.get_record(2)
        assert store.fetch_count == 2

    def test_bad_category_name(self):
        with pytest.raises(SignatureError):
            SignatureStore("has space")


class TestCount:
    def test_set_and_get(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        store.set_count(1)
        assert store.get_count() == 1

    def test_zero_records(self):
        store = SignatureStore("default")
        store.set_count(0)
        assert store.get_count() == 0

    def test_count_mismatch(self):
        store = SignatureStore("default")
        store.put_record(ChangeRecord(1, 1, 1))
        with pytest.raises(SignatureError):
            store.set_count(2)

    def test_double_set(self):
        store = SignatureStore("default")
        store.set_count(0)
        with pytest.raises(SignatureError):
            store.set_count(0)

    def test_frozen_store_rejects_records(self):
        store = SignatureStore("default")
        store.set_count(0)
        with pytest.raises(SignatureError):
            store.put_record(ChangeRecord(1, 1, 1))


class TestFileFormat:
    def test_golden_bytes(self, tmp_path):
        path = tmp_path / "golden.odsig"
        store = SignatureStore.create(path, "default")
        store.put_record(ChangeRecord(1, 1, 1))
        store.set_count(1)  # freezing saves
        assert path.read_text() == GOLDEN

    def test_round_trip(self, tmp_path):
        path = tmp_path / "sig.odsig"
        sig = Signature("cat-a", [ChangeRecord(1, 2, -3), ChangeRecord(2, 1, 9)], 2)
        save_signature(sig, path)
        assert load_signature(path) == sig

    def test_open_loads_existing(self, tmp_path):
        path = tmp_path / "sig.odsig"
        path.write_text(GOLDEN)
        store = SignatureStore.open(path, "default")
        assert store.get_count() == 1
        assert store.get_record(1) == ChangeRecord(1, 1, 1)

    def test_open_rejects_category_mismatch(self, tmp_path):
        path = tmp_path / "sig.odsig"
        path.write_text(GOLDEN)
        with pytest.raises(CorruptSignatureError):
            SignatureStore.open(path, "other")

    def test_create_discards_existing(self, tmp_path):
        path = tmp_path / "sig.odsig"
        path.write_text(GOLDEN)
        store = SignatureStore.create(path, "default")
        assert store.get_count() is None

    def test_save_requires_frozen(self, tmp_path):
        sig = Signature("default", [ChangeRecord(1, 1, 1)], None)
        with pytest.raises(SignatureError):
            save_signature(sig, tmp_path / "x.odsig")

    @settings(max_examples=100, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_random_round_trip(self, tmp_path_factory, rng):
        sig = random_signature(rng)
        path = tmp_path_factory.mktemp("sig") / "s.odsig"
        save_signature(sig, path)
        assert load_signature(path) == sig


class TestCorruption:
    @pytest.mark.parametrize(
        "content",
        [
            "",
            "ODSIG 2\ncategory d\nlssc 0\n",
            "ODSIG 1\nlssc 0\n",
            "ODSIG 1\ncategory d\n",
            "ODSIG 1\ncategory d\nlssc x\n",
            "ODSIG 1\ncategory d\nlssc -1\n",
            "ODSIG 1\ncategory d\nlssc 1\n",  # record missing
            "ODSIG 1\ncategory d\nlssc 0\nrec 1 1 1\n",  # extra record
            "ODSIG 1\ncategory d\nlssc 1\nrec 2 1 1\n",  # key not dense
            "ODSIG 1\ncategory d\nlssc 1\nrec 1 0 1\n",  # id not positive
            "ODSIG 1\ncategory d\nlssc 1\nrec 1 1\n",  # short record
            "ODSIG 1\ncategory d\nlssc 1\nrec 1 1 1",  # no final newline
            "ODSIG 1\ncategory d\nlssc 2\nrec 1 1 1\nrec 1 2 2\n",  # repeated key
        ],
    )
    def test_structural_corruption(self, tmp_path, content):
        path = tmp_path / "bad.odsig"
        path.write_text(content)
        with pytest.raises(CorruptSignatureError):
            load_signature(path)

    def test_every_truncation_detected(self, tmp_path):
        path = tmp_path / "trunc.odsig"
        data = GOLDEN.encode()
        for cut in range(len(data)):
            path.write_bytes(data[:cut])
            with pytest.raises(CorruptSignatureError):
                load_signature(path)

    def test_unreadable_path(self, tmp_path):
        with pytest.raises(CorruptSignatureError):
            load_signature(tmp_path / "does-not-exist.odsig")
