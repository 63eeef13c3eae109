import hashlib
import json

import pytest

from wqed.errors import ConfigInvalid
from wqed.io import (
    as_int,
    as_number,
    file_checksum,
    load_config,
    require_keys,
    write_csv,
    write_manifest,
)


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"a": 1, "b": [1.5, "x"]}')
        assert load_config(str(path)) == {"a": 1, "b": [1.5, "x"]}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid, match="not found"):
            load_config(str(tmp_path / "nope.json"))

    def test_syntax_error_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"a": 1,\n "b": }')
        with pytest.raises(ConfigInvalid, match="line 2"):
            load_config(str(path))

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigInvalid, match="object"):
            load_config(str(path))


class TestRequireKeys:
    def test_accepts_exact_schema(self):
        require_keys({"a": 1, "b": 2}, ("a",), ("b",))

    def test_unknown_key_named(self):
        with pytest.raises(ConfigInvalid, match="typo"):
            require_keys({"a": 1, "typo": 2}, ("a",))

    def test_missing_key_named(self):
        with pytest.raises(ConfigInvalid, match="Omega"):
            require_keys({"a": 1}, ("a", "Omega"))

    def test_non_dict_rejected(self):
        with pytest.raises(ConfigInvalid, match="expected an object"):
            require_keys([1, 2], ("a",))


class TestScalars:
    def test_as_number(self):
        assert as_number({"x": 3}, "x") == 3.0
        assert as_number({"x": 2.5}, "x") == 2.5

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigInvalid):
            as_number({"x": True}, "x")

    def test_string_is_not_a_number(self):
        with pytest.raises(ConfigInvalid):
            as_number({"x": "3"}, "x")

    def test_as_int_rejects_float(self):
        assert as_int({"n": 4}, "n") == 4
        with pytest.raises(ConfigInvalid):
            as_int({"n": 4.0}, "n")


class TestWriteCsv:
    def test_rfc4180_line_endings(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(str(path), ("a", "b"), [(1, 2.5)])
        raw = path.read_bytes()
        assert raw == b"a,b\r\n1,2.5\r\n"

    def test_quoting(self, tmp_path):
        path = tmp_path / "q.csv"
        write_csv(str(path), ("x",), [('he said "hi", twice',)])
        assert path.read_bytes() == b'x\r\n"he said ""hi"", twice"\r\n'

    def test_float_format_locale_free(self, tmp_path):
        path = tmp_path / "f.csv"
        write_csv(str(path), ("v",), [(1234567.25,), (1e-12,), (True,)])
        lines = path.read_text().splitlines()
        assert lines[1] == "1234567.25"
        assert lines[2] == "1e-12"
        assert lines[3] == "true"

    def test_rewrite_is_byte_identical(self, tmp_path):
        rows = [(i, i * 0.1) for i in range(50)]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(str(p1), ("i", "x"), rows)
        write_csv(str(p2), ("i", "x"), rows)
        assert p1.read_bytes() == p2.read_bytes()


class TestManifest:
    def test_checksum_matches_hashlib(self, tmp_path):
        path = tmp_path / "blob.bin"
        path.write_bytes(b"abc" * 1000)
        assert file_checksum(str(path)) == hashlib.sha256(
            b"abc" * 1000).hexdigest()

    def test_manifest_written_and_sorted(self, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(str(path), {"z": 1, "a": {"q": 2}})
        text = path.read_text()
        assert json.loads(text) == {"z": 1, "a": {"q": 2}}
        assert text.index('"a"') < text.index('"z"')
        assert not (tmp_path / "manifest.json.tmp").exists()
