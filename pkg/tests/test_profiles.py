import pytest

from policylens.model import PolicyError, serialize_profile
from policylens.profiles import DATA_TYPES, build_profile_pack, load_profile_pack, write_profile_pack
from test_model import DATA_AD_3RD_NO, LOCATION_3RD_NO


def test_pack_size_and_ids():
    pack = build_profile_pack()
    ids = [p.profile_id for p in pack]
    assert len(pack) == 23 and ids == sorted(set(ids))
    assert sum(i.startswith("location-") for i in ids) == 8
    assert {i.split("-")[0] for i in ids} == set(DATA_TYPES)


def test_named_profiles_exact():
    pack = {p.profile_id: serialize_profile(p) for p in build_profile_pack()}
    for expected in (DATA_AD_3RD_NO, LOCATION_3RD_NO):
        got = dict(pack[expected["profile_id"]])
        got.pop("description")
        assert got == expected


def test_shipped_files_match_builder(vocab):
    assert load_profile_pack(hierarchy=vocab) == build_profile_pack()


def test_write_and_reload(tmp_path, vocab):
    paths = write_profile_pack(tmp_path)
    assert len(paths) == 23
    assert load_profile_pack(tmp_path, vocab) == build_profile_pack()


def test_bad_profile_reports_file(tmp_path):
    (tmp_path / "broken.json").write_text('{"schema_version": 1, "profile_id": "x", "policies": 3}')
    with pytest.raises(PolicyError, match="broken.json"):
        load_profile_pack(tmp_path)


def test_duplicate_ids_rejected(tmp_path):
    write_profile_pack(tmp_path, build_profile_pack()[:1])
    (tmp_path / "copy.json").write_bytes(next(tmp_path.glob("*.json")).read_bytes())
    with pytest.raises(ValueError, match="duplicate profile"):
        load_profile_pack(tmp_path)
