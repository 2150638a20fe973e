import pytest

from clonesift.corpus import (
    CorpusManifest,
    FunctionUnit,
    apply_minloc,
    canonical_id,
    extract_functions,
    load_manifest,
    store_manifest,
)
from clonesift.errors import DuplicateId, FormatViolation, UnsupportedLanguage

from conftest import TWO_FUNCTIONS_C, make_unit


class TestExtract:
    def test_two_top_level_functions(self):
        units = extract_functions(TWO_FUNCTIONS_C, "two.c", "c")
        assert [(u.start_line, u.end_line) for u in units] == [(3, 6), (8, 13)]
        assert units[0].loc == 4
        assert units[1].loc == 6
        assert units[0].text.startswith("int add")

    def test_empty_file(self):
        assert extract_functions("", "empty.c", "c") == []
        assert extract_functions("   \n\n  ", "blank.c", "c") == []

    def test_struct_only_file_has_no_functions(self):
        src = "struct point {\n    int x;\n    int y;\n};\n\nenum color { RED, BLUE };\n"
        assert extract_functions(src, "types.c", "c") == []

    def test_unsupported_language(self):
        with pytest.raises(UnsupportedLanguage):
            extract_functions("def f(): pass", "f.py", "python")

    def test_deterministic(self):
        first = extract_functions(TWO_FUNCTIONS_C, "two.c", "c")
        second = extract_functions(TWO_FUNCTIONS_C, "two.c", "c")
        assert [u.triple for u in first] == [u.triple for u in second]
        assert [u.text for u in first] == [u.text for u in second]

    def test_braces_in_strings_and_comments_ignored(self):
        src = (
            'const char *msg(void) {\n'
            '    /* not a brace: { */\n'
            '    return "{{{";  // }\n'
            '}\n'
        )
        units = extract_functions(src, "s.c", "c")
        assert [(u.start_line, u.end_line) for u in units] == [(1, 4)]

    def test_unbalanced_braces_returns_prefix_with_diagnostic(self):
        src = TWO_FUNCTIONS_C + "\nint broken(int x) {\n    return x;\n"
        notes: list[str] = []
        units = extract_functions(src, "broken.c", "c", diagnostics=notes)
        assert len(units) == 2  # the two well-formed functions survive
        assert len(notes) == 1 and "unbalanced" in notes[0]

    def test_control_flow_not_extracted(self):
        src = (
            "int f(int x) {\n"
            "    if (x > 0) {\n"
            "        x--;\n"
            "    }\n"
            "    while (x) { x--; }\n"
            "    return x;\n"
            "}\n"
        )
        units = extract_functions(src, "cf.c", "c")
        assert [(u.start_line, u.end_line) for u in units] == [(1, 7)]

    def test_java_method_inside_class(self):
        src = (
            "class Calc {\n"
            "    int twice(int x) {\n"
            "        return 2 * x;\n"
            "    }\n"
            "}\n"
        )
        units = extract_functions(src, "Calc.java", "java")
        assert [(u.start_line, u.end_line) for u in units] == [(2, 4)]

    def test_regions_non_overlapping_and_sorted(self):
        units = extract_functions(TWO_FUNCTIONS_C, "two.c", "c")
        for prev, nxt in zip(units, units[1:]):
            assert prev.end_line < nxt.start_line


class TestMinloc:
    def test_excludes_below_threshold(self):
        unit = make_unit(end=5, text="int f(void) {\n1;\n2;\n3;\n}")
        assert apply_minloc([unit], 6) == []

    def test_zero_is_identity(self):
        units = [make_unit(end=5, text="x\n" * 5)]
        assert apply_minloc(units, 0) == units

    def test_boundary_kept(self):
        units = [
            make_unit(start=1, end=n, text="x\n" * n) for n in (9, 10, 11)
        ]
        kept = apply_minloc(units, 10)
        assert [u.loc for u in kept] == [10, 11]

    def test_idempotent_and_monotone(self):
        units = [make_unit(start=1, end=n, text="x\n" * n) for n in range(1, 30, 3)]
        once = apply_minloc(units, 7)
        assert apply_minloc(once, 7) == once
        for lower, higher in [(0, 5), (5, 12), (12, 25)]:
            assert set(u.id for u in apply_minloc(units, higher)) <= set(
                u.id for u in apply_minloc(units, lower)
            )


class TestCanonicalId:
    def test_deterministic(self):
        assert canonical_id("f.c", 10, 20) == canonical_id("f.c", 10, 20)

    def test_distinct_fields_distinct_ids(self):
        base = canonical_id("f.c", 10, 20)
        assert canonical_id("f.c", 10, 21) != base
        assert canonical_id("f.c", 11, 20) != base
        assert canonical_id("g.c", 10, 20) != base

    def test_survives_round_trip(self, tmp_path):
        unit = make_unit("f.c", 10, 12, "int f(void) {\n  return 1;\n}")
        manifest = CorpusManifest(label="rt", language="c", units=(unit,))
        store_manifest(manifest, tmp_path / "m.jsonl")
        loaded = load_manifest(tmp_path / "m.jsonl")
        assert loaded.units[0].id == unit.id


class TestManifestIO:
    def test_round_trip_identity(self, tmp_path):
        units = extract_functions(TWO_FUNCTIONS_C, "two.c", "c")
        extra = make_unit("three.c", 2, 4, "int g(void) {\n  return 2;\n}")
        manifest = CorpusManifest(label="demo", language="c",
                                  units=tuple(units) + (extra,), minloc_applied=0)
        path = tmp_path / "demo.jsonl"
        store_manifest(manifest, path)
        assert load_manifest(path) == manifest

    def test_duplicate_id_rejected(self, tmp_path):
        unit = make_unit()
        with pytest.raises(DuplicateId):
            CorpusManifest(label="dup", language="c", units=(unit, unit))

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"label": "x", "language": "c", "minloc_applied": 0}\n'
            '{"id": "abc", "path": "f.c", "start": 1, "text": "int f(void){}"}\n',
            encoding="utf-8",
        )
        with pytest.raises(FormatViolation) as err:
            load_manifest(path)
        assert "line 2" in str(err.value) and "end" in str(err.value)

    def test_loc_recomputed_not_trusted(self, tmp_path):
        unit = make_unit("f.c", 3, 7, "a\nb\nc\nd\ne")
        manifest = CorpusManifest(label="x", language="c", units=(unit,))
        path = tmp_path / "m.jsonl"
        store_manifest(manifest, path)
        assert load_manifest(path).units[0].loc == 5


class TestFunctionUnitInvariants:
    def test_line_invariants(self):
        with pytest.raises(ValueError):
            FunctionUnit(path="f.c", start_line=0, end_line=3, text="x")
        with pytest.raises(ValueError):
            FunctionUnit(path="f.c", start_line=5, end_line=4, text="x")

    def test_blank_text_rejected(self):
        with pytest.raises(ValueError):
            FunctionUnit(path="f.c", start_line=1, end_line=1, text="   \n ")

    def test_loc_formula(self):
        unit = make_unit(start=10, end=20, text="x\n" * 11)
        assert unit.loc == 11
