import json

import numpy as np
import pytest

from fellgrid import io
from fellgrid.algebra import random_section
from fellgrid.bundle import MatrixBundle, TwistedLineBundle
from fellgrid.cli import main, run_suite
from fellgrid.generators import random_bundle, random_morphism
from fellgrid.groupoid import pair_groupoid, validate
from fellgrid.linalg import Tolerance
from fellgrid.morphism import algebraize
from fellgrid.section import Section


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def pair2(tmp_path):
    """A pair(2) groupoid file, a line bundle over it and the golden section."""
    g = write(tmp_path / "g.json", io.groupoid_to_dict(pair_groupoid(2)))
    b = write(tmp_path / "b.json", io.bundle_to_dict(TwistedLineBundle(pair_groupoid(2)), groupoid_ref="g.json"))
    vals = [[k, [[1.0, 0.0]]] for k in (0, 1, 2)]
    s = write(tmp_path / "s.json", {"bundle": "b.json", "values": vals})
    return tmp_path, g, b, s


# -- round trips ------------------------------------------------------------------------


def test_groupoid_round_trip():
    g = pair_groupoid(3)
    assert io.groupoid_from_dict(json.loads(io.dump_json(io.groupoid_to_dict(g)))) == g


def test_bundle_and_section_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(10):
        b = random_bundle(rng, max_arrows=30)
        a = random_section(b, rng)
        d = json.loads(json.dumps(io.section_to_dict(a)))
        back = io.section_from_dict(d)
        assert back.bundle == b
        assert back.array_equal(a)


def test_morphism_round_trip():
    rng = np.random.default_rng(1)
    src = MatrixBundle(pair_groupoid(2), [1, 2])
    m = random_morphism(src, rng, kind="fold")
    back = io.morphism_from_dict(json.loads(json.dumps(io.morphism_to_dict(m))))
    a = random_section(src, rng)
    assert algebraize(back)(a).array_equal(algebraize(m)(a))


def test_dump_rounds_to_12_digits():
    text = io.dump_json({"x": 1 / 3})
    assert json.loads(text)["x"] == 0.333333333333


def test_parse_errors_carry_location(tmp_path):
    bad = write(tmp_path / "bad.json", {"units": [0], "source": [0], "range": [0], "inverse": "oops", "product": []})
    with pytest.raises(io.ParseError) as exc:
        io.load_groupoid(bad)
    assert "bad.json" in str(exc.value)
    assert "$.inverse" in str(exc.value)


def test_cross_reference_errors(pair2):
    tmp, g, b, s = pair2
    s2 = write(tmp / "s2.json", {"bundle": "missing.json", "values": []})
    with pytest.raises(io.CrossReferenceError):
        io.load_section(s2)
    s3 = write(tmp / "s3.json", {"bundle": "b.json", "values": [[9, [[1.0, 0.0]]]]})
    with pytest.raises(io.InputError):
        io.load_section(s3)
    with pytest.raises(io.CrossReferenceError):
        io.load_negligible({"null_arrows": [4]}, n_arrows=4)


# -- commands -----------------------------------------------------------------------------


def test_norms_command(capsys, pair2):
    _, _, _, s = pair2
    code, out, _ = run(capsys, "norms", s)
    assert code == 0
    got = json.loads(out)
    assert got == {"inf": 1.0, "1": 2.0, "2": 1.41421356237, "b": 1.61803398875, "i": 2.0}


def test_conv_with_zero(capsys, pair2):
    tmp, _, _, s = pair2
    z = write(tmp / "z.json", {"bundle": "b.json", "values": []})
    out_path = tmp / "sub" / "c.json"
    out_path.parent.mkdir()
    code, _, _ = run(capsys, "conv", z, s, "--out", out_path)
    assert code == 0
    c = io.load_section(str(out_path))
    assert c.array_equal(Section.zeros(c.bundle))


def test_conv_golden(capsys, pair2):
    tmp, _, _, s = pair2
    code, out, _ = run(capsys, "conv", s, s, "--out", tmp / "c.json")
    assert code == 0
    c = io.load_section(str(tmp / "c.json"))
    np.testing.assert_array_equal(c.to_pair_matrix(), [[2, 1], [1, 1]])


def test_ess_norm_command(capsys, tmp_path):
    from fellgrid.groupoid import disjoint_union

    g = disjoint_union(pair_groupoid(2), pair_groupoid(2))
    b = write(tmp_path / "b.json", io.bundle_to_dict(TwistedLineBundle(g)))
    vals = [[k, [[1.0, 0.0]]] for k in (0, 1, 4, 5, 6)]
    s = write(tmp_path / "s.json", {"bundle": "b.json", "values": vals})
    n = write(tmp_path / "n.json", {"null_arrows": [1]})
    code, out, _ = run(capsys, "ess-norm", s, n)
    assert code == 0
    got = json.loads(out)
    assert got["H"] == [0, 1, 2, 3]
    assert got["G"] == [4, 5, 6, 7]
    assert got["value"] == 1.61803398875


def test_pullback_command(capsys, tmp_path):
    rng = np.random.default_rng(2)
    src = MatrixBundle(pair_groupoid(2), [1, 2])
    m = random_morphism(src, rng, kind="fold")
    write(tmp_path / "src.json", io.bundle_to_dict(src))
    write(tmp_path / "tgt.json", io.bundle_to_dict(m.target))
    mp = write(tmp_path / "m.json", io.morphism_to_dict(m, source_ref="src.json", target_ref="tgt.json"))
    a = random_section(src, rng)
    sp = write(tmp_path / "a.json", io.section_to_dict(a, bundle_ref="src.json"))
    code, _, _ = run(capsys, "pullback", mp, sp, "--out", tmp_path / "img.json")
    assert code == 0
    img = io.load_section(str(tmp_path / "img.json"))
    assert img.allclose(algebraize(m)(a), Tolerance(1e-10, 1e-10))


def test_validate_command(capsys, pair2, tmp_path):
    _, g, b, s = pair2
    code, out, _ = run(capsys, "validate", g, b, s, "--trials", 20)
    assert code == 0
    assert json.loads(out)["passed"] is True

    broken = io.groupoid_to_dict(pair_groupoid(2))
    broken["product"] = [t if t != [1, 3, 1] else [1, 3, 0] for t in broken["product"]]
    bad = write(tmp_path / "bad.json", broken)
    code, out, _ = run(capsys, "validate", bad)
    assert code == 1
    laws = {v["law"] for v in json.loads(out)["files"][0]["violations"]}
    assert "associativity" in laws


def test_input_errors_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "norms", tmp_path / "nope.json")
    assert code == 2
    assert "nope.json" in err
    (tmp_path / "junk.json").write_text("{not json")
    code, _, _ = run(capsys, "norms", tmp_path / "junk.json")
    assert code == 2


def test_groupoid_and_bundle_commands(capsys, tmp_path):
    code, _, _ = run(capsys, "groupoid", "pair", 3, "--out", tmp_path / "g.json")
    assert code == 0
    assert validate(io.load_groupoid(str(tmp_path / "g.json"))).valid
    code, _, _ = run(capsys, "groupoid", "cyclic", 2, "--out", tmp_path / "c.json")
    code, _, _ = run(capsys, "groupoid", "product", tmp_path / "g.json", tmp_path / "c.json", "--out", tmp_path / "p.json")
    assert code == 0
    assert io.load_groupoid(str(tmp_path / "p.json")).n == 18
    code, _, _ = run(capsys, "bundle", "matrix", tmp_path / "g.json", "--dims", "1,2,3", "--out", tmp_path / "b.json")
    assert code == 0
    assert io.load_bundle(str(tmp_path / "b.json")).dims == {0: 1, 4: 2, 8: 3}
    code, _, _ = run(capsys, "bundle", "matrix", tmp_path / "g.json", "--dims", "1,2")
    assert code == 2


def test_suite_command_and_determinism(capsys, tmp_path, monkeypatch):
    write(tmp_path / "g.json", io.groupoid_to_dict(pair_groupoid(3)))
    b = write(tmp_path / "b.json", io.bundle_to_dict(MatrixBundle(pair_groupoid(3), [1, 2, 3]), groupoid_ref="g.json"))
    outs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("FELLGRID_THREADS", threads)
        code, out, _ = run(capsys, "suite", b, "--seed", 42, "--trials", 60)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["passed"] is True
    assert all("anchor" in c for c in rep["checks"])


def test_run_suite_threads_do_not_change_report():
    b = random_bundle(np.random.default_rng(3), max_arrows=20)
    one = run_suite(b, seed=5, trials=50, tol=Tolerance(), threads=1).to_dict()
    four = run_suite(b, seed=5, trials=50, tol=Tolerance(), threads=4).to_dict()
    assert io.dump_json(one) == io.dump_json(four)
