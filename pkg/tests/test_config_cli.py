import json

import pytest
from hypothesis import given, strategies as st

from fermi_rpa.cli import COLUMNS, main
from fermi_rpa.config import ConfigError, PotentialSpec, RunConfig

triples = st.tuples(*[st.integers(-9, 9)] * 3).filter(any)
floats = st.floats(0.01, 50.0, allow_nan=False)


@given(
    mode=st.sampled_from(["scan", "sweep-n", "q-convergence", "dv-compare", "geometry-audit"]),
    kF=floats,
    R=floats,
    M=st.one_of(st.none(), st.integers(1, 20).map(lambda x: 2 * x)),
    routes=st.lists(st.sampled_from(["matrix", "series", "integral", "asymptotic"]), min_size=1, max_size=4, unique=True),
    q=st.lists(triples, max_size=4),
    kF_list=st.lists(floats, max_size=3),
    eps=st.one_of(st.none(), floats),
    pot=st.one_of(
        st.builds(PotentialSpec, st.just("const"), floats),
        st.builds(PotentialSpec, st.just("coulomb-sr"), floats),
        st.builds(lambda t: PotentialSpec("radial-table", table=tuple(t)),
                  st.lists(st.tuples(st.integers(1, 6), floats), max_size=3)),
        st.builds(lambda e: PotentialSpec("explicit", entries=tuple(e)),
                  st.lists(st.tuples(triples, floats), max_size=3)),
    ),
    fmt=st.sampled_from(["csv", "json"]),
)
def test_ini_round_trip(mode, kF, R, M, routes, q, kF_list, eps, pot, fmt):
    cfg = RunConfig(mode, kF=kF, R=R, M=M, routes=tuple(routes), q=tuple(q), kF_list=tuple(kF_list),
                    epsilon=eps, potential=pot, format=fmt, out="x.csv")
    text = cfg.to_ini()
    back = RunConfig.from_ini(text)
    assert back == cfg
    assert back.to_ini() == text


@pytest.mark.parametrize("text", [
    "[run]\nmode = nonsense\n",
    "[model]\nkf = 8\n",
    "[run]\nmode = scan\n[model]\nm = 7\n",
    "[run]\nmode = scan\n[extra]\nx = 1\n",
    "[run]\nmode = occupation\n",
    "[run]\nmode = scan\nroutes = matrix, bogus\n",
    "[run]\nmode = scan\n[potential]\npreset = yukawa:1,2\n",
    "[run]\nmode = scan\n[model]\nkf = abc\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        RunConfig.from_ini(text)


def test_preset_parsing():
    spec, R = PotentialSpec.parse_preset("coulomb-sr:0.5,2.5")
    assert spec == PotentialSpec("coulomb-sr", 0.5) and R == 2.5
    with pytest.raises(ConfigError):
        PotentialSpec.parse_preset("const:1")


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "[run]\nmode = scan\n[model]\ndelta = 0.5\n")
    assert main(["scan", "--config", bad]) == 1
    assert main(["scan", "--config", str(tmp_path / "missing.ini")]) == 1
    geo = write(tmp_path, "[run]\nmode = geometry-audit\n[model]\nkf = 8\nm = 32\n")
    assert main(["geometry-audit", "--config", geo]) == 2
    assert "build_patchset" in capsys.readouterr().err
    dv = write(tmp_path, "[run]\nmode = dv-compare\n[potential]\nkind = const\n")
    assert main(["dv-compare", "--config", dv]) == 1


def test_cli_zero_potential(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = occupation\nq = 0,0,5; 0,0,4; 3,0,4\n"
                "routes = matrix, series, integral, asymptotic\n[model]\nkf = 5\n"
                "[potential]\nkind = const\nvalue = 0\n")
    out = tmp_path / "o.json"
    assert main(["occupation", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 3
    for r in rows:
        assert list(r) == COLUMNS["occupation"]
        assert r["nq_matrix"] == r["nq_series"] == r["nq_integral"] == r["nq_asymptotic"] == 0
        assert r["Z"] == 1


def test_cli_csv_deterministic(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = scan\n[model]\nkf = 5\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["scan", "--config", cfg, "--out", str(a), "--no-timestamp"]) == 0
    assert main(["scan", "--config", cfg, "--out", str(b), "--no-timestamp", "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    raw = a.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[0] == ",".join(COLUMNS["scan"])
    c = tmp_path / "c.csv"
    main(["scan", "--config", cfg, "--out", str(c)])
    lines = c.read_text().splitlines()
    assert lines[0].startswith("# generated ")
    assert lines[1:] == raw.decode().splitlines()


def test_cli_potential_flag_and_sweep(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = sweep-n\nkf_list = 5, 8\n")
    out = tmp_path / "s.json"
    assert main(["sweep-n", "--config", cfg, "--potential", "const:1.0,2.5", "--out", str(out), "--format", "json"]) == 0
    rows = json.loads(out.read_text())
    assert [r["N"] for r in rows] == [515, 2109]
    assert all(r["max_route_gap"] < 1e-8 for r in rows)


def test_cli_dv_compare(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = dv-compare\nkf_list = 50\nq_offsets = 0.5\n"
                "[potential]\npreset = coulomb-sr:1.0,2.5\n")
    out = tmp_path / "d.json"
    assert main(["dv-compare", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    (row,) = json.loads(out.read_text())
    assert 0.35 <= row["ratio"] <= 0.65


def test_cli_geometry_audit(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = geometry-audit\n[model]\nkf = 20\nm = 8\n")
    out = tmp_path / "g.json"
    assert main(["geometry-audit", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 8 and all(r["corridor_ok"] == 1 for r in rows)


def test_cli_q_convergence(tmp_path):
    cfg = write(tmp_path, "[run]\nmode = q-convergence\nmu_grid = 0, 1, 10\n[model]\nkf = 5\n")
    out = tmp_path / "q.json"
    assert main(["q-convergence", "--config", cfg, "--out", str(out), "--format", "json"]) == 0
    rows = json.loads(out.read_text())
    assert rows and all(0 <= r["max_gap"] <= r["Q0_at_0"] + 1e-12 for r in rows)
