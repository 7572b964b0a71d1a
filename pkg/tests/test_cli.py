import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from isoholo.cli import CSV_HEADER, main
from isoholo.holonomy import closed_form_purity

LATITUDE = {"id": "lat", "model": "iontrap", "mode": "holonomy",
            "loop": {"latitude": {"theta0": np.pi / 3}}, "r": 0.5, "M": 20000}


def write(tmp_path, data, name="s.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def run(tmp_path, data, *extra):
    out = tmp_path / "out.txt"
    code = main(["run", write(tmp_path, data), "--out", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestRun:
    def test_holonomy_row(self, tmp_path):
        code, text = run(tmp_path, LATITUDE)
        assert code == 0
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        (row,) = rows(text)
        u = np.array([[float(row[f"u{i}{j}_re"]) + 1j * float(row[f"u{i}{j}_im"]) for j in (0, 1)] for i in (0, 1)])
        assert np.max(np.abs(u - [[0, 1], [-1, 0]])) < 1e-6
        assert float(row["omega_solid"]) == pytest.approx(np.pi)
        assert float(row["purity"]) == pytest.approx(closed_form_purity(0.5, np.pi), abs=1e-8)
        assert row["method"] == "exponential-product" and row["infidelity"] == ""

    def test_seventeen_digits(self, tmp_path):
        _, text = run(tmp_path, LATITUDE)
        assert rows(text)[0]["omega_solid"] == format(float(rows(text)[0]["omega_solid"]), ".17g")
        assert len(rows(text)[0]["omega_solid"].replace(".", "").lstrip("0")) == 17

    def test_sweep_purity_curve(self, tmp_path):
        scn = {"id": "sw", "model": "iontrap", "mode": "sweep", "loop": {"latitude": {"theta0": 0.1}},
               "r": 0.6, "sweep": {"parameter": "theta0", "from": 0.1, "to": 3.0, "count": 30}}
        code, text = run(tmp_path, scn, "--jobs", "1")
        assert code == 0
        out = rows(text)
        assert len(out) == 30
        assert [r["scenario_id"] for r in out] == [f"sw#{i}" for i in range(30)]
        for r in out:
            assert float(r["purity"]) == pytest.approx(closed_form_purity(0.6, float(r["omega_solid"])), abs=1e-8)

    def test_parallel_matches_serial(self, tmp_path):
        scn = {"id": "p", "model": "iontrap", "mode": "sweep", "loop": {"latitude": {"theta0": 0.5}},
               "r": 0.3, "M": 2000, "method": "wilson-link",
               "sweep": {"parameter": "r", "from": -1, "to": 1, "count": 6}}
        _, serial = run(tmp_path, scn, "--jobs", "1")
        _, parallel = run(tmp_path, scn, "--jobs", "3")
        assert serial == parallel

    def test_deterministic(self, tmp_path):
        assert run(tmp_path, LATITUDE)[1] == run(tmp_path, LATITUDE)[1]

    def test_json_format(self, tmp_path):
        code, text = run(tmp_path, {**LATITUDE, "M": 2000, "input": "pure"}, "--format", "json")
        assert code == 0
        (row,) = json.loads(text)
        assert row["U"][0][1][0] == pytest.approx(1.0, abs=1e-6)
        assert row["bloch"] == pytest.approx([0.0, 0.0, -1.0], abs=1e-6)

    def test_outputs_filter(self, tmp_path):
        _, text = run(tmp_path, {**LATITUDE, "M": 200, "outputs": ["purity"]})
        (row,) = rows(text)
        assert row["u00_re"] == "" and row["bloch_x"] == "" and row["purity"] != ""

    def test_polygon_and_samples(self, tmp_path):
        poly = {**LATITUDE, "M": 2000, "loop": {"polygon": {"vertices": [[0.5, 0], [1.2, 0.4], [0.9, 1.3]]}}}
        assert run(tmp_path, poly)[0] == 0
        phi = np.linspace(0, 2 * np.pi, 401)
        pts = np.column_stack([np.full_like(phi, 1.0), phi]).tolist()
        code, text = run(tmp_path, {**LATITUDE, "loop": {"samples": {"points": pts}}, "chart": "equatorial"})
        assert code == 0
        assert float(rows(text)[0]["omega_solid"]) == pytest.approx(2 * np.pi * (1 - np.cos(1.0)), rel=1e-4)

    def test_dynamics_row(self, tmp_path):
        scn = {"id": "d", "model": "iontrap", "mode": "dynamics", "loop": {"latitude": {"theta0": 1.0}},
               "r": 1.0, "T": 100, "hamiltonian": "iontrap", "M": 2000}
        code, text = run(tmp_path, scn)
        assert code == 0
        row = rows(text)[0]
        assert 0 <= float(row["infidelity"]) < 1e-2
        assert float(row["purity"]) == pytest.approx(1.0, abs=1e-6)

    def test_custom_tabulated_frame(self, tmp_path):
        c, s = np.cos(0.3), np.sin(0.3)
        table = [{"coords": [0.0], "vectors": [[1, 0, 0], [0, 1, 0]]},
                 {"coords": [1.0], "vectors": [[c, s, 0], [-s, c, 0]]}]
        scn = {"id": "t", "model": "custom", "mode": "holonomy", "frame": {"tabulated": table},
               "loop": {"samples": {"points": [[0.0], [1.0], [0.0]]}}, "r": 1.0, "M": 8,
               "method": "wilson-link"}
        code, text = run(tmp_path, scn)
        assert code == 0
        assert float(rows(text)[0]["u00_re"]) == pytest.approx(1.0)


class TestErrors:
    def test_r_out_of_range(self, tmp_path, capsys):
        code, _ = run(tmp_path, {**LATITUDE, "r": 2})
        assert code == 2
        assert "r:" in capsys.readouterr().err

    @pytest.mark.parametrize("mutate", [
        lambda d: d.update(colour="red"),
        lambda d: d.pop("model"),
        lambda d: d.update(M=4),
        lambda d: d.update(R=-1.5),
        lambda d: d.update(loop={"latitude": {"theta0": 1.0}, "polygon": {"vertices": [[0, 0]] * 3}}),
        lambda d: d.update(loop={"latitude": {"theta0": 1.0, "phi0": 0.0}}),
        lambda d: d.update(mode="sweep"),
        lambda d: d.update(mode="dynamics"),
        lambda d: d.update(weights=[0.5, 0.6]),
        lambda d: d.update(model="custom"),
        lambda d: d.update(chart="mars"),
    ])
    def test_schema_rejections(self, tmp_path, capsys, mutate):
        data = json.loads(json.dumps(LATITUDE))
        mutate(data)
        assert run(tmp_path, data)[0] == 2
        assert capsys.readouterr().err.strip()

    def test_bad_json(self, tmp_path):
        assert run(tmp_path, "{not json")[0] == 2

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json")]) == 2

    def test_loop_outside_chart(self, tmp_path, capsys):
        code, _ = run(tmp_path, {**LATITUDE, "chart": "equatorial", "loop": {"latitude": {"theta0": 0.01}}})
        assert code == 2
        assert "ChartDomainViolation" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path, capsys):
        table = [{"coords": [0.0], "vectors": [[1, 0, 0, 0], [0, 1, 0, 0]]},
                 {"coords": [1.0], "vectors": [[0, 0, 1, 0], [0, 0, 0, 1]]}]
        scn = {"id": "t", "model": "custom", "mode": "holonomy", "frame": {"tabulated": table},
               "loop": {"samples": {"points": [[0.0], [1.0], [0.0]]}}, "r": 0.5, "M": 8,
               "method": "wilson-link"}
        assert run(tmp_path, scn)[0] == 3
        assert "NoConvergence" in capsys.readouterr().err


class TestVerify:
    def test_pure_limit(self, capsys):
        assert main(["verify", "pure-limit"]) == 0
        assert capsys.readouterr().out.startswith("PASS pure-state-limit")

    def test_unknown(self, capsys):
        assert main(["verify", "nonexistent"]) == 1
        assert "UnknownCheck" in capsys.readouterr().err

    def test_list(self, capsys):
        assert main(["list-checks"]) == 0
        out = capsys.readouterr().out
        assert "eq18-closed-form" in out and "pure-limit" in out and len(out.splitlines()) == 10


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "isoholo", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "radians" in proc.stdout
