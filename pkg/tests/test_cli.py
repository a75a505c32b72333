import json
import subprocess
import sys

import pytest

from fqnmr import __version__
from fqnmr.cli import main
from fqnmr.config import ConfigError, RunConfig, parse_overrides
from fqnmr.io import read_table


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


class TestConfig:
    def test_defaults_load(self):
        cfg = RunConfig.load(None, {})
        assert cfg["protocol"]["scheme"] == "dd"
        assert cfg.setup().qubit.loop_side == 2e-6

    def test_digest_ignores_output_and_threads(self):
        a = RunConfig.load(None, {})
        b = RunConfig.load(None, parse_overrides(["output.directory=x", "numerics.threads=4"]))
        c = RunConfig.load(None, parse_overrides(["environment.b_ex=5e-3"]))
        assert a.digest() == b.digest() != c.digest()

    @pytest.mark.parametrize("items", [["qubit.nope=1"], ["nosection.key=1"], ["qubitgap=1"],
                                       ["qubit.gap_hz=1", "qubit.gap_hz=2"]])
    def test_bad_overrides(self, items):
        with pytest.raises(ConfigError):
            parse_overrides(items)

    def test_repeated_identical_override(self):
        assert parse_overrides(["protocol.n=2", "protocol.n=2"]) == {("protocol", "n"): "2"}

    @pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[qubit]\nbogus = 1\n",
                                      "[protocol]\nn = 3\n", "[qubit]\nvisibility = 1.5\n",
                                      "[rf]\noffset = -1\n"])
    def test_rejects_file(self, tmp_path, text):
        p = tmp_path / "bad.ini"
        p.write_text(text)
        with pytest.raises(ConfigError):
            RunConfig.load(str(p), {})

    def test_env_var(self, tmp_path, monkeypatch):
        p = tmp_path / "c.ini"
        p.write_text("[environment]\nb_ex = 1.8e-3\n")
        monkeypatch.setenv("FQNMR_CONFIG", str(p))
        assert RunConfig.load(None, {}).setup().env.b_ex == 1.8e-3

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            RunConfig.load("/nonexistent/cfg.ini", {})


class TestCli:
    def test_version(self):
        out = subprocess.run([sys.executable, "-m", "fqnmr", "--version"], capture_output=True,
                             text=True, check=True).stdout
        assert __version__ in out

    def test_query_outputs(self, tmp_path, capsys):
        rc, out, _ = run(capsys, "query", "min-density", "--out", str(tmp_path),
                         "--resolution", "0.25e-6", "--set", "protocol.scheme=ramsey")
        assert rc == 0
        summary = json.loads(out)
        assert summary["scheme"] == "ramsey" and summary["rho_min_cm3"] > 0
        digest = RunConfig.load(None, parse_overrides(
            ["numerics.resolution=0.25e-6", "protocol.scheme=ramsey"])).digest()
        csv_text = (tmp_path / "query.csv").read_text()
        assert f"# config_sha256 {digest}" in csv_text
        assert json.loads((tmp_path / "query.json").read_text())["config_sha256"] == digest
        assert (tmp_path / "config.resolved.ini").exists()

    def test_min_number(self, tmp_path, capsys):
        rc, out, _ = run(capsys, "query", "min-number", "--out", str(tmp_path),
                         "--set", "sample.kind=b", "--set", "sample.width=1e-6")
        assert rc == 0 and json.loads(out)["n_min"] > 0

    def test_min_number_needs_small_sample(self, tmp_path, capsys):
        rc, _, err = run(capsys, "query", "min-number", "--out", str(tmp_path))
        assert rc == 2 and "sample.kind" in err

    def test_no_signal_exit_code(self, tmp_path, capsys):
        rc, _, err = run(capsys, "query", "min-density", "--out", str(tmp_path),
                         "--resolution", "0.25e-6", "--set", "protocol.scheme=ramsey",
                         "--set", "protocol.saturation=full")
        assert rc == 1 and "NoSignalError" in err

    def test_conflicting_override(self, tmp_path, capsys):
        rc, _, err = run(capsys, "query", "min-density", "--out", str(tmp_path),
                         "--convention", "dephasing=block", "--set", "conventions.dephasing=total")
        assert rc == 2 and "conflicting" in err

    @pytest.mark.parametrize("args", [["--set", "qubit.bogus=1"], ["--convention", "units=cgs"],
                                      ["--convention", "dephasing"], ["--threads", "0"],
                                      ["--set", "qubit.visibility=abc"]])
    def test_config_errors(self, tmp_path, capsys, args):
        rc, _, _ = run(capsys, "query", "min-density", "--out", str(tmp_path), *args)
        assert rc == 2

    def test_capacity_exit_code(self, tmp_path, capsys):
        rc, _, err = run(capsys, "query", "min-density", "--out", str(tmp_path),
                         "--set", "qubit.loop_side=10e-6", "--resolution", "20e-9")
        assert rc == 1 and "CapacityError" in err

    def test_fig4_zero_current(self, tmp_path, capsys):
        rc, _, _ = run(capsys, "figure", "fig4", "--out", str(tmp_path))
        assert rc == 0
        _, rows = read_table(tmp_path / "fig4.csv")
        zero = [r for r in rows if float(r["normalized_current"]) == 0.0]
        assert zero and all(float(r["depolarization_ratio"]) == 0.0 for r in zero)
        assert (tmp_path / "fig4.png").stat().st_size > 0

    def test_threads_byte_identical(self, tmp_path, capsys):
        outs = []
        for k in ("1", "3"):
            d = tmp_path / k
            rc, _, _ = run(capsys, "figure", "fig7", "--out", str(d), "--threads", k,
                           "--resolution", "0.25e-6", "--no-plots")
            assert rc == 0
            outs.append((d / "fig7.csv").read_bytes())
        assert outs[0] == outs[1]
        assert not (tmp_path / "1" / "fig7.png").exists()

    def test_selfcheck(self, capsys):
        rc, out, _ = run(capsys, "selfcheck")
        assert rc == 0
        lines = out.splitlines()
        assert sum(l.startswith("PASS ") for l in lines) == 4
        assert lines[-1] == "selfcheck PASSED"
