"""Command-line replays with the documented flag spellings, determinism of
certificate documents, and the parallel-jobs path."""

import json

import pytest

from choreocert.certificates import parse_document
from choreocert.cli import EXIT_OK, main


@pytest.mark.slow
class TestVerbatimInvocations:
    def test_gerver_flags(self, tmp_path):
        out = tmp_path / "gerver.cert"
        code = main(["prove", "--system", "gerver", "--method", "krawczyk",
                     "--h", "0.002", "--order", "6", "--delta", "1e-7",
                     "--out", str(out)])
        assert code == EXIT_OK
        body = parse_document(out.read_text())
        assert body["verdict"] == "UniqueZero"
        assert body["method"] == "krawczyk"
        assert main(["verify", "--cert", str(out), "--quiet"]) == EXIT_OK

    def test_chain6_split_step_flags(self, tmp_path):
        out = tmp_path / "chain6.cert"
        code = main(["prove", "--system", "chain6", "--method", "krawczyk",
                     "--h-point", "0.0025", "--h-set", "0.001",
                     "--order", "9", "--out", str(out)])
        assert code == EXIT_OK
        body = parse_document(out.read_text())
        assert body["verdict"] == "UniqueZero"
        assert float.fromhex(body["parameters"]["h_point"]) == 0.0025
        assert float.fromhex(body["parameters"]["h_set"]) == 0.001
        assert main(["verify", "--cert", str(out), "--quiet"]) == EXIT_OK

    def test_generic_chain_four_bodies(self, tmp_path):
        # the four-body chain in generic coordinates (vx0, x1, vy1)
        out = tmp_path / "chain4.cert"
        code = main(["prove", "--system", "chain", "--bodies", "4",
                     "--a", "0.157029944461", "--method", "krawczyk",
                     "--h", "0.002", "--order", "6", "--delta", "1e-7",
                     "--candidate", "1.87193510824,1.382857,0.584872579881",
                     "--out", str(out)])
        assert code == EXIT_OK
        body = parse_document(out.read_text())
        assert body["verdict"] == "UniqueZero"


class TestDeterminism:
    def test_identical_flags_give_identical_documents(self, tmp_path):
        args = ["prove", "--system", "eight", "--method", "newton",
                "--h", "0.01", "--order", "7", "--delta", "1e-6"]
        a = tmp_path / "a.cert"
        b = tmp_path / "b.cert"
        assert main(args + ["--out", str(a)]) == EXIT_OK
        assert main(args + ["--out", str(b)]) == EXIT_OK

        def strip_wall_clock(text: str) -> str:
            return "\n".join(line for line in text.splitlines()
                             if "wall_clock" not in line)

        assert strip_wall_clock(a.read_text()) == strip_wall_clock(b.read_text())
        assert a.read_text() != "" and b.read_text() != ""


@pytest.mark.slow
class TestParallelJobs:
    def test_two_systems_in_parallel(self, tmp_path):
        code = main(["prove", "--system", "eight,gerver", "--jobs", "2",
                     "--out", str(tmp_path)])
        assert code == EXIT_OK
        for name in ("eight.cert", "gerver.cert"):
            body = parse_document((tmp_path / name).read_text())
            assert body["verdict"] == "UniqueZero"


class TestRoundingEnv:
    def test_hardware_falls_back_with_warning(self, monkeypatch):
        from choreocert.interval import rounding_backend
        monkeypatch.setenv("CHOREO_ROUNDING", "hardware")
        with pytest.warns(RuntimeWarning):
            assert rounding_backend() == "nudge"
        monkeypatch.setenv("CHOREO_ROUNDING", "nudge")
        assert rounding_backend() == "nudge"
        monkeypatch.setenv("CHOREO_ROUNDING", "bogus")
        with pytest.raises(ValueError):
            rounding_backend()

    def test_certificates_record_the_backend(self, tmp_path):
        out = tmp_path / "e.cert"
        assert main(["prove", "--system", "eight", "--out", str(out)]) == EXIT_OK
        body = json.loads(out.read_text().split("\n# ")[0])
        assert body["environment"]["rounding_backend"] == "nudge"
