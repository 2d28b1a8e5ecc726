import numpy as np
import pytest

from choreocert.cli import (
    EXIT_INTEGRATOR,
    EXIT_NO_ZERO,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_DISAGREE,
    main,
)


@pytest.fixture(scope="module")
def eight_cert(tmp_path_factory):
    path = tmp_path_factory.mktemp("certs") / "eight.cert"
    code = main(["prove", "--system", "eight", "--method", "newton",
                 "--h", "0.01", "--order", "7", "--delta", "1e-6",
                 "--out", str(path)])
    assert code == EXIT_OK
    return path


class TestProve:
    def test_eight_replay_flags(self, eight_cert):
        text = eight_cert.read_text()
        assert '"verdict": "UniqueZero"' in text

    def test_eight_records_crossing_validity_note(self, eight_cert):
        from choreocert.certificates import parse_document
        from choreocert.interval import Interval
        body = parse_document(eight_cert.read_text())
        # the reduction needs the first body away from the origin on the
        # section; the certificate records the verified distance enclosure
        note = body["crossing_notes"]["first_body_distance_squared"]
        dist2 = Interval.from_hex(*note)
        assert dist2.lo > 1.0  # crossing happens near radius 1.08

    def test_unknown_system_is_usage_error(self, capsys):
        with pytest.raises(SystemExit):
            main(["prove"])  # --system required
        assert main(["prove", "--system", "chain"]) == EXIT_USAGE

    def test_expected_no_zero(self, tmp_path):
        shifted = [0.347116768716 + 0.01, 0.532724944657 + 0.01]
        args = ["prove", "--system", "eight", "--method", "newton",
                "--h", "0.01", "--order", "7", "--delta", "1e-6",
                "--candidate", ",".join(repr(v) for v in shifted),
                "--out", str(tmp_path / "off.cert")]
        assert main(args) == EXIT_NO_ZERO
        assert main(args + ["--expect-no-zero"]) == EXIT_OK


class TestVerify:
    def test_verify_agrees(self, eight_cert):
        assert main(["verify", "--cert", str(eight_cert), "--quiet"]) == EXIT_OK

    def test_verify_detects_tampering(self, eight_cert, tmp_path):
        import json
        from choreocert.certificates import parse_document
        body = parse_document(eight_cert.read_text())
        body["verdict"] = "NoZero"
        bad = tmp_path / "tampered.cert"
        bad.write_text(json.dumps(body))
        assert main(["verify", "--cert", str(bad),
                     "--quiet"]) == EXIT_VERIFY_DISAGREE


class TestEmitCurve:
    def test_eight_curve(self, eight_cert, tmp_path):
        out = tmp_path / "curve.txt"
        seg = tmp_path / "segment.txt"
        code = main(["emit-curve", "--cert", str(eight_cert),
                     "--out", str(out), "--segment-out", str(seg)])
        assert code == EXIT_OK
        data = np.loadtxt(out)
        assert data.shape[1] == 3
        # closed curve through the origin, two lobes
        r = np.hypot(data[:, 1], data[:, 2])
        assert r.min() < 1e-12
        # reflection symmetry of the sample set to 1e-9
        from scipy.spatial import cKDTree
        tree = cKDTree(data[:, 1:3])
        for mirrored in (data[:, 1:3] * [1, -1], data[:, 1:3] * [-1, 1]):
            dist, _ = tree.query(mirrored)
            assert dist.max() < 1e-9
        segdata = np.loadtxt(seg)
        assert segdata.shape[1] == 7


class TestRefine:
    def test_refine_eight(self, capsys):
        code = main(["refine", "--system", "eight", "--guess", "0.35,0.53"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "0.3471168" in out

    def test_refine_garbage_diverges(self):
        assert main(["refine", "--system", "eight",
                     "--guess", "10,10"]) == EXIT_INTEGRATOR


class TestConvexityCommand:
    def test_from_certificate(self, eight_cert, tmp_path):
        out = tmp_path / "conv.cert"
        code = main(["convexity", "--cert", str(eight_cert),
                     "--out", str(out)])
        assert code == EXIT_OK
        assert main(["verify", "--cert", str(out), "--quiet"]) == EXIT_OK

    def test_no_inline_requires_cert(self):
        assert main(["convexity", "--no-inline"]) == EXIT_USAGE

    def test_wrong_certificate_kind(self, tmp_path, eight_cert):
        conv = tmp_path / "c.cert"
        assert main(["convexity", "--cert", str(eight_cert),
                     "--out", str(conv)]) == EXIT_OK
        assert main(["convexity", "--cert", str(conv)]) == EXIT_USAGE
