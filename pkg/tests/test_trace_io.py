"""Unit tests for trace, path and report files."""

import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from errors import AmbiguousGeodesicError, DomainError, TraceFormatError
from polarimeter import CountTrace, IntensityTrace, SweepConfig, simulate_counts, sweep_eta
from spinops import SU2Params
from theory import solid_angle
from trace_io import atomic_write_text, dumps_json, read_path_file, read_trace_csv, write_json, write_trace_csv

DATA_DIR = Path(__file__).parent.parent / "data" / "paths"


class TestTraceCsv:
    """Test trace CSV files."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.p = SU2Params(math.pi / 3, math.pi / 4, math.pi / 6)

    def test_intensity_trace_is_lossless(self, tmp_path: Path) -> None:
        trace = sweep_eta(0.8, self.p, SweepConfig(64))
        path = write_trace_csv(trace, tmp_path / "sweep.csv")
        loaded = read_trace_csv(path)

        assert isinstance(loaded, IntensityTrace)
        assert np.array_equal(loaded.etas, trace.etas)
        assert np.array_equal(loaded.intensities, trace.intensities)
        assert loaded.closure() is None

    def test_file_layout(self, tmp_path: Path) -> None:
        path = write_trace_csv(sweep_eta(0.8, self.p, SweepConfig(16)), tmp_path / "sweep.csv")
        raw = path.read_bytes()

        assert raw.startswith(b"eta,intensity\n")
        assert b"\r" not in raw
        assert len(raw.decode().splitlines()) == 17

    def test_count_trace(self, tmp_path: Path) -> None:
        counts = simulate_counts(0.8, self.p, SweepConfig(32), 1000, seed=4)
        path = write_trace_csv(counts, tmp_path / "counts.csv")
        loaded = read_trace_csv(path)

        assert isinstance(loaded, CountTrace)
        assert loaded.shots == 1000
        assert np.array_equal(loaded.counts_up, counts.counts_up)
        assert path.read_text().splitlines()[0] == "eta,intensity,counts_up,shots"

    def test_write_is_deterministic(self, tmp_path: Path) -> None:
        trace = sweep_eta(0.3, self.p, SweepConfig(32))
        a = write_trace_csv(trace, tmp_path / "a.csv").read_bytes()
        b = write_trace_csv(trace, tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_creates_parent_directories(self, tmp_path: Path) -> None:
        path = write_trace_csv(sweep_eta(0.3, self.p, SweepConfig(16)), tmp_path / "nested" / "dir" / "t.csv")
        assert path.exists()

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(TraceFormatError):
            read_trace_csv(tmp_path / "absent.csv")

    @pytest.mark.parametrize(
        "text",
        [
            "theta,intensity\n0.0,0.5\n",
            "eta,intensity\n0.0,0.5\n1.0,\n",
            "eta,intensity\n1.0,0.5\n0.5,0.5\n",
            "eta,intensity\n0.0,1.5\n",
            "eta,intensity,counts_up,shots\n0.0,0.5,5,10\n1.0,0.5,10,20\n",
            "eta,intensity,counts_up,shots\n0.0,0.5,15,10\n",
            "",
        ],
    )
    def test_malformed_trace(self, tmp_path: Path, text: str) -> None:
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(TraceFormatError):
            read_trace_csv(path)


class TestPathFiles:
    """Test geodesic path files."""

    def test_octant_yaml(self) -> None:
        path = read_path_file(DATA_DIR / "octant.yaml")
        assert len(path.vertices) == 4
        assert solid_angle(path).omega == pytest.approx(math.pi / 2)

    def test_open_arc_json(self) -> None:
        path = read_path_file(DATA_DIR / "open_arc.json")
        assert len(path.vertices) == 3
        assert not path.closed

    def test_vertices_are_normalised(self, tmp_path: Path) -> None:
        source = tmp_path / "near.yaml"
        source.write_text("vertices:\n  - [0, 0, 1.0000000001]\n  - [1, 0, 0]\n")
        path = read_path_file(source)
        assert np.linalg.norm(path.vertices[0]) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        "text",
        [
            "vertices:\n  - [0, 0, 2]\n  - [1, 0, 0]\n",
            "vertices:\n  - [0, 0]\n  - [1, 0, 0]\n",
            "vertices:\n  - [0, 0, a]\n",
            "points:\n  - [0, 0, 1]\n",
            "vertices:\n  - [1, 0, 0]\n  - [0, 1, 0]\n",
            "vertices: [[0, 0, 1]\n",
        ],
    )
    def test_malformed_path(self, tmp_path: Path, text: str) -> None:
        source = tmp_path / "bad.yaml"
        source.write_text(text)
        with pytest.raises(TraceFormatError):
            read_path_file(source)

    def test_antipodal_vertices(self, tmp_path: Path) -> None:
        source = tmp_path / "antipodal.yaml"
        source.write_text("vertices:\n  - [0, 0, 1]\n  - [0, 0, -1]\n")
        with pytest.raises(AmbiguousGeodesicError):
            read_path_file(source)

    def test_missing_path_file(self, tmp_path: Path) -> None:
        with pytest.raises(TraceFormatError):
            read_path_file(tmp_path / "absent.yaml")


class TestJson:
    """Test deterministic JSON reports."""

    def test_sorted_with_trailing_newline(self) -> None:
        text = dumps_json({"b": 1, "a": {"d": None, "c": 0.5}})
        assert text.endswith("}\n")
        assert text.index('"a"') < text.index('"b"')
        assert text.index('"c"') < text.index('"d"')

    def test_non_finite_rejected(self) -> None:
        with pytest.raises(DomainError):
            dumps_json({"values": [1.0, math.nan]})

    def test_write_to_file(self, tmp_path: Path) -> None:
        target = tmp_path / "out" / "report.json"
        text = write_json({"x": 1.5}, target)
        assert target.read_text() == text
        assert json.loads(text) == {"x": 1.5}

    def test_write_to_stdout(self, capsys: pytest.CaptureFixture[str]) -> None:
        write_json({"x": 1})
        assert json.loads(capsys.readouterr().out) == {"x": 1}

    def test_atomic_write_leaves_no_temp_files(self, tmp_path: Path) -> None:
        atomic_write_text(tmp_path / "a.txt", "first")
        atomic_write_text(tmp_path / "a.txt", "second")
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
        assert (tmp_path / "a.txt").read_text() == "second"
