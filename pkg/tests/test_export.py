"""Tests for snapshot, loss-log, image and summary files."""

import json

import numpy as np
import pytest

from src.errors import DimensionMismatchError, ImageFormatError, NonGridSnapshotError
from src.export import (
    Snapshot,
    append_loss_row,
    export_run_summary,
    export_snapshot,
    grid_layout,
    read_loss_log,
    read_pgm,
    read_snapshot,
    render_planar,
    snapshot_filename,
    write_pgm,
)
from src.models import LossReport
from src.problems.domains import cell_centers


def grid_snapshot(n=30, rho=None, t=0.5):
    axis = cell_centers(0.0, 1.0, n)
    mesh = np.meshgrid(axis, axis, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    count = len(points)
    if rho is None:
        rho = np.exp(-((points - 0.31) ** 2).sum(axis=1) / 0.01)
    return Snapshot(
        t=t,
        points=points,
        rho=rho,
        phi=np.sin(points[:, 0]),
        g=np.cos(points[:, 1]),
        v=np.column_stack([points[:, 1], -points[:, 0]]),
        weights=np.full(count, 1.0 / count),
    )


class TestSnapshots:
    """Tests for snapshot CSV files."""

    def test_round_trip_keeps_nine_digits(self, tmp_path):
        """Test that every field survives to nine significant digits."""
        snapshot = grid_snapshot(n=6)
        loaded = read_snapshot(export_snapshot(snapshot, tmp_path / "s.csv"))
        assert loaded.t == snapshot.t
        for name in ("points", "rho", "phi", "g", "v"):
            assert np.allclose(getattr(loaded, name), getattr(snapshot, name), rtol=1e-8, atol=0)

    def test_header_columns(self, tmp_path):
        """Test the planar column layout."""
        path = export_snapshot(grid_snapshot(n=2), tmp_path / "s.csv")
        assert path.read_text().splitlines()[0] == "t,x0,x1,rho,phi,g,v0,v1"

    def test_non_finite_values_rejected(self, tmp_path):
        """Test that NaN fields are not written."""
        snapshot = grid_snapshot(n=2)
        snapshot.rho[0] = np.nan
        with pytest.raises(DimensionMismatchError):
            export_snapshot(snapshot, tmp_path / "s.csv")

    def test_mass(self):
        """Test the weighted mass of a snapshot."""
        snapshot = grid_snapshot(n=4, rho=np.full(16, 3.0))
        assert snapshot.mass() == pytest.approx(3.0)

    def test_filename(self):
        """Test snapshot file names with two decimals."""
        assert snapshot_filename(0.25) == "snapshot_t0.25.csv"
        assert snapshot_filename(1.0) == "snapshot_t1.00.csv"


class TestRendering:
    """Tests for planar snapshot rendering."""

    def test_image_size_and_peak(self, tmp_path):
        """Test a 30x30 image whose brightest pixel sits at the density peak."""
        snapshot = grid_snapshot(n=30)
        pixels = read_pgm(render_planar(snapshot, tmp_path / "rho.pgm"), expected_shape=(30, 30))
        assert pixels.shape == (30, 30)
        assert pixels.max() == 255.0 and pixels.min() == 0.0
        row, col = np.unravel_index(np.argmax(pixels), pixels.shape)
        peak = snapshot.points[np.argmax(snapshot.rho)]
        assert col == int(peak[0] * 30)
        assert row == 29 - int(peak[1] * 30)

    def test_constant_field_is_black(self, tmp_path):
        """Test that a constant density renders all zeros."""
        snapshot = grid_snapshot(n=5, rho=np.zeros(25))
        pixels = read_pgm(render_planar(snapshot, tmp_path / "zero.pgm"), expected_shape=None)
        assert np.count_nonzero(pixels) == 0

    def test_non_grid_rejected(self, tmp_path):
        """Test that scattered points cannot be rendered."""
        snapshot = grid_snapshot(n=3)
        snapshot.points = snapshot.points[[0, 1, 2, 3, 4, 5, 6, 7, 7]]
        with pytest.raises(NonGridSnapshotError):
            render_planar(snapshot, tmp_path / "bad.pgm")

    def test_three_dimensional_rejected(self):
        """Test that surface snapshots are not planar."""
        with pytest.raises(NonGridSnapshotError):
            grid_layout(np.zeros((4, 3)))


class TestPGM:
    """Tests for PGM reading and writing."""

    def test_raw_round_trip(self, tmp_path):
        """Test that P5 images keep their 8-bit values."""
        pixels = np.arange(28 * 28).reshape(28, 28) % 256
        loaded = read_pgm(write_pgm(tmp_path / "img.pgm", pixels))
        assert np.array_equal(loaded, pixels.astype(np.float64))

    def test_plain_with_comment_and_maxval(self, tmp_path):
        """Test a P2 image with a comment, rescaled from maxval 15."""
        path = tmp_path / "plain.pgm"
        path.write_text("P2\n# tiny\n2 2\n15\n0 15\n5 10\n")
        pixels = read_pgm(path, expected_shape=(2, 2))
        assert np.allclose(pixels, [[0.0, 255.0], [85.0, 170.0]])

    def test_bad_magic(self, tmp_path):
        """Test that non-PGM files are rejected."""
        path = tmp_path / "img.ppm"
        path.write_text("P3\n2 2\n255\n" + "0 " * 12)
        with pytest.raises(ImageFormatError):
            read_pgm(path, expected_shape=None)

    def test_wrong_shape(self, tmp_path):
        """Test that a 10x10 image is rejected when 28x28 is expected."""
        path = write_pgm(tmp_path / "small.pgm", np.zeros((10, 10)))
        with pytest.raises(ImageFormatError):
            read_pgm(path)

    def test_truncated_pixels(self, tmp_path):
        """Test that missing pixel data is rejected."""
        path = tmp_path / "short.pgm"
        path.write_text("P2\n3 3\n255\n1 2 3\n")
        with pytest.raises(ImageFormatError):
            read_pgm(path, expected_shape=None)


class TestLossLogAndSummary:
    """Tests for the loss log and the run summary."""

    def test_loss_log_round_trip(self, tmp_path):
        """Test header, row order and values of the loss log."""
        path = tmp_path / "loss.csv"
        rows = [
            LossReport(iter=i, L_c=1.0 / (i + 1), L_hj=0.5, L_ic=0.25, L_bc=0.0, total=2.0, W_M=0.1)
            for i in range(3)
        ]
        for row in rows:
            append_loss_row(path, row)
        assert path.read_text().splitlines()[0] == "iter,L_c,L_hj,L_ic,L_bc,total,W_M"
        loaded = read_loss_log(path)
        assert [row.iteration for row in loaded] == [0, 1, 2]
        assert loaded[2].continuity == pytest.approx(1.0 / 3.0, rel=1e-8)

    def test_summary_json(self, tmp_path):
        """Test that the summary is written as JSON in a new directory."""
        path = export_run_summary({"preset": "A", "cost": 0.5}, tmp_path / "out" / "summary.json")
        assert json.loads(path.read_text()) == {"preset": "A", "cost": 0.5}
