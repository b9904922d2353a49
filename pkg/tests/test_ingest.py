import numpy as np
import pytest

from dataset_fakes import pamap2_rows, write_dsads, write_pamap2_file
from gbmcal import IngestError, SynthSpec, synth_generate
from gbmcal.errors import ConfigError
from gbmcal.ingest import Activity, IngestConfig, RecordingSegment, parse_dsads, parse_pamap2
from gbmcal.ingest.layouts import dsads_accel_columns, pamap2_accel_columns


def test_layout_columns():
    assert dsads_accel_columns("T") == (0, 1, 2)
    assert dsads_accel_columns("RA") == (9, 10, 11)
    assert dsads_accel_columns("LA") == (18, 19, 20)
    # PAMAP2: 1-based columns 5-7 are the hand +-16 g accelerometer
    assert pamap2_accel_columns("hand") == (4, 5, 6)
    assert pamap2_accel_columns("ankle") == (38, 39, 40)
    with pytest.raises(ValueError):
        dsads_accel_columns("XX")


class TestDsads:
    def test_counts_and_selection(self, tmp_path):
        write_dsads(tmp_path, segments=3)
        segs = parse_dsads(tmp_path, IngestConfig(dataset="dsads"))
        assert len(segs) == 8 * 4 * 3  # a05 is not mapped
        assert all(len(s) == 125 and s.sample_rate_hz == 25 for s in segs)
        assert {s.activity for s in segs} == set(Activity)
        assert {s.raw_code for s in segs} == {"a01", "a09", "a12", "a15"}

    def test_reads_right_arm_columns(self, tmp_path):
        write_dsads(tmp_path, activities=("a12",), subjects=(3,), segments=1)
        segs = parse_dsads(tmp_path, IngestConfig(dataset="dsads"))
        raw = np.loadtxt(tmp_path / "data" / "a12" / "p3" / "s01.txt", delimiter=",")
        np.testing.assert_array_equal(segs[0].accel, raw[:, 9:12])
        left = parse_dsads(tmp_path, IngestConfig(dataset="dsads", sensor="LA"))
        np.testing.assert_array_equal(left[0].accel, raw[:, 18:21])

    def test_order_is_sorted_and_stable(self, tmp_path):
        write_dsads(tmp_path)
        a = parse_dsads(tmp_path, IngestConfig(dataset="dsads"))
        b = parse_dsads(tmp_path, IngestConfig(dataset="dsads"))
        assert [s.source for s in a] == sorted(s.source for s in a)
        assert all(x.same_data(y) for x, y in zip(a, b))

    def test_no_matching_activity(self, tmp_path):
        write_dsads(tmp_path, activities=("a02", "a03"))
        assert parse_dsads(tmp_path, IngestConfig(dataset="dsads")) == []

    def test_missing_directory(self, tmp_path):
        with pytest.raises(IngestError, match="does-not-exist"):
            parse_dsads(tmp_path / "does-not-exist", IngestConfig(dataset="dsads"))

    def test_short_file(self, tmp_path):
        write_dsads(tmp_path, activities=("a09",), subjects=(1,), segments=1, rows=124)
        with pytest.raises(IngestError, match="s01.txt"):
            parse_dsads(tmp_path, IngestConfig(dataset="dsads"))

    def test_malformed_line(self, tmp_path):
        write_dsads(tmp_path, activities=("a09",), subjects=(1,), segments=1)
        f = tmp_path / "data" / "a09" / "p1" / "s01.txt"
        lines = f.read_text().splitlines()
        lines[6] = lines[6].rsplit(",", 1)[0]
        f.write_text("\n".join(lines) + "\n")
        with pytest.raises(IngestError) as err:
            parse_dsads(tmp_path, IngestConfig(dataset="dsads"))
        assert err.value.line == 7 and "s01.txt" in str(err.value)

        lines[6] = lines[5].replace(",", ",x", 1)
        f.write_text("\n".join(lines) + "\n")
        with pytest.raises(IngestError, match="unparseable"):
            parse_dsads(tmp_path, IngestConfig(dataset="dsads"))

    def test_subject_filter(self, tmp_path):
        write_dsads(tmp_path, segments=1)
        segs = parse_dsads(tmp_path, IngestConfig(dataset="dsads", subjects=(2, 5)))
        assert {s.subject_id for s in segs} == {2, 5}


class TestPamap2:
    def write_subject(self, root, sid, ids, seed=0, edit=None):
        rows = pamap2_rows(ids, seed)
        if edit:
            edit(rows)
        write_pamap2_file(root / f"subject{sid}.dat", rows)
        return rows

    def test_split_at_transitions(self, tmp_path):
        ids = [4] * 150 + [0] * 30 + [4] * 120 + [1] * 200 + [6] * 100
        rows = self.write_subject(tmp_path, 101, ids)
        segs = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2"))
        walk = [s for s in segs if s.activity is Activity.WALK]
        assert [len(s) for s in walk] == [150, 120]
        assert walk[1].t_index[0] == 180
        assert all(s.sample_rate_hz == 100 for s in segs)
        np.testing.assert_allclose(walk[0].accel, rows[:150, 4:7], atol=5e-7)  # file holds 6 decimals

    def test_configured_subjects_only(self, tmp_path):
        ids = [1] * 100 + [4] * 100 + [6] * 100
        for sid in range(101, 110):
            self.write_subject(tmp_path, sid, ids, seed=sid)
        keep = (101, 102, 104, 105, 106, 107, 108)
        segs = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2", subjects=keep))
        assert sorted({s.subject_id for s in segs}) == list(keep)

    def test_missing_configured_subject(self, tmp_path):
        self.write_subject(tmp_path, 101, [1] * 10)
        with pytest.raises(IngestError, match="103"):
            parse_pamap2(tmp_path, IngestConfig(dataset="pamap2", subjects=(101, 103)))

    def test_auto_excludes_incomplete_subjects(self, tmp_path, caplog):
        full = [1] * 100 + [4] * 100 + [6] * 100
        self.write_subject(tmp_path, 101, full)
        self.write_subject(tmp_path, 102, full)
        self.write_subject(tmp_path, 103, [1] * 100 + [4] * 100)  # never cycles
        with caplog.at_level("INFO"):
            segs = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2"))
        assert {s.subject_id for s in segs} == {101, 102}
        assert "103" in caplog.text

    def test_all_nan_drop(self, tmp_path):
        def blank(rows):
            rows[:, 4:7] = np.nan

        self.write_subject(tmp_path, 101, [4] * 300, edit=blank)
        cfg = IngestConfig(dataset="pamap2", subjects=(101,), nan_policy="drop")
        assert parse_pamap2(tmp_path, cfg) == []

    def test_nan_policies(self, tmp_path):
        def holes(rows):
            rows[10:12, 5] = np.nan  # short gap: interpolated
            rows[50:60, 4] = np.nan  # long gap: dropped

        rows = self.write_subject(tmp_path, 101, [4] * 100, edit=holes)
        interp = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2", subjects=(101,)))
        assert [len(s) for s in interp] == [50, 40]
        a = interp[0].accel[:, 1]
        lo, hi = float(f"{rows[9, 5]:.6f}"), float(f"{rows[12, 5]:.6f}")
        np.testing.assert_allclose(a[10:12], [lo + (hi - lo) / 3, lo + 2 * (hi - lo) / 3])

        drop = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2", subjects=(101,), nan_policy="drop"))
        assert [len(s) for s in drop] == [10, 38, 40]
        # frames emitted == accepted rows
        assert sum(len(s) for s in drop) == 100 - 2 - 10
        assert sum(len(s) for s in interp) == 100 - 10
        for s in drop + interp:
            assert np.all(np.diff(s.t_index) > 0)

    def test_malformed_row(self, tmp_path):
        self.write_subject(tmp_path, 101, [4] * 20)
        f = tmp_path / "subject101.dat"
        lines = f.read_text().splitlines()
        lines[4] = " ".join(lines[4].split()[:50])
        f.write_text("\n".join(lines) + "\n")
        with pytest.raises(IngestError) as err:
            parse_pamap2(tmp_path, IngestConfig(dataset="pamap2"))
        assert err.value.line == 5

    def test_protocol_subdirectory(self, tmp_path):
        (tmp_path / "Protocol").mkdir()
        self.write_subject(tmp_path / "Protocol", 105, [1] * 100 + [4] * 100 + [6] * 100)
        segs = parse_pamap2(tmp_path, IngestConfig(dataset="pamap2"))
        assert {s.subject_id for s in segs} == {105}

    def test_rest_override_to_sitting(self, tmp_path):
        self.write_subject(tmp_path, 101, [1] * 100 + [2] * 100 + [4] * 100 + [6] * 100)
        cfg = IngestConfig(dataset="pamap2", activity_map={"Bike": "6", "Rest": "2", "Walk": "4"})
        rest = [s for s in parse_pamap2(tmp_path, cfg) if s.activity is Activity.REST]
        assert [s.raw_code for s in rest] == ["2"]


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(subjects=(1, 2))
        a, b = synth_generate(spec, 9), synth_generate(spec, 9)
        assert all(x.same_data(y) for x, y in zip(a, b))
        c = synth_generate(spec, 10)
        assert not a[0].same_data(c[0])

    def test_counts(self):
        from gbmcal.ingest.synth import DEFAULT_CLASSES

        spec = SynthSpec(classes=DEFAULT_CLASSES[:3], subjects=(1, 2), segments_per_class=4)
        assert len(synth_generate(spec, 0)) == 24

    @pytest.mark.parametrize("field, value", [("segments_per_class", 0), ("samples_per_segment", -1),
                                              ("sample_rate_hz", 0)])
    def test_rejects_non_positive(self, field, value):
        import dataclasses

        with pytest.raises(ValueError):
            synth_generate(dataclasses.replace(SynthSpec(), **{field: value}), 0)

    def test_subject_scale_scales_amplitude(self):
        spec = SynthSpec(subjects=(1, 2), subject_scale={2: 1.5}, amp_jitter=0, segment_amp_jitter=0,
                         freq_jitter=0, segments_per_class=30)
        segs = synth_generate(spec, 0)
        run = {s: np.mean([seg.accel.std(axis=0) for seg in segs
                           if seg.subject_id == s and seg.activity is Activity.RUN], axis=0)
               for s in (1, 2)}
        np.testing.assert_allclose(run[2] / run[1], 1.5, rtol=0.05)


def test_segment_invariants():
    with pytest.raises(ValueError):
        RecordingSegment(1, "Walk", "x", [0, 2, 1], np.zeros((3, 3)), 25)
    with pytest.raises(ValueError):
        RecordingSegment(1, "Walk", "x", [0, 1], np.array([[0, 0, np.nan], [0, 0, 0]]), 25)
    seg = RecordingSegment(1, "Walk", "x", [0, 1], np.ones((2, 3)), 25)
    frames = list(seg.frames())
    assert frames[1].t_index == 1 and frames[1].activity is Activity.WALK and frames[1].az == 1.0


def test_ingest_config_validation():
    with pytest.raises(ConfigError):
        IngestConfig(dataset="nope").validate()
    with pytest.raises(ConfigError):
        IngestConfig(nan_policy="zero").validate()
    with pytest.raises(ConfigError):
        IngestConfig(activity_map={"Swim": "a01"}).validate()
