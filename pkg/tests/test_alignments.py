"""CTM parsing and speaker-rate factor estimation against hand-computed values."""

import numpy as np
import pytest

from speechaug.alignments import (
    CtmParseError,
    FactorTable,
    SpeakerDurationStats,
    build_factor_table,
    load_factor_table,
    parse_ctm,
    save_factor_table,
    speaker_stats,
)

# Three-speaker fixture. Hand computation:
#   C01 non-silence durations: 0.08, 0.10, 0.06        -> mean 0.08
#   C02 non-silence durations: 0.10, 0.14              -> mean 0.12
#   reference = (0.08 + 0.12) / 2                      =  0.10
#   D01: 0.20, 0.30 -> mean 0.25 -> factor 0.10 / 0.25 =  0.4
#   D02: 0.10, 0.10 -> mean 0.10 -> factor             =  1.0
#   D03: 0.40, 0.40 -> mean 0.40 -> factor             =  0.25
CONTROL_CTM = """\
C01_B1_W1 1 0.00 0.08 ah
C01_B1_W1 1 0.08 0.50 sil
C01_B1_W2 1 0.00 0.10 iy
C01_B2_W1 1 0.00 0.06 k
C02_B1_W1 1 0.00 0.10 ah
C02_B1_W2 1 0.10 0.14 eh
"""

DYS_CTM = """\
D01_B1_W1 1 0.00 0.20 ah
D01_B1_W2 1 0.20 0.30 iy
D02_B1_W1 1 0.00 0.10 ah
D02_B1_W1 1 0.10 0.10 eh
D03_B1_W1 1 0.00 0.40 ah
D03_B1_W2 1 0.00 0.40 ow
"""


@pytest.fixture
def ctm_files(tmp_path):
    control = tmp_path / "control.ctm"
    control.write_text(CONTROL_CTM)
    dys = tmp_path / "dys.ctm"
    dys.write_text(DYS_CTM)
    return control, dys


class TestParseCtm:
    def test_single_line_fields(self, tmp_path):
        path = tmp_path / "one.ctm"
        path.write_text("F02_B1_CW1_M2 1 0.10 0.25 ah\n")
        (seg,) = parse_ctm(path)
        assert seg.utterance_id == "F02_B1_CW1_M2"
        assert seg.speaker_id == "F02"
        assert seg.phone == "ah"
        assert seg.start == 0.10
        assert seg.duration == 0.25

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ctm"
        path.write_text("")
        assert parse_ctm(path) == []

    def test_four_fields_names_the_line(self, tmp_path):
        path = tmp_path / "bad.ctm"
        path.write_text("A_1 1 0.0 0.1 ah\nB_1 1 0.0 0.1\n")
        with pytest.raises(CtmParseError, match="line 2"):
            parse_ctm(path)

    def test_negative_duration(self, tmp_path):
        path = tmp_path / "neg.ctm"
        path.write_text("A_1 1 0.0 -0.1 ah\n")
        with pytest.raises(CtmParseError, match="duration"):
            parse_ctm(path)

    def test_speaker_pattern_override(self, tmp_path):
        path = tmp_path / "dash.ctm"
        path.write_text("spk01-utt9 1 0.0 0.1 ah\n")
        (seg,) = parse_ctm(path, speaker_pattern=r"^([^-]+)-")
        assert seg.speaker_id == "spk01"

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "blank.ctm"
        path.write_text("\nA_1 1 0.0 0.1 ah\n\n")
        assert len(parse_ctm(path)) == 1


class TestSpeakerStats:
    def test_arithmetic_mean(self, tmp_path):
        path = tmp_path / "m.ctm"
        path.write_text("S_1 1 0.0 0.1 ah\nS_1 1 0.1 0.2 iy\nS_1 1 0.3 0.3 ow\n")
        (stats,) = speaker_stats(parse_ctm(path))
        assert stats.mean_phone_duration == pytest.approx(0.2, abs=1e-15)
        assert stats.phone_count == 3

    def test_silence_excluded(self, tmp_path):
        path = tmp_path / "s.ctm"
        path.write_text("S_1 1 0.0 0.1 ah\nS_1 1 0.1 0.5 sil\n")
        (stats,) = speaker_stats(parse_ctm(path))
        assert stats.mean_phone_duration == pytest.approx(0.1)
        assert stats.phone_count == 1

    def test_silence_only_speaker_omitted(self, tmp_path):
        path = tmp_path / "so.ctm"
        path.write_text("A_1 1 0.0 0.1 ah\nB_1 1 0.0 0.5 sil\nB_1 1 0.5 0.2 sp\n")
        stats = speaker_stats(parse_ctm(path))
        assert [s.speaker_id for s in stats] == ["A"]

    def test_golden_fixture_means(self, ctm_files):
        control, dys = ctm_files
        by_speaker = {s.speaker_id: s for s in speaker_stats(parse_ctm(control))}
        assert by_speaker["C01"].mean_phone_duration == pytest.approx((0.08 + 0.10 + 0.06) / 3, rel=1e-12)
        assert by_speaker["C02"].mean_phone_duration == pytest.approx((0.10 + 0.14) / 2, rel=1e-12)
        by_speaker = {s.speaker_id: s for s in speaker_stats(parse_ctm(dys))}
        assert by_speaker["D01"].mean_phone_duration == pytest.approx(0.25, rel=1e-12)


class TestBuildFactorTable:
    def test_golden_values(self, ctm_files):
        control, dys = ctm_files
        table = build_factor_table(
            speaker_stats(parse_ctm(control)), speaker_stats(parse_ctm(dys))
        )
        reference = ((0.08 + 0.10 + 0.06) / 3 + (0.10 + 0.14) / 2) / 2
        assert table.reference_duration == pytest.approx(reference, rel=1e-12)
        assert table.entries["D01"] == pytest.approx(reference / 0.25, rel=1e-12)
        assert table.entries["D02"] == pytest.approx(reference / 0.10, rel=1e-12)
        assert table.entries["D03"] == pytest.approx(reference / 0.40, rel=1e-12)

    def test_spec_arithmetic(self):
        controls = [
            SpeakerDurationStats("C1", 0.08, 10),
            SpeakerDurationStats("C2", 0.12, 10),
        ]
        targets = [SpeakerDurationStats("D1", 0.25, 10)]
        table = build_factor_table(controls, targets)
        assert table.reference_duration == pytest.approx(0.10, rel=1e-12)
        assert table.entries["D1"] == pytest.approx(0.4, rel=1e-12)

    def test_identity_when_rates_match(self):
        controls = [SpeakerDurationStats("C1", 0.1, 5)]
        targets = [SpeakerDurationStats("D1", 0.1, 5)]
        assert build_factor_table(controls, targets).entries["D1"] == pytest.approx(1.0)

    def test_scale_covariance(self, ctm_files):
        """Scaling every duration by c scales means by c and fixes factors."""
        control, dys = ctm_files
        base = build_factor_table(speaker_stats(parse_ctm(control)),
                                  speaker_stats(parse_ctm(dys)))
        for c in (0.5, 2.0, 10.0):
            scaled_control = [
                SpeakerDurationStats(s.speaker_id, c * s.mean_phone_duration, s.phone_count)
                for s in speaker_stats(parse_ctm(control))
            ]
            scaled_dys = [
                SpeakerDurationStats(s.speaker_id, c * s.mean_phone_duration, s.phone_count)
                for s in speaker_stats(parse_ctm(dys))
            ]
            scaled = build_factor_table(scaled_control, scaled_dys)
            assert scaled.reference_duration == pytest.approx(c * base.reference_duration, rel=1e-12)
            for speaker, factor in base.entries.items():
                assert scaled.entries[speaker] == pytest.approx(factor, rel=1e-12)

    def test_permutation_invariance(self, ctm_files, rng):
        control, dys = ctm_files
        segments_c = parse_ctm(control)
        segments_d = parse_ctm(dys)
        base = build_factor_table(speaker_stats(segments_c), speaker_stats(segments_d))
        perm_c = [segments_c[i] for i in rng.permutation(len(segments_c))]
        perm_d = [segments_d[i] for i in rng.permutation(len(segments_d))]
        shuffled = build_factor_table(speaker_stats(perm_c), speaker_stats(perm_d))
        assert shuffled.entries == base.entries

    def test_slower_speakers_get_factor_below_one(self, ctm_files):
        control, dys = ctm_files
        table = build_factor_table(speaker_stats(parse_ctm(control)),
                                   speaker_stats(parse_ctm(dys)))
        # D01 and D03 are slower than the reference (longer phones)
        assert table.entries["D01"] < 1.0
        assert table.entries["D03"] < 1.0

    def test_empty_control_rejected(self):
        with pytest.raises(ValueError, match="control"):
            build_factor_table([], [SpeakerDurationStats("D", 0.1, 1)])


class TestFactorTableIo:
    def test_round_trip(self, tmp_path):
        table = FactorTable(0.1, {"D01": 0.4, "D02": 1.0})
        path = tmp_path / "factors.tsv"
        save_factor_table(table, path)
        again = load_factor_table(path)
        assert again.reference_duration == table.reference_duration
        assert again.entries == {"D01": 0.4, "D02": 1.0}

    def test_six_decimal_format(self, tmp_path):
        path = tmp_path / "factors.tsv"
        save_factor_table(FactorTable(0.1, {"D01": 1 / 3}), path)
        data_lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert data_lines == ["D01\t0.333333"]
