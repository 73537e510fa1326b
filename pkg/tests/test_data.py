import numpy as np
import pytest

from hdemg.data import (
    DataFormatError,
    SynthConfig,
    TrialRecord,
    load_trials,
    save_trials,
    synth_generate,
)
from hdemg.am import EFFORTS, GESTURES
from hdemg.sigproc import mean_energy, segment

SMALL = SynthConfig(fs=250, channel_count=16, noise_std=4.0)


def small_records():
    return synth_generate(SMALL)


def make_record(**kw):
    defaults = dict(
        subject=1,
        gesture="fist",
        effort="high",
        trial=3,
        fs=250,
        samples=np.arange(20, dtype=np.int32).reshape(4, 5),
    )
    defaults.update(kw)
    return TrialRecord(**defaults)


class TestTrialRecord:
    def test_rejects_bad_metadata(self):
        with pytest.raises(DataFormatError):
            make_record(gesture="wave")
        with pytest.raises(DataFormatError):
            make_record(effort="extreme")
        with pytest.raises(DataFormatError):
            make_record(trial=6)

    def test_effort_target(self):
        assert make_record(effort="low").effort_target == 25
        assert make_record(effort="high").effort_target == 75


class TestSaveLoad:
    def test_round_trip(self, tmp_path):
        rec = make_record()
        save_trials([rec], tmp_path)
        (loaded,) = load_trials(tmp_path)
        assert loaded.subject == rec.subject
        assert loaded.gesture == rec.gesture
        assert loaded.effort == rec.effort
        assert loaded.trial == rec.trial
        assert loaded.fs == rec.fs
        assert np.array_equal(loaded.samples, rec.samples)

    def test_stable_bytes(self, tmp_path):
        rec = make_record()
        save_trials([rec], tmp_path / "a")
        save_trials([rec], tmp_path / "b")
        f = "subject1/fist_high_3.emg"
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_empty_directory(self, tmp_path):
        assert load_trials(tmp_path) == []

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_trials(tmp_path / "nope")

    def test_wrong_channel_count(self, tmp_path):
        rec = make_record()
        save_trials([rec], tmp_path)
        f = tmp_path / "subject1/fist_high_3.emg"
        text = f.read_text().replace("# channels: 4", "# channels: 5")
        f.write_text(text)
        with pytest.raises(DataFormatError, match="channels"):
            load_trials(tmp_path)

    def test_non_numeric_sample_reports_line(self, tmp_path):
        rec = make_record()
        save_trials([rec], tmp_path)
        f = tmp_path / "subject1/fist_high_3.emg"
        lines = f.read_text().splitlines()
        lines[8] = "1 2 x 4"
        f.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataFormatError, match=":9:"):
            load_trials(tmp_path)

    def test_missing_header(self, tmp_path):
        rec = make_record()
        save_trials([rec], tmp_path)
        f = tmp_path / "subject1/fist_high_3.emg"
        lines = [l for l in f.read_text().splitlines() if not l.startswith("# effort")]
        f.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataFormatError, match="effort"):
            load_trials(tmp_path)


class TestSynthGenerate:
    def test_full_grid(self):
        recs = small_records()
        assert len(recs) == 135
        keys = {(r.gesture, r.effort, r.trial) for r in recs}
        assert len(keys) == 135

    def test_deterministic(self):
        a = small_records()
        b = small_records()
        assert all(np.array_equal(x.samples, y.samples) for x, y in zip(a, b))

    def test_zero_noise_zero_multipliers(self):
        recs = synth_generate(
            SynthConfig(
                fs=250, channel_count=16, noise_std=0.0, effort_multipliers=(0, 0, 0)
            )
        )
        assert all(not r.samples.any() for r in recs)

    def test_effort_ordering_of_hold_energy(self):
        recs = small_records()
        by_key = {(r.gesture, r.effort, r.trial): r for r in recs}
        for g in GESTURES:
            for t in range(1, 6):
                energies = []
                for e in EFFORTS:
                    rec = by_key[(g, e, t)]
                    _, hold, _ = segment(rec.samples, rec.fs)
                    energies.append(mean_energy(rec.samples, span=hold))
                assert energies[0] < energies[1] < energies[2]

    def test_pattern_overlap_bounded(self):
        from hdemg.data import _gesture_patterns
        from hdemg.hdcore import Seed

        cfg = SynthConfig()
        weights = _gesture_patterns(cfg, Seed(cfg.seed, "synth"))
        active = [set(np.flatnonzero(w)) for w in weights]
        n_active = round(cfg.pattern_density * cfg.channel_count)
        for i in range(len(active)):
            for j in range(i + 1, len(active)):
                assert len(active[i] & active[j]) < n_active

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            SynthConfig(effort_multipliers=(0.5, 0.5, 0.75))
        with pytest.raises(ValueError):
            SynthConfig(noise_std=-1.0)

    def test_round_trip_through_files(self, tmp_path):
        recs = small_records()[:6]
        save_trials(recs, tmp_path)
        loaded = load_trials(tmp_path)
        by_key = {(r.gesture, r.effort, r.trial): r for r in loaded}
        for rec in recs:
            assert np.array_equal(
                by_key[(rec.gesture, rec.effort, rec.trial)].samples, rec.samples
            )
