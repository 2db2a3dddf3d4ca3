import dataclasses
from pathlib import Path

import pytest

from licam_lab import presets
from licam_lab.config import (
    absorber_to_config,
    laser_params_to_config,
    load_absorber,
    load_laser_params,
    parse_config_text,
    parse_quantity,
)
from licam_lab.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestParseQuantity:
    @pytest.mark.parametrize("text,unit_class,expected", [
        ("116mA", "current", 0.116),
        ("1042nm", "length", 1.042e-6),
        ("3.8e-5", "dimensionless", 3.8e-5),
        ("10kHz", "frequency", 1e4),
        ("4.5MHz", "frequency", 4.5e6),
        ("2.7435GHz", "frequency", 2.7435e9),
        ("5uW", "power", 5e-6),
        ("5µW", "power", 5e-6),
        ("1s", "time", 1.0),
        ("30mm", "length", 0.03),
        ("2e-21 m2", "area", 2e-21),
        ("3.8 1/m", "inverse_length", 3.8),
        ("1.5e24 m-3", "inverse_volume", 1.5e24),
        ("-0.5", "dimensionless", -0.5),
    ])
    def test_accepted(self, text, unit_class, expected):
        assert parse_quantity(text, unit_class) == pytest.approx(expected,
                                                                 rel=1e-12)

    @pytest.mark.parametrize("text,unit_class", [
        ("116mA", "length"),
        ("abc", "dimensionless"),
        ("1..0", "dimensionless"),
        ("5 volts", "power"),
    ])
    def test_rejected(self, text, unit_class):
        with pytest.raises(ConfigError):
            parse_quantity(text, unit_class)


class TestParseConfigText:
    def test_comments_and_blank_lines(self):
        text = "# header\n\na = 1  # inline\nb = 2mA\n"
        assert parse_config_text(text) == {"a": "1", "b": "2mA"}

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("a = 1\na = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just a line\n")


class TestLaserConfigFiles:
    def test_unknown_key_is_hard_error(self, tmp_path):
        path = tmp_path / "bad.cfg"
        base = CONFIG_DIR / "synth1.cfg"
        path.write_text(base.read_text() + "wavelenght = 1um\n")
        with pytest.raises(ConfigError, match="unknown keys"):
            load_laser_params(path)

    def test_missing_key_is_hard_error(self, tmp_path):
        lines = (CONFIG_DIR / "synth1.cfg").read_text().splitlines()
        kept = [l for l in lines if not l.startswith("confinement")]
        path = tmp_path / "missing.cfg"
        path.write_text("\n".join(kept))
        with pytest.raises(ConfigError, match="missing keys"):
            load_laser_params(path)

    @pytest.mark.parametrize("name,preset", [
        ("calibrated_ecdl.cfg", presets.calibrated_ecdl),
        ("synth1.cfg", presets.synth1),
        ("improved_prospective.cfg", presets.improved_prospective),
    ])
    def test_shipped_configs_match_presets(self, name, preset):
        loaded = load_laser_params(CONFIG_DIR / name)
        expected = preset()
        for field in dataclasses.fields(loaded):
            assert getattr(loaded, field.name) == pytest.approx(
                getattr(expected, field.name), rel=1e-12
            ), field.name

    def test_shipped_absorber_matches_preset(self):
        loaded = load_absorber(CONFIG_DIR / "nv_absorber.cfg")
        expected = presets.calibrated_absorber()
        assert loaded.delta_alpha == pytest.approx(expected.delta_alpha,
                                                   rel=1e-12)
        assert loaded.single_pass_depth == pytest.approx(3.8e-5, rel=1e-4)

    def test_round_trip_through_mapping(self, tmp_path, synth1):
        mapping = laser_params_to_config(synth1)
        text = "\n".join(f"{k} = {v!r}" for k, v in mapping.items())
        path = tmp_path / "rt.cfg"
        path.write_text(text)
        loaded = load_laser_params(path)
        assert loaded == synth1

    def test_absorber_round_trip(self, tmp_path, synth1_absorber):
        mapping = absorber_to_config(synth1_absorber)
        path = tmp_path / "ab.cfg"
        path.write_text("\n".join(f"{k} = {v!r}" for k, v in mapping.items()))
        assert load_absorber(path) == synth1_absorber
