"""
Tests for ExperimentConfig validation and the YAML preset loader
"""
import math

import pytest
import yaml
from pydantic import ValidationError

from src.config_loader import PresetLoader, load_config
from src.pydantic_models import ExperimentConfig


class TestExperimentConfig:
    """Tests for ExperimentConfig validators"""

    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.area == pytest.approx(math.pi)
        assert cfg.shapes[0] == "disk"
        assert cfg.trend_caps == [5.0, 10.0, 20.0, 40.0]

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(spacing=0.1)

    def test_unknown_shape(self):
        with pytest.raises(ValidationError, match="Invalid shape"):
            ExperimentConfig(shapes=["disk", "triangle"])

    def test_negative_cap(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(caps=[0.0, -1.0])

    def test_spacings_must_decrease(self):
        with pytest.raises(ValidationError, match="decreasing"):
            ExperimentConfig(spacings=[0.01, 0.02])

    def test_volume_grid(self):
        """At least 5 strictly increasing volumes"""
        with pytest.raises(ValidationError):
            ExperimentConfig(ball_volumes=[1.0, 2.0, 3.0])
        with pytest.raises(ValidationError):
            ExperimentConfig(ball_volumes=[1.0, 2.0, 2.0, 3.0, 4.0])

    def test_trend_caps_positive(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(trend_caps=[0.0, 5.0])

    def test_fractions_in_unit_interval(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(induction_fractions=[0.5, 1.0])

    def test_nonpositive_area(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(area=0.0)


class TestPresetLoader:
    """Tests for PresetLoader"""

    def test_shipped_presets(self):
        loader = PresetLoader()
        assert set(loader.get_preset_ids()) >= {"default", "quick"}
        quick = loader.get_preset("quick")
        assert quick.name == "quick"
        assert quick.spacings == [0.0625, 0.03125]
        assert loader.get_preset("default").n_drift_fields == 20

    def test_missing_preset(self):
        assert PresetLoader().get_preset("nonexistent") is None

    def test_missing_directory(self, tmp_path):
        assert PresetLoader(str(tmp_path / "absent")).get_preset_ids() == []

    def test_malformed_preset_skipped(self, tmp_path):
        """Presets with unknown keys are logged and skipped"""
        (tmp_path / "good.yaml").write_text(yaml.safe_dump({"id": "good", "caps": [1.0]}))
        (tmp_path / "bad.yaml").write_text(yaml.safe_dump({"id": "bad", "colour": "red"}))
        loader = PresetLoader(str(tmp_path))
        assert loader.get_preset_ids() == ["good"]
        assert loader.get_preset("good").caps == [1.0]

    def test_id_defaults_to_file_stem(self, tmp_path):
        (tmp_path / "coarse.yaml").write_text(yaml.safe_dump({"tol": 1e-6}))
        assert PresetLoader(str(tmp_path)).get_preset("coarse").tol == 1e-6


class TestLoadConfig:
    """Tests for load_config"""

    def test_round_trip_keys(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"name": "run", "shapes": ["disk", "annulus"], "output_dir": "out"}))
        cfg = load_config(str(path))
        assert cfg.name == "run"
        assert cfg.shapes == ["disk", "annulus"]

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(str(path)) == ExperimentConfig()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("gird: 0.1\n")
        with pytest.raises(ValidationError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(str(tmp_path / "nope.yaml"))
