"""
Load experiment presets from YAML files
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional

import yaml
from pydantic import ValidationError

from .pydantic_models import ExperimentConfig

logger = logging.getLogger(__name__)


class PresetLoader:
    """Loads ExperimentConfig presets from a directory of YAML files, keyed by `id`"""

    def __init__(self, configs_dir: Optional[str] = None):
        if configs_dir is None:
            # Default to configs/ directory at project root
            configs_dir = Path(__file__).parent.parent / 'configs'
        self.configs_dir = Path(configs_dir)
        self.presets: Dict[str, ExperimentConfig] = {}
        self._load_presets()

    def _load_presets(self):
        """Load all preset YAML files; malformed files are logged and skipped"""
        if not self.configs_dir.exists():
            logger.warning("Configs directory not found: %s", self.configs_dir)
            return

        for yaml_file in sorted(self.configs_dir.glob('*.yaml')):
            try:
                data = yaml.safe_load(yaml_file.read_text()) or {}
                preset_id = data.pop('id', yaml_file.stem)
                self.presets[preset_id] = ExperimentConfig(**data)
            except (yaml.YAMLError, ValidationError, TypeError) as e:
                logger.error("Error loading preset %s: %s", yaml_file, e)

    def get_preset(self, preset_id: str) -> Optional[ExperimentConfig]:
        """Get preset by ID"""
        return self.presets.get(preset_id)

    def get_preset_ids(self) -> List[str]:
        """Get list of all preset IDs"""
        return list(self.presets.keys())


def load_config(path: str) -> ExperimentConfig:
    """
    Read an ExperimentConfig from a YAML key-value file.

    Raises:
        FileNotFoundError: path does not exist
        pydantic.ValidationError: unknown keys or invalid values
    """
    data = yaml.safe_load(Path(path).read_text()) or {}
    data.pop('id', None)
    return ExperimentConfig(**data)
