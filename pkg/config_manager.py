import json
import os
import logging
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "jobs": 1,
    "format": "text",
    "zero_samples": 16,
    "log_to_file": False,
}


def densops_home() -> str:
    """Settings directory: $DENSOPS_HOME or ~/.densops."""
    return os.environ.get("DENSOPS_HOME") or os.path.join(os.path.expanduser('~'), '.densops')


class ConfigManager:
    def __init__(self, config_dir: Optional[str] = None):
        self.config_dir = config_dir or densops_home()
        self.config_file = os.path.join(self.config_dir, 'config.json')
        logger.info("Config manager initialized: %s", self.config_dir)
    
    def _ensure_config_dir(self):
        """Ensure the configuration directory exists"""
        if not os.path.exists(self.config_dir):
            logger.info("Creating configuration directory: %s", self.config_dir)
            os.makedirs(self.config_dir)

    @staticmethod
    def _validated(settings: Dict[str, Any]) -> Dict[str, Any]:
        """Known keys whose values have the default's type; the rest is dropped with a warning."""
        clean = {}
        for key, value in settings.items():
            if key not in DEFAULTS:
                logger.warning("Ignoring unknown setting %s", key)
            elif type(value) is not type(DEFAULTS[key]):
                logger.warning("Ignoring setting %s=%r: expected %s", key, value, type(DEFAULTS[key]).__name__)
            else:
                clean[key] = value
        return clean
    
    def save(self, settings: Dict[str, Any]):
        """Save settings to the config file"""
        logger.info("Saving %d settings to %s", len(settings), self.config_file)
        try:
            self._ensure_config_dir()
            with open(self.config_file, 'w') as f:
                json.dump(self._validated(settings), f, indent=2)
            logger.debug("Settings saved successfully")
        except Exception as e:
            logger.error("Error saving settings: %s", str(e))
    
    def load(self) -> Dict[str, Any]:
        """Load settings merged over the defaults"""
        settings = dict(DEFAULTS)
        if not os.path.exists(self.config_file):
            logger.info("No config file found at %s", self.config_file)
            return settings
        
        try:
            logger.info("Loading settings from %s", self.config_file)
            with open(self.config_file, 'r') as f:
                stored = json.load(f)
            if not isinstance(stored, dict):
                raise ValueError("config file must hold a JSON object")
            settings.update(self._validated(stored))
            return settings
        except Exception as e:
            logger.error("Error loading settings: %s", str(e))
            return dict(DEFAULTS)
    
    def export_config(self, filename: str):
        """Export the current settings to a file"""
        if not filename.endswith('.json'):
            filename += '.json'
        
        logger.info("Exporting configuration to %s", filename)
        try:
            with open(filename, 'w') as f:
                json.dump(self.load(), f, indent=2)
            logger.info("Configuration exported successfully")
        except Exception as e:
            logger.error("Error exporting configuration: %s", str(e))
    
    def import_config(self, filename: str) -> Dict[str, Any]:
        """Import settings from a file and save them"""
        logger.info("Importing configuration from %s", filename)
        try:
            with open(filename, 'r') as f:
                imported = json.load(f)
            settings = self._validated(imported)
            self.save(settings)
            logger.info("Imported %d settings", len(settings))
            return settings
        except Exception as e:
            logger.error("Error importing configuration: %s", str(e))
            return {}
