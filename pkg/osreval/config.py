import os
from pathlib import Path
from typing import Any

from click import UsageError

CONFIG_FOLDER = os.path.expanduser("~/.config")
OSR_EVAL_CONFIG_FOLDER = Path(CONFIG_FOLDER) / "osr_eval"
OSR_EVAL_CONFIG_PATH = OSR_EVAL_CONFIG_FOLDER / ".osrrc"

# Settings here only affect logging, rendering and parallelism, never results.
DEFAULT_CONFIG = {
    "LOG_LEVEL": os.getenv("LOG_LEVEL", "WARNING"),
    "DEFAULT_COLOR": os.getenv("DEFAULT_COLOR", "magenta"),
    "SEARCH_WORKERS": os.getenv("SEARCH_WORKERS", "1"),
    "SEARCH_CHUNK_SIZE": os.getenv("SEARCH_CHUNK_SIZE", "256"),
    "TABLE_STYLE": os.getenv("TABLE_STYLE", "SIMPLE"),
}


class Config(dict):  # type: ignore
    def __init__(self, config_path: Path, **defaults: Any):
        self.config_path = config_path
        super().__init__(**defaults)
        if self._exists:
            self._read()

    @property
    def _exists(self) -> bool:
        return self.config_path.is_file()

    def _read(self) -> None:
        with open(self.config_path, encoding="utf-8") as file:
            for line in file:
                if line.strip() and not line.startswith("#"):
                    key, value = line.strip().split("=", 1)
                    self[key.strip()] = value.strip()

    def get(self, key: str) -> str:  # type: ignore
        # Prioritize environment variables over config file.
        value = os.getenv(key) or super().get(key)
        if value is None or value == "":
            raise UsageError(f"Missing config key: {key}")
        return str(value)

    def get_int(self, key: str) -> int:
        value = self.get(key)
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"Config key {key} must be an integer, got {value!r}")


cfg = Config(OSR_EVAL_CONFIG_PATH, **DEFAULT_CONFIG)
