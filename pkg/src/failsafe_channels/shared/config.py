from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ProtocolConfig(BaseModel):
    t: int = Field(default=256, ge=1, description="tolerance timeout, blocks")
    T: int = Field(default=5760, ge=1, description="fail-safe timeout, blocks")
    t_fast: int = Field(default=2, ge=1, description="fast-path payout delay, blocks")
    n: int = Field(default=4, ge=1, description="freshness limit, blocks")

    @model_validator(mode="after")
    def check_timeouts(self) -> ProtocolConfig:
        if self.t_fast >= self.T:
            raise ValueError("t_fast must be smaller than T")
        return self


class WatchtowerConfig(BaseModel):
    period: int | None = Field(default=None, ge=1, description="blocks between updates; t // 16 when unset")
    min_deposit: int = Field(default=1, ge=1)
    submit_empty_updates: bool = False
    snapshot_path: str | None = None


class HarnessConfig(BaseModel):
    trace_schema: int = 1
    max_blocks: int = Field(default=20000, ge=1)
    history_limit: int = Field(default=1024, ge=1)


class Config(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="FAILSAFE_CHANNELS_", env_nested_delimiter="__")

    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    watchtower: WatchtowerConfig = Field(default_factory=WatchtowerConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)

    def watchtower_period(self) -> int:
        if self.watchtower.period is not None:
            return self.watchtower.period
        return max(1, self.protocol.t // 16)


class ConfigManager:
    def __init__(self, config_dir: Path | None = None) -> None:
        self._config_dir = config_dir or Path.home() / ".failsafe-channels"
        self._config_file = self._config_dir / "config.yaml"
        self._config: Config | None = None

    @property
    def config_dir(self) -> Path:
        return self._config_dir

    @property
    def config_file(self) -> Path:
        return self._config_file

    def ensure_config_dir(self) -> None:
        self._config_dir.mkdir(parents=True, exist_ok=True)

    def load_config(self) -> Config:
        if self._config is not None:
            return self._config

        config_data: dict[str, Any] = {}
        if self._config_file.exists():
            with open(self._config_file, encoding="utf-8") as f:
                config_data = yaml.safe_load(f) or {}

        self._config = Config(**config_data)
        return self._config

    def save_config(self, config: Config | None = None) -> None:
        if config is not None:
            self._config = config

        if self._config is None:
            raise ValueError("No config to save")

        self.ensure_config_dir()
        config_dict = self._config.model_dump(exclude_unset=False)
        with open(self._config_file, "w", encoding="utf-8") as f:
            yaml.dump(config_dict, f, default_flow_style=False, indent=2)

    def set_config_value(self, key: str, value: Any) -> None:
        config = self.load_config()

        # "protocol.t" -> section model, field name
        keys = key.split(".")
        target: Any = config
        for k in keys[:-1]:
            target = getattr(target, k)

        if keys[-1] not in type(target).model_fields:
            raise KeyError(key)
        # validate through the section model so "512" lands as an int
        checked = type(target).model_validate({**target.model_dump(), keys[-1]: value})
        setattr(target, keys[-1], getattr(checked, keys[-1]))
        self.save_config(config)

    def get_config_value(self, key: str) -> Any:
        config = self.load_config()

        target: Any = config
        for k in key.split("."):
            target = getattr(target, k)

        return target

    def show_config(self) -> dict[str, Any]:
        config = self.load_config()
        return config.model_dump()


config_manager = ConfigManager()
