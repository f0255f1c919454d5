"""Model and training configuration."""

from dataclasses import dataclass, field


class DataError(Exception):
    """The dataset lacks planes required by the configuration."""


class ConfigurationError(Exception):
    """Inconsistent model/training settings."""


@dataclass(frozen=True)
class ModelConfig:
    """Network shape and ablation switches.

    The decoder fuses frozen-backbone features at exactly four stages.
    Desk-scale widths default small; full-scale widths are reachable via
    configuration.  ``with_polar=False`` feeds only the RGB channels to
    the UNet; ``with_backbone=False`` trains the plain UNet.  ``aug_mode``
    records which degradation ordering produced the training data
    (pre / post / off); the trainer itself consumes whatever dataset the
    manifest points at.
    """

    unet_channel_widths: tuple = (16, 32, 64, 128)
    backbone_channel_widths: tuple = (24, 48, 96, 192)
    with_polar: bool = True
    with_backbone: bool = True
    aug_mode: str = "pre"
    backbone_pretrained: bool = False

    def __post_init__(self):
        object.__setattr__(self, "unet_channel_widths", tuple(self.unet_channel_widths))
        object.__setattr__(
            self, "backbone_channel_widths", tuple(self.backbone_channel_widths)
        )
        if len(self.unet_channel_widths) != 4:
            raise ConfigurationError("the UNet encoder uses exactly four stages")
        if len(self.backbone_channel_widths) != 4:
            raise ConfigurationError("the backbone is tapped at exactly four stages")
        if self.aug_mode not in ("pre", "post", "off"):
            raise ConfigurationError(f"aug_mode must be pre/post/off, got {self.aug_mode!r}")

    @property
    def in_channels(self) -> int:
        # rgb + dolp + aolp; polar channels are sliced away when unused
        return 5


@dataclass(frozen=True)
class TrainConfig:
    """Optimization protocol: adaptive-moment gradient descent at 1e-4,
    batch size 8, learning rate halved every 10 epochs, 30 epochs.
    Desk-scale runs may shrink epochs or cap total steps."""

    learning_rate: float = 1e-4
    batch_size: int = 8
    epochs: int = 30
    lr_step_epochs: int = 10
    lr_decay: float = 0.5
    seed: int = 0
    max_steps: int = 0  # 0 means no cap

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("invalid optimization settings")
        if self.lr_step_epochs < 1 or not 0 < self.lr_decay <= 1:
            raise ConfigurationError("invalid schedule settings")
