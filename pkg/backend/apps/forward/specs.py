"""
Forward-model specifications.

Resnet18S: 3x3 stem, 4 stages of 2 residual blocks (8 in total), stride 2
between stages, global average pooling, dense head with sigmoid.
Resnet34S: the same pyramid with {3, 4, 4, 3} blocks per stage.
ResNa: 3 conv blocks (16x16 -> 8x8 -> 4x4 -> 4x4), the 4x4 map read as a
16-step sequence by one LSTM layer, dense head with sigmoid.
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from django.db import models

from utils.error_handling import InvalidModelSpec

N_OUTPUTS = 32
RESNET18S_BLOCKS = 8


class Arch(models.TextChoices):
    RESNET18S = 'Resnet18S', 'Resnet18S'
    RESNET34S = 'Resnet34S', 'Resnet34S'
    RESNA = 'ResNa', 'ResNa'


DEFAULT_WIDTHS = {
    Arch.RESNET18S: [32, 64, 128, 256],
    Arch.RESNET34S: [32, 64, 128, 256],
    Arch.RESNA: [32, 64, 64],
}

DEFAULT_BLOCKS = {
    Arch.RESNET18S: [2, 2, 2, 2],
    Arch.RESNET34S: [3, 4, 4, 3],
    Arch.RESNA: [1, 1, 1],
}


@dataclass
class ForwardModelSpec:
    """
    Architecture of one evaluation network.

    Attributes:
        arch: Architecture family
        widths: Channel width per stage (ResNa: per conv block)
        blocks: Residual blocks per stage (ResNa: one conv block each)
        leaky_slope: Negative slope of every leaky ReLU
        lstm_hidden: Hidden size of the ResNa LSTM
        n_outputs: Spectrum bins produced by the head
    """
    arch: Arch = Arch.RESNET18S
    widths: List[int] = field(default_factory=list)
    blocks: List[int] = field(default_factory=list)
    leaky_slope: float = 0.2
    lstm_hidden: int = 64
    n_outputs: int = N_OUTPUTS

    def __post_init__(self):
        try:
            self.arch = Arch(self.arch)
        except ValueError as e:
            raise InvalidModelSpec(f"unknown architecture {self.arch!r}") from e
        self.widths = list(self.widths or DEFAULT_WIDTHS[self.arch])
        self.blocks = list(self.blocks or DEFAULT_BLOCKS[self.arch])
        self.validate()

    @property
    def residual_blocks(self) -> int:
        return 0 if self.arch == Arch.RESNA else sum(self.blocks)

    def validate(self):
        """
        Raises:
            InvalidModelSpec: If widths/blocks do not fit the architecture
        """
        if len(self.widths) != len(self.blocks):
            raise InvalidModelSpec(f"{len(self.widths)} widths for {len(self.blocks)} stages")
        if any(w < 1 for w in self.widths) or any(b < 1 for b in self.blocks):
            raise InvalidModelSpec("widths and block counts must be positive")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise InvalidModelSpec(f"leaky_slope must be in [0, 1), got {self.leaky_slope}")
        if self.n_outputs < 1 or self.lstm_hidden < 1:
            raise InvalidModelSpec("n_outputs and lstm_hidden must be positive")

        if self.arch == Arch.RESNET18S and self.residual_blocks != RESNET18S_BLOCKS:
            raise InvalidModelSpec(f"Resnet18S has {RESNET18S_BLOCKS} residual blocks, got {self.residual_blocks}")
        if self.arch == Arch.RESNET34S and self.residual_blocks <= RESNET18S_BLOCKS:
            raise InvalidModelSpec(f"Resnet34S needs more than {RESNET18S_BLOCKS} residual blocks")
        if self.arch != Arch.RESNA and len(self.blocks) > 4:
            # 16 -> 8 -> 4 -> 2 leaves no room for a fifth stride-2 stage
            raise InvalidModelSpec("residual networks have at most 4 stages")
        if self.arch == Arch.RESNA and (len(self.widths) != 3 or any(b != 1 for b in self.blocks)):
            raise InvalidModelSpec("ResNa has exactly 3 conv blocks")

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data['arch'] = self.arch.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ForwardModelSpec':
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidModelSpec(f"unknown model spec keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_section(cls, section, arch: Optional[str] = None) -> 'ForwardModelSpec':
        """Spec from a RunConfig model section, optionally with another architecture."""
        use_section_shape = arch is None or arch == section.arch
        return cls(
            arch=arch or section.arch,
            widths=section.widths if use_section_shape else None,
            blocks=section.blocks if use_section_shape else None,
            leaky_slope=section.leaky_slope,
            lstm_hidden=section.lstm_hidden,
        )
