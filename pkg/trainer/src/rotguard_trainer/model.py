"""Classifier architectures with a 360-way orientation head."""

from __future__ import annotations

import warnings

from torch import nn

from .data import ANGLE_CLASSES


class TinyOrientationNet(nn.Module):
    """Small convnet for desk-scale experiments and tests.

    Same input/output contract as the full model: one RGB tensor in, 360
    logits out.
    """

    def __init__(self):
        super().__init__()
        def block(cin, cout, kernel=3, stride=2, padding=1):
            return nn.Sequential(
                nn.Conv2d(cin, cout, kernel, stride, padding, bias=False),
                nn.BatchNorm2d(cout),
                nn.ReLU(inplace=True),
            )

        self.features = nn.Sequential(
            block(3, 16, kernel=5, padding=2),
            block(16, 32),
            block(32, 64),
            block(64, 128),
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(128, ANGLE_CLASSES)

    def forward(self, x):
        x = self.pool(self.features(x)).flatten(1)
        return self.head(x)


def build_model(arch: str = "resnet50", pretrained: bool = True) -> nn.Module:
    """Build the orientation classifier.

    "resnet50" tries to start from ImageNet weights and falls back to
    random initialization when the weights cannot be fetched (offline
    environments); "tiny" is the small desk-scale net.
    """
    if arch == "tiny":
        return TinyOrientationNet()
    if arch == "resnet50":
        import torchvision

        model = None
        if pretrained:
            try:
                model = torchvision.models.resnet50(
                    weights=torchvision.models.ResNet50_Weights.IMAGENET1K_V2
                )
            except Exception as exc:
                warnings.warn(
                    f"could not fetch ImageNet weights ({exc}); "
                    "falling back to random initialization"
                )
        if model is None:
            model = torchvision.models.resnet50(weights=None)
        model.fc = nn.Linear(model.fc.in_features, ANGLE_CLASSES)
        return model
    raise ValueError(f"unknown architecture {arch!r} (expected resnet50 or tiny)")
