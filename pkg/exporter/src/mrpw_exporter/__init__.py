"""One-shot exporter: torchvision backbones -> MRPW weight containers.

Writes the checksummed MRPW format (weights + sequential architecture
manifest + preprocessing constants) together with a sibling golden file
holding reference activations for a fixed synthetic test image at both
the native and the doubled resolution.
"""

__version__ = "0.1.0"
