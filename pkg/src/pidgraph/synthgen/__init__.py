from .templates import Template, default_templates, load_template_library, save_template_library
from .augment import AugmentSpec, augment
from .dataset import emit_dataset, read_patch_dir, write_patch_dir
from .generate import PlacementError, SynthConfig, generate_diagram

__all__ = [
    "AugmentSpec",
    "augment",
    "emit_dataset",
    "read_patch_dir",
    "write_patch_dir",
    "PlacementError",
    "SynthConfig",
    "Template",
    "default_templates",
    "generate_diagram",
    "load_template_library",
    "save_template_library",
]
