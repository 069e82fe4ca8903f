from .architecture import (Architecture, Conv, conv_cost, count_flops, mobilenetv2_3d, select_width,
                           stage_output_dims)
from .checkpoint import load_checkpoint, load_pretrained, save_checkpoint
from .excitation import Excitation, ExcitationSchedule, alpha, build_mask, excite
from .model import ARCHITECTURES, MobileNet3D, build_model, count_module_flops

__all__ = [
    "Architecture", "Conv", "conv_cost", "count_flops", "mobilenetv2_3d", "select_width", "stage_output_dims",
    "load_checkpoint", "load_pretrained", "save_checkpoint", "Excitation",
    "ExcitationSchedule", "alpha", "build_mask", "excite", "ARCHITECTURES", "MobileNet3D",
    "build_model", "count_module_flops",
]
