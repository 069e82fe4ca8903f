"""Layer-level description of the 3D MobileNetV2 and analytic cost accounting."""
from dataclasses import dataclass

# expansion t, output channels c, repeats n, first stride s
INVERTED_RESIDUAL_SETTING = (
    (1, 16, 1, (1, 1, 1)),
    (6, 24, 2, (2, 2, 2)),
    (6, 32, 3, (2, 2, 2)),
    (6, 64, 4, (2, 2, 2)),
    (6, 96, 3, (1, 1, 1)),
    (6, 160, 3, (2, 2, 2)),
    (6, 320, 1, (1, 1, 1)),
)
WIDTH_CANDIDATES = (0.45, 0.7, 1.0)
TARGET_GFLOPS = 0.55


@dataclass(frozen=True)
class Conv:
    c_in: int
    c_out: int
    kernel: tuple
    stride: tuple
    padding: tuple
    groups: int = 1
    bias: bool = False
    bn: bool = True


@dataclass(frozen=True)
class Linear:
    c_in: int
    c_out: int
    bias: bool = True


@dataclass(frozen=True)
class Block:
    """Inverted residual: optional expansion conv, depthwise conv, linear projection."""

    convs: tuple
    residual: bool


@dataclass(frozen=True)
class Architecture:
    name: str
    width_mult: float
    num_classes: int
    stages: tuple  # layer 1 is the stem Conv, then Blocks, then the final 1x1x1 Conv
    classifier: Linear
    dropout: float = 0.2


def mobilenetv2_3d(width_mult=0.7, num_classes=2, in_channels=3, last_channel=1280):
    c = int(32 * width_mult)
    last = int(last_channel * width_mult) if width_mult > 1.0 else last_channel
    stages = [Conv(in_channels, c, (3, 3, 3), (1, 2, 2), (1, 1, 1))]
    for t, ch, n, s in INVERTED_RESIDUAL_SETTING:
        out = int(ch * width_mult)
        for i in range(n):
            stride = s if i == 0 else (1, 1, 1)
            hidden = round(c * t)
            convs = []
            if t != 1:
                convs.append(Conv(c, hidden, (1, 1, 1), (1, 1, 1), (0, 0, 0)))
            convs.append(Conv(hidden, hidden, (3, 3, 3), stride, (1, 1, 1), groups=hidden))
            convs.append(Conv(hidden, out, (1, 1, 1), (1, 1, 1), (0, 0, 0)))
            stages.append(Block(tuple(convs), stride == (1, 1, 1) and c == out))
            c = out
    stages.append(Conv(c, last, (1, 1, 1), (1, 1, 1), (0, 0, 0)))
    return Architecture("mobilenetv2_3d", width_mult, num_classes, tuple(stages),
                        Linear(last, num_classes))


def _out_dims(dims, conv):
    return tuple((d + 2 * p - k) // s + 1 for d, k, s, p in zip(dims, conv.kernel, conv.stride, conv.padding))


def stage_output_dims(arch, input_dims=(16, 112, 112)):
    """Spatio-temporal (T, H, W) after each stage, stage 1 first."""
    dims = tuple(input_dims)
    out = []
    for st in arch.stages:
        for conv in (st.convs if isinstance(st, Block) else (st,)):
            dims = _out_dims(dims, conv)
        out.append(dims)
    return out


def conv_cost(conv, input_dims):
    """(flops, params, output dims) of one convolution (with its batch norm) on ``input_dims``."""
    dims = _out_dims(input_dims, conv)
    k = conv.kernel[0] * conv.kernel[1] * conv.kernel[2]
    weights = (conv.c_in // conv.groups) * k * conv.c_out
    flops = 2 * weights * dims[0] * dims[1] * dims[2]
    params = weights + (conv.c_out if conv.bias else 0) + (2 * conv.c_out if conv.bn else 0)
    return flops, params, dims


def count_flops(arch, input_dims=(16, 112, 112)):
    """Analytic cost at one input of ``input_dims`` (T, H, W).

    FLOPs count two per multiply-accumulate over all convolutions and the
    classifier. Parameters include batch-norm affine terms. Sizes assume
    4-byte (float) and 1-byte (int8) weights.
    """
    dims = tuple(input_dims)
    flops = 0
    params = 0
    for st in arch.stages:
        for conv in (st.convs if isinstance(st, Block) else (st,)):
            f, p, dims = conv_cost(conv, dims)
            flops += f
            params += p
    lin = arch.classifier
    flops += 2 * lin.c_in * lin.c_out
    params += lin.c_in * lin.c_out + (lin.c_out if lin.bias else 0)
    return {
        "flops": flops,
        "gflops": flops / 1e9,
        "params": params,
        "size_mb_fp32": params * 4 / 1e6,
        "size_mb_int8": params / 1e6,
        "input_dims": list(input_dims),
    }


def select_width(candidates=WIDTH_CANDIDATES, target_gflops=TARGET_GFLOPS, input_dims=(16, 112, 112)):
    """Width multiplier whose counted GFLOPs is nearest the target."""
    return min(candidates, key=lambda w: abs(count_flops(mobilenetv2_3d(w), input_dims)["gflops"] - target_gflops))
