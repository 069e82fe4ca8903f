"""3D MobileNetV2 classifier with optional training-time excitation."""
import torch
from torch import nn

from .architecture import Block, Conv, mobilenetv2_3d
from .excitation import excite


def _conv_bn(spec, act=True):
    layers = [
        nn.Conv3d(spec.c_in, spec.c_out, spec.kernel, spec.stride, spec.padding,
                  groups=spec.groups, bias=spec.bias),
        nn.BatchNorm3d(spec.c_out),
    ]
    if act:
        layers.append(nn.ReLU6(inplace=True))
    return layers


class InvertedResidual(nn.Module):
    def __init__(self, block):
        super().__init__()
        layers = []
        for i, conv in enumerate(block.convs):
            layers += _conv_bn(conv, act=i < len(block.convs) - 1)
        self.conv = nn.Sequential(*layers)
        self.use_res_connect = block.residual

    def forward(self, x):
        if self.use_res_connect:
            return x + self.conv(x)
        return self.conv(x)


class MobileNet3D(nn.Module):
    """Layer ``l`` (1-based) is ``features[l - 1]``: 1 = stem, 2 = first inverted residual.

    ``forward(x)`` is the inference path. Passing an :class:`Excitation`
    adds the excitation term after the configured layers; it introduces no
    parameters, so the state dict is the same with or without support.
    """

    def __init__(self, arch=None, supports_excitation=True, input_shape=(3, 16, 112, 112)):
        super().__init__()
        self.arch = arch or mobilenetv2_3d()
        self.supports_excitation = supports_excitation
        self.input_shape = tuple(input_shape)
        feats = []
        for st in self.arch.stages:
            if isinstance(st, Block):
                feats.append(InvertedResidual(st))
            else:
                feats.append(nn.Sequential(*_conv_bn(st)))
        self.features = nn.ModuleList(feats)
        self.pool = nn.AdaptiveAvgPool3d(1)
        self.dropout = nn.Dropout(self.arch.dropout)
        lin = self.arch.classifier
        self.classifier = nn.Linear(lin.c_in, lin.c_out, bias=lin.bias)
        self._init_weights()

    def _init_weights(self):
        for m in self.modules():
            if isinstance(m, nn.Conv3d):
                nn.init.kaiming_normal_(m.weight, mode="fan_out", nonlinearity="relu")
                if m.bias is not None:
                    nn.init.zeros_(m.bias)
            elif isinstance(m, nn.BatchNorm3d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)
            elif isinstance(m, nn.Linear):
                nn.init.normal_(m.weight, 0, 0.01)
                nn.init.zeros_(m.bias)

    @property
    def num_classes(self):
        return self.arch.num_classes

    def _check(self, x):
        if x.dim() != 5 or tuple(x.shape[1:]) != self.input_shape:
            raise ValueError(f"expected input (B, {', '.join(map(str, self.input_shape))}), got {tuple(x.shape)}")

    def _head(self, x):
        x = self.pool(x).flatten(1)
        return self.classifier(self.dropout(x))

    def forward(self, x, excitation=None):
        self._check(x)
        if excitation is None:
            for layer in self.features:
                x = layer(x)
            return self._head(x)
        if not self.supports_excitation:
            raise RuntimeError("model was built without excitation support")
        for i, layer in enumerate(self.features, start=1):
            x = layer(x)
            if i in excitation.layers:
                m = excitation.mask_for(tuple(x.shape[2:]), device=x.device)
                x = excite(x, m, excitation.strength)
        return self._head(x)

    def feature_maps(self, x, upto):
        """Outputs of layers 1..upto (for inspection)."""
        self._check(x)
        out = []
        for layer in self.features[:upto]:
            x = layer(x)
            out.append(x)
        return out


def build_model(width_mult=0.7, num_classes=2, supports_excitation=True, input_shape=(3, 16, 112, 112)):
    return MobileNet3D(mobilenetv2_3d(width_mult, num_classes), supports_excitation, input_shape)


def _unsupported(name):
    def build(*args, **kwargs):
        raise NotImplementedError(f"backbone {name!r} is registered but not implemented")
    return build


ARCHITECTURES = {
    "mobilenetv2_3d": build_model,
    "mobilenetv1_3d": _unsupported("mobilenetv1_3d"),
    "shufflenetv1_3d": _unsupported("shufflenetv1_3d"),
    "shufflenetv2_3d": _unsupported("shufflenetv2_3d"),
    "squeezenet_3d": _unsupported("squeezenet_3d"),
}


def count_module_flops(model, input_shape=(1, 3, 16, 112, 112)):
    """FLOPs measured by hooking the live modules (2 per MAC, conv + linear)."""
    total = [0]

    def hook(mod, inp, out):
        if isinstance(mod, nn.Conv3d):
            k = mod.kernel_size[0] * mod.kernel_size[1] * mod.kernel_size[2]
            total[0] += 2 * (mod.in_channels // mod.groups) * k * out[0].numel()
        elif isinstance(mod, nn.Linear):
            total[0] += 2 * mod.in_features * mod.out_features

    handles = [m.register_forward_hook(hook) for m in model.modules()
               if isinstance(m, (nn.Conv3d, nn.Linear))]
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            model(torch.zeros(input_shape))
    finally:
        for h in handles:
            h.remove()
        model.train(was_training)
    return total[0]
