"""Declarative convolutional-architecture modeling and cost accounting.

Networks are described as an ordered list of blocks (residual BasicBlock /
Bottleneck, or plain sequential VBlock groups) sandwiched between an
optional stem and a pooling + fully-connected head.  Pruning is expressed
as an integer vector of retained output-channel counts, one gene per
prunable convolution; the final convolution of every block keeps its
original width so that block interfaces never change.

Parameter and FLOP counts use the one-MAC-equals-one-FLOP convention:
convolutions and the fully-connected layer are counted, batch-norm adds
parameters but no FLOPs, and activations/pooling/shortcut adds are free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

ARCH_FORMAT_VERSION = "1"
CODING_FORMAT_VERSION = "1"

CONV = "conv"
BATCH_NORM = "batch-norm"
POOL = "pool"
FULLY_CONNECTED = "fully-connected"
ADD_SHORTCUT = "add-shortcut"

_LAYER_KINDS = (CONV, BATCH_NORM, POOL, FULLY_CONNECTED, ADD_SHORTCUT)
_BLOCK_KINDS = ("BasicBlock", "Bottleneck", "VBlock")

PRESET_NAMES = ("resnet56", "resnet110", "resnet50", "vgg16")


class ArchitectureError(ValueError):
    """Invalid architecture description or incompatible input geometry."""


class CodingError(ValueError):
    """A prune coding does not fit its sub-network."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_channels: int
    out_channels: int
    kernel_h: int = 1
    kernel_w: int = 1
    stride: int = 1
    padding: int = 0
    input_h: int = 1
    input_w: int = 1
    has_bias: bool = False

    def __post_init__(self) -> None:
        if self.kind not in _LAYER_KINDS:
            raise ArchitectureError(f"unknown layer kind {self.kind!r}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ArchitectureError("channel counts must be >= 1")
        if self.kernel_h < 1 or self.kernel_w < 1 or self.stride < 1:
            raise ArchitectureError("kernel and stride must be >= 1")
        if self.kind in (CONV, POOL):
            if self.input_h + 2 * self.padding < self.kernel_h:
                raise ArchitectureError(
                    f"kernel {self.kernel_h} does not fit input "
                    f"{self.input_h}+2*{self.padding}"
                )

    @property
    def output_h(self) -> int:
        if self.kind in (CONV, POOL):
            return (self.input_h + 2 * self.padding - self.kernel_h) // self.stride + 1
        return self.input_h

    @property
    def output_w(self) -> int:
        if self.kind in (CONV, POOL):
            return (self.input_w + 2 * self.padding - self.kernel_w) // self.stride + 1
        return self.input_w

    @property
    def params(self) -> int:
        if self.kind == CONV:
            p = self.in_channels * self.out_channels * self.kernel_h * self.kernel_w
            return p + (self.out_channels if self.has_bias else 0)
        if self.kind == BATCH_NORM:
            return 2 * self.out_channels
        if self.kind == FULLY_CONNECTED:
            return self.in_channels * self.out_channels + self.out_channels
        return 0

    @property
    def flops(self) -> int:
        if self.kind == CONV:
            per_pixel = self.in_channels * self.out_channels * self.kernel_h * self.kernel_w
            return per_pixel * self.output_h * self.output_w
        if self.kind == FULLY_CONNECTED:
            return self.in_channels * self.out_channels
        return 0


@dataclass(frozen=True)
class BlockSpec:
    """One block: a main path of layers plus an optional projection shortcut.

    ``prunable_positions`` are indices into ``layers`` pointing at the
    convolutions whose output width is encoded.  The last convolution of
    the main path is never listed there.
    """

    kind: str
    layers: tuple[LayerSpec, ...]
    shortcut: tuple[LayerSpec, ...] = ()
    prunable_positions: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in _BLOCK_KINDS:
            raise ArchitectureError(f"unknown block kind {self.kind!r}")
        convs = [i for i, l in enumerate(self.layers) if l.kind == CONV]
        if not convs:
            raise ArchitectureError("a block needs at least one conv")
        for p in self.prunable_positions:
            if p not in convs:
                raise ArchitectureError(f"prunable position {p} is not a conv")
        if convs[-1] in self.prunable_positions:
            raise ArchitectureError("the last conv of a block is never prunable")
        if self.kind == "BasicBlock" and (len(convs), len(self.prunable_positions)) != (2, 1):
            raise ArchitectureError("BasicBlock must have 2 convs and 1 prunable position")
        if self.kind == "Bottleneck" and (len(convs), len(self.prunable_positions)) != (3, 2):
            raise ArchitectureError("Bottleneck must have 3 convs and 2 prunable positions")
        if self.kind == "VBlock" and len(self.prunable_positions) != len(convs) - 1:
            raise ArchitectureError("VBlock with n+1 convs must have n prunable positions")

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels

    @property
    def out_channels(self) -> int:
        last_conv = max(i for i, l in enumerate(self.layers) if l.kind == CONV)
        return self.layers[last_conv].out_channels

    @property
    def output_h(self) -> int:
        return self.layers[-1].output_h

    @property
    def output_w(self) -> int:
        return self.layers[-1].output_w

    @property
    def prunable_widths(self) -> tuple[int, ...]:
        return tuple(self.layers[p].out_channels for p in self.prunable_positions)


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    input_h: int
    input_w: int
    num_classes: int
    stem: tuple[LayerSpec, ...]
    blocks: tuple[BlockSpec, ...]
    head: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ArchitectureError("num_classes must be >= 2")
        prev_out = None
        for i, block in enumerate(self.blocks):
            if prev_out is not None and block.in_channels != prev_out:
                raise ArchitectureError(
                    f"block {i} expects {block.in_channels} input channels, "
                    f"previous block produces {prev_out}"
                )
            prev_out = block.out_channels

    @property
    def baseline_cost(self) -> tuple[int, int]:
        return network_cost(self)


@dataclass(frozen=True)
class SubnetPartition:
    """Contiguous, non-overlapping block-index ranges covering all blocks."""

    ranges: tuple[tuple[int, int], ...]  # half-open [start, stop)

    def __post_init__(self) -> None:
        expected = 0
        for start, stop in self.ranges:
            if start != expected or stop <= start:
                raise ArchitectureError(f"ranges must be contiguous, got {self.ranges}")
            expected = stop

    @property
    def num_subnets(self) -> int:
        return len(self.ranges)

    def blocks_of(self, arch: ArchitectureSpec, i: int) -> tuple[BlockSpec, ...]:
        start, stop = self.ranges[i]
        return arch.blocks[start:stop]


@dataclass(frozen=True)
class PruneCoding:
    subnet_index: int
    genes: tuple[int, ...]


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    violations: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# builders

def _conv(cin: int, cout: int, k: int, stride: int, pad: int, h: int, w: int,
          bias: bool = False) -> LayerSpec:
    return LayerSpec(CONV, cin, cout, k, k, stride, pad, h, w, bias)


def _bn(channels: int, h: int, w: int) -> LayerSpec:
    return LayerSpec(BATCH_NORM, channels, channels, input_h=h, input_w=w)


def _basic_block(cin: int, cout: int, stride: int, h: int, w: int) -> BlockSpec:
    c1 = _conv(cin, cout, 3, stride, 1, h, w)
    h2, w2 = c1.output_h, c1.output_w
    c2 = _conv(cout, cout, 3, 1, 1, h2, w2)
    layers = (c1, _bn(cout, h2, w2), c2, _bn(cout, h2, w2),
              LayerSpec(ADD_SHORTCUT, cout, cout, input_h=h2, input_w=w2))
    shortcut: tuple[LayerSpec, ...] = ()
    if stride != 1 or cin != cout:
        shortcut = (_conv(cin, cout, 1, stride, 0, h, w), _bn(cout, h2, w2))
    return BlockSpec("BasicBlock", layers, shortcut, prunable_positions=(0,))


def _bottleneck(cin: int, mid: int, cout: int, stride: int, h: int, w: int,
                project: bool) -> BlockSpec:
    c1 = _conv(cin, mid, 1, 1, 0, h, w)
    c2 = _conv(mid, mid, 3, stride, 1, h, w)
    h2, w2 = c2.output_h, c2.output_w
    c3 = _conv(mid, cout, 1, 1, 0, h2, w2)
    layers = (c1, _bn(mid, h, w), c2, _bn(mid, h2, w2), c3, _bn(cout, h2, w2),
              LayerSpec(ADD_SHORTCUT, cout, cout, input_h=h2, input_w=w2))
    shortcut: tuple[LayerSpec, ...] = ()
    if project:
        shortcut = (_conv(cin, cout, 1, stride, 0, h, w), _bn(cout, h2, w2))
    return BlockSpec("Bottleneck", layers, shortcut, prunable_positions=(0, 2))


def _vblock(widths: Sequence[int], cin: int, h: int, w: int,
            pool_after: Sequence[int]) -> BlockSpec:
    """Plain conv group; ``pool_after[i]`` pools after the i-th conv."""
    layers: list[LayerSpec] = []
    prunable: list[int] = []
    cur_in, ch, cw = cin, h, w
    for i, width in enumerate(widths):
        conv = _conv(cur_in, width, 3, 1, 1, ch, cw)
        if i < len(widths) - 1:
            prunable.append(len(layers))
        layers.append(conv)
        layers.append(_bn(width, conv.output_h, conv.output_w))
        ch, cw = conv.output_h, conv.output_w
        if i in pool_after:
            pool = LayerSpec(POOL, width, width, 2, 2, 2, 0, ch, cw)
            layers.append(pool)
            ch, cw = pool.output_h, pool.output_w
        cur_in = width
    return BlockSpec("VBlock", tuple(layers), (), tuple(prunable))


# ---------------------------------------------------------------------------
# presets

def build_preset(name: str, num_classes: int, input_size: int) -> ArchitectureSpec:
    """Construct one of the bundled architectures at the given resolution."""
    if name not in PRESET_NAMES:
        raise ArchitectureError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    if num_classes < 2:
        raise ArchitectureError("num_classes must be >= 2")
    if name in ("resnet56", "resnet110"):
        depth = 9 if name == "resnet56" else 18
        return _build_cifar_resnet(name, num_classes, input_size, depth)
    if name == "resnet50":
        return _build_resnet50(num_classes, input_size)
    return _build_vgg16(num_classes, input_size)


def _build_cifar_resnet(name: str, num_classes: int, input_size: int,
                        blocks_per_stage: int) -> ArchitectureSpec:
    h = w = input_size
    stem_conv = _conv(3, 16, 3, 1, 1, h, w)
    stem = (stem_conv, _bn(16, stem_conv.output_h, stem_conv.output_w))
    ch, cw = stem_conv.output_h, stem_conv.output_w
    cin = 16
    blocks: list[BlockSpec] = []
    for stage, width in enumerate((16, 32, 64)):
        for b in range(blocks_per_stage):
            stride = 2 if stage > 0 and b == 0 else 1
            block = _basic_block(cin, width, stride, ch, cw)
            blocks.append(block)
            cin, ch, cw = width, block.output_h, block.output_w
    if ch < 1:
        raise ArchitectureError(f"input size {input_size} too small for {name}")
    pool = LayerSpec(POOL, 64, 64, ch, cw, 1, 0, ch, cw)
    fc = LayerSpec(FULLY_CONNECTED, 64, num_classes, has_bias=True)
    return ArchitectureSpec(name, input_size, input_size, num_classes,
                            stem, tuple(blocks), (pool, fc))


def _build_resnet50(num_classes: int, input_size: int) -> ArchitectureSpec:
    h = w = input_size
    stem_conv = _conv(3, 64, 7, 2, 3, h, w)
    ch, cw = stem_conv.output_h, stem_conv.output_w
    stem_pool = LayerSpec(POOL, 64, 64, 3, 3, 2, 1, ch, cw)
    stem = (stem_conv, _bn(64, ch, cw), stem_pool)
    ch, cw = stem_pool.output_h, stem_pool.output_w
    cin = 64
    blocks: list[BlockSpec] = []
    stages = ((64, 256, 3), (128, 512, 4), (256, 1024, 6), (512, 2048, 3))
    for stage, (mid, cout, count) in enumerate(stages):
        for b in range(count):
            stride = 2 if stage > 0 and b == 0 else 1
            block = _bottleneck(cin, mid, cout, stride, ch, cw, project=(b == 0))
            blocks.append(block)
            cin, ch, cw = cout, block.output_h, block.output_w
    if ch < 1:
        raise ArchitectureError(f"input size {input_size} too small for resnet50")
    pool = LayerSpec(POOL, 2048, 2048, ch, cw, 1, 0, ch, cw)
    fc = LayerSpec(FULLY_CONNECTED, 2048, num_classes, has_bias=True)
    return ArchitectureSpec("resnet50", input_size, input_size, num_classes,
                            stem, tuple(blocks), (pool, fc))


def _build_vgg16(num_classes: int, input_size: int) -> ArchitectureSpec:
    # 13 convs in four groups; the two 512-wide stages are folded into one
    # block so the partition has four sub-networks.
    h = w = input_size
    groups = (
        ((64, 64), (1,)),
        ((128, 128), (1,)),
        ((256, 256, 256), (2,)),
        ((512, 512, 512, 512, 512, 512), (2, 5)),
    )
    blocks: list[BlockSpec] = []
    cin, ch, cw = 3, h, w
    for widths, pool_after in groups:
        block = _vblock(widths, cin, ch, cw, pool_after)
        blocks.append(block)
        cin, ch, cw = block.out_channels, block.output_h, block.output_w
    if ch < 1:
        raise ArchitectureError(f"input size {input_size} too small for vgg16")
    fc = LayerSpec(FULLY_CONNECTED, 512 * ch * cw, num_classes, has_bias=True)
    return ArchitectureSpec("vgg16", input_size, input_size, num_classes,
                            (), tuple(blocks), (fc,))


# ---------------------------------------------------------------------------
# partitioning and coding

def partition_by_resolution(arch: ArchitectureSpec) -> SubnetPartition:
    """Group consecutive blocks whose outputs share one spatial resolution."""
    ranges: list[tuple[int, int]] = []
    start = 0
    for i, block in enumerate(arch.blocks):
        if i > 0 and (block.output_h, block.output_w) != (
                arch.blocks[i - 1].output_h, arch.blocks[i - 1].output_w):
            ranges.append((start, i))
            start = i
    ranges.append((start, len(arch.blocks)))
    return SubnetPartition(tuple(ranges))


def encode_baseline(arch: ArchitectureSpec, part: SubnetPartition,
                    i: int) -> PruneCoding:
    """Identity coding: every prunable position keeps its original width."""
    if not 0 <= i < part.num_subnets:
        raise IndexError(f"subnet index {i} out of range")
    genes: list[int] = []
    for block in part.blocks_of(arch, i):
        genes.extend(block.prunable_widths)
    return PruneCoding(i, tuple(genes))


def gene_bounds(arch: ArchitectureSpec, part: SubnetPartition, i: int) -> tuple[int, ...]:
    return encode_baseline(arch, part, i).genes


def validate_coding(arch: ArchitectureSpec, part: SubnetPartition,
                    coding: PruneCoding) -> ValidityReport:
    if not 0 <= coding.subnet_index < part.num_subnets:
        return ValidityReport(False, (f"subnet index {coding.subnet_index} out of range",))
    bounds = gene_bounds(arch, part, coding.subnet_index)
    violations: list[str] = []
    if len(coding.genes) != len(bounds):
        violations.append(
            f"gene count {len(coding.genes)} does not match {len(bounds)} prunable positions")
        return ValidityReport(False, tuple(violations))
    for pos, (gene, bound) in enumerate(zip(coding.genes, bounds)):
        if gene < 1:
            violations.append(f"gene {gene} at position {pos} below minimum 1")
        elif gene > bound:
            violations.append(f"gene {gene} at position {pos} exceeds original {bound}")
    return ValidityReport(not violations, tuple(violations))


def _reprune_block(block: BlockSpec, genes: Sequence[int]) -> BlockSpec:
    """Rebuild a block with pruned widths; spatial geometry is unchanged."""
    widths = dict(zip(block.prunable_positions, genes))
    new_layers: list[LayerSpec] = []
    carry = block.in_channels
    for idx, layer in enumerate(block.layers):
        if layer.kind == CONV:
            out = widths.get(idx, layer.out_channels)
            new_layers.append(replace(layer, in_channels=carry, out_channels=out))
            carry = out
        elif layer.kind == BATCH_NORM:
            new_layers.append(replace(layer, in_channels=carry, out_channels=carry))
        else:
            new_layers.append(replace(layer, in_channels=carry, out_channels=carry))
    return BlockSpec(block.kind, tuple(new_layers), block.shortcut,
                     block.prunable_positions)


def decode_coding(arch: ArchitectureSpec, part: SubnetPartition,
                  coding: PruneCoding) -> tuple[LayerSpec, ...]:
    """Materialize the pruned sub-network as a flat layer list.

    Projection-shortcut layers follow their block's main path.  The
    sub-network's input/output interface is identical to the baseline's.
    """
    report = validate_coding(arch, part, coding)
    if not report.ok:
        raise CodingError("; ".join(report.violations))
    layers: list[LayerSpec] = []
    cursor = 0
    for block in part.blocks_of(arch, coding.subnet_index):
        n = len(block.prunable_positions)
        pruned = _reprune_block(block, coding.genes[cursor:cursor + n])
        cursor += n
        layers.extend(pruned.layers)
        layers.extend(pruned.shortcut)
    return tuple(layers)


# ---------------------------------------------------------------------------
# cost accounting

def cost(layers: Iterable[LayerSpec]) -> tuple[int, int]:
    """(params, flops) of a layer list under the one-MAC-one-FLOP convention."""
    params = 0
    flops = 0
    for layer in layers:
        params += layer.params
        flops += layer.flops
    return params, flops


def subnet_cost(arch: ArchitectureSpec, part: SubnetPartition,
                coding: PruneCoding) -> tuple[int, int]:
    return cost(decode_coding(arch, part, coding))


def fixed_cost(arch: ArchitectureSpec) -> tuple[int, int]:
    """Cost of the never-pruned stem and head."""
    sp, sf = cost(arch.stem)
    hp, hf = cost(arch.head)
    return sp + hp, sf + hf


def network_cost(arch: ArchitectureSpec,
                 part: SubnetPartition | None = None,
                 selections: dict[int, tuple[int, ...] | None] | None = None,
                 ) -> tuple[int, int]:
    """Whole-network (params, flops) with optional per-sub-network codings.

    A selection of ``None`` (or an absent key) keeps that sub-network at
    its baseline widths.
    """
    if part is None:
        part = SubnetPartition(((0, len(arch.blocks)),))
    params, flops = fixed_cost(arch)
    for i in range(part.num_subnets):
        genes = (selections or {}).get(i)
        coding = (PruneCoding(i, tuple(genes)) if genes is not None
                  else encode_baseline(arch, part, i))
        p, f = subnet_cost(arch, part, coding)
        params += p
        flops += f
    return params, flops


def pruning_rates(baseline: ArchitectureSpec, part: SubnetPartition,
                  selections: dict[int, tuple[int, ...] | None],
                  ) -> tuple[float, float]:
    """(pr_flops, pr_params): the fraction of FLOPs/params removed."""
    base_params, base_flops = network_cost(baseline, part)
    pruned_params, pruned_flops = network_cost(baseline, part, selections)
    return (1.0 - pruned_flops / base_flops, 1.0 - pruned_params / base_params)


# ---------------------------------------------------------------------------
# JSON serialization

def _layer_to_json(layer: LayerSpec) -> dict:
    return {
        "kind": layer.kind,
        "in": layer.in_channels,
        "out": layer.out_channels,
        "k": [layer.kernel_h, layer.kernel_w],
        "stride": layer.stride,
        "pad": layer.padding,
        "bias": layer.has_bias,
        "input": [layer.input_h, layer.input_w],
    }


def _layer_from_json(obj: dict) -> LayerSpec:
    return LayerSpec(obj["kind"], obj["in"], obj["out"], obj["k"][0], obj["k"][1],
                     obj["stride"], obj["pad"], obj["input"][0], obj["input"][1],
                     obj["bias"])


def arch_to_json(arch: ArchitectureSpec) -> dict:
    return {
        "format_version": ARCH_FORMAT_VERSION,
        "name": arch.name,
        "input": [arch.input_h, arch.input_w],
        "num_classes": arch.num_classes,
        "stem": [_layer_to_json(l) for l in arch.stem],
        "blocks": [
            {
                "kind": b.kind,
                "layers": [_layer_to_json(l) for l in b.layers],
                "shortcut": [_layer_to_json(l) for l in b.shortcut],
                "prunable": list(b.prunable_positions),
            }
            for b in arch.blocks
        ],
        "head": [_layer_to_json(l) for l in arch.head],
    }


def arch_from_json(obj: dict) -> ArchitectureSpec:
    if obj.get("format_version") != ARCH_FORMAT_VERSION:
        raise ArchitectureError(f"unsupported format_version {obj.get('format_version')!r}")
    return ArchitectureSpec(
        obj["name"], obj["input"][0], obj["input"][1], obj["num_classes"],
        tuple(_layer_from_json(l) for l in obj["stem"]),
        tuple(
            BlockSpec(b["kind"],
                      tuple(_layer_from_json(l) for l in b["layers"]),
                      tuple(_layer_from_json(l) for l in b["shortcut"]),
                      tuple(b["prunable"]))
            for b in obj["blocks"]
        ),
        tuple(_layer_from_json(l) for l in obj["head"]),
    )


def coding_to_json(coding: PruneCoding) -> dict:
    return {"format_version": CODING_FORMAT_VERSION,
            "subnet": coding.subnet_index, "genes": list(coding.genes)}


def coding_from_json(obj: dict) -> PruneCoding:
    if obj.get("format_version") != CODING_FORMAT_VERSION:
        raise CodingError(f"unsupported format_version {obj.get('format_version')!r}")
    return PruneCoding(obj["subnet"], tuple(obj["genes"]))
