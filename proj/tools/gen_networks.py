#!/usr/bin/env python3
"""Regenerate assets/networks/*.json from standard layer tables (int8 tensors)."""

import json
import pathlib
import sys


def out_dim(x, k, s, p, ceil_mode=False):
    span = x + 2 * p - k
    return (-(-span // s) if ceil_mode else span // s) + 1


class Net:
    def __init__(self, name, h, w, c):
        self.name = name
        self.layers = []
        self.shape = (h, w, c)

    def conv(self, name, out_c, k, s=1, p=None, groups=1, src=None, bias=1):
        h, w, c = src or self.shape
        if p is None:
            p = k // 2
        oh, ow = out_dim(h, k, s, p), out_dim(w, k, s, p)
        self.layers.append({
            "name": name, "kind": "COMPUTE",
            "dims": {"in_h": h, "in_w": w, "in_c": c, "out_h": oh, "out_w": ow, "out_c": out_c,
                     "k_h": k, "k_w": k, "groups": groups, "bias": bias},
        })
        shape = (oh, ow, out_c)
        if src is None:
            self.shape = shape
        return shape

    def pool(self, name, k, s, p=0, ceil_mode=False, src=None):
        h, w, c = src or self.shape
        oh, ow = out_dim(h, k, s, p, ceil_mode), out_dim(w, k, s, p, ceil_mode)
        self.layers.append({
            "name": name, "kind": "MEM",
            "dims": {"in_h": h, "in_w": w, "in_c": c, "out_h": oh, "out_w": ow, "out_c": c, "operands": 1},
        })
        shape = (oh, ow, c)
        if src is None:
            self.shape = shape
        return shape

    def global_pool(self, name):
        h, w, _ = self.shape
        return self.pool(name, k=h, s=1) if h == w else None

    def fc(self, name, out_c):
        h, w, c = self.shape
        self.layers.append({
            "name": name, "kind": "COMPUTE",
            "dims": {"in_h": 1, "in_w": 1, "in_c": h * w * c, "out_h": 1, "out_w": 1, "out_c": out_c},
        })
        self.shape = (1, 1, out_c)

    def add(self, name):
        h, w, c = self.shape
        self.layers.append({
            "name": name, "kind": "MEM",
            "dims": {"in_h": h, "in_w": w, "in_c": c, "out_h": h, "out_w": w, "out_c": c, "operands": 2},
        })

    def mem(self, name, a_bytes, b_bytes, out_shape):
        h, w, c = out_shape
        self.layers.append({
            "name": name, "kind": "MEM",
            "input_bytes": a_bytes, "input_b_bytes": b_bytes, "output_bytes": h * w * c,
        })
        self.shape = out_shape

    def to_json(self):
        return {"name": self.name, "element_bytes": 1, "layers": self.layers}


def squeezenet():
    n = Net("squeezenet", 224, 224, 3)
    n.conv("conv1", 64, 3, s=2, p=0)
    n.pool("maxpool1", 3, 2, ceil_mode=True)

    def fire(tag, sq, e1, e3):
        s = n.conv(f"{tag}_squeeze", sq, 1)
        n.conv(f"{tag}_expand1x1", e1, 1, src=s)
        n.conv(f"{tag}_expand3x3", e3, 3, src=s)
        n.shape = (s[0], s[1], e1 + e3)

    fire("fire2", 16, 64, 64)
    fire("fire3", 16, 64, 64)
    n.pool("maxpool3", 3, 2, ceil_mode=True)
    fire("fire4", 32, 128, 128)
    fire("fire5", 32, 128, 128)
    n.pool("maxpool5", 3, 2, ceil_mode=True)
    fire("fire6", 48, 192, 192)
    fire("fire7", 48, 192, 192)
    fire("fire8", 64, 256, 256)
    fire("fire9", 64, 256, 256)
    n.conv("conv10", 1000, 1)
    n.global_pool("avgpool")
    return n


def yolo_lite():
    n = Net("yolo_lite", 224, 224, 3)
    for i, c in enumerate([16, 32, 64, 128, 128], start=1):
        n.conv(f"conv{i}", c, 3)
        n.pool(f"maxpool{i}", 2, 2)
    n.conv("conv6", 256, 3)
    n.conv("conv7", 125, 1)
    return n


def kws():
    n = Net("kws", 101, 40, 1)
    n.conv("conv0", 45, 3, bias=0)
    n.pool("avgpool0", 2, 2)
    for b in range(1, 13):
        n.conv(f"res{b}_conv_a", 45, 3, bias=0)
        n.conv(f"res{b}_conv_b", 45, 3, bias=0)
        n.add(f"res{b}_add")
    n.global_pool("avgpool")
    n.fc("fc", 12)
    return n


def googlenet():
    n = Net("googlenet", 224, 224, 3)
    n.conv("conv1", 64, 7, s=2, p=3)
    n.pool("maxpool1", 3, 2, ceil_mode=True)
    n.conv("conv2", 64, 1)
    n.conv("conv3", 192, 3)
    n.pool("maxpool2", 3, 2, ceil_mode=True)

    def inception(tag, c1, r3, c3, r5, c5, pp):
        src = n.shape
        n.conv(f"{tag}_1x1", c1, 1, src=src)
        r = n.conv(f"{tag}_3x3_reduce", r3, 1, src=src)
        n.conv(f"{tag}_3x3", c3, 3, src=r)
        r = n.conv(f"{tag}_5x5_reduce", r5, 1, src=src)
        n.conv(f"{tag}_5x5", c5, 5, src=r)
        p = n.pool(f"{tag}_pool", 3, 1, p=1, src=src)
        n.conv(f"{tag}_pool_proj", pp, 1, src=p)
        n.shape = (src[0], src[1], c1 + c3 + c5 + pp)

    inception("inception3a", 64, 96, 128, 16, 32, 32)
    inception("inception3b", 128, 128, 192, 32, 96, 64)
    n.pool("maxpool3", 3, 2, ceil_mode=True)
    inception("inception4a", 192, 96, 208, 16, 48, 64)
    inception("inception4b", 160, 112, 224, 24, 64, 64)
    inception("inception4c", 128, 128, 256, 24, 64, 64)
    inception("inception4d", 112, 144, 288, 32, 64, 64)
    inception("inception4e", 256, 160, 320, 32, 128, 128)
    n.pool("maxpool4", 2, 2, ceil_mode=True)
    inception("inception5a", 256, 160, 320, 32, 128, 128)
    inception("inception5b", 384, 192, 384, 48, 128, 128)
    n.global_pool("avgpool")
    n.fc("fc", 1000)
    return n


def alexnet():
    n = Net("alexnet", 224, 224, 3)
    n.conv("conv1", 64, 11, s=4, p=2)
    n.pool("maxpool1", 3, 2)
    n.conv("conv2", 192, 5, p=2)
    n.pool("maxpool2", 3, 2)
    n.conv("conv3", 384, 3)
    n.conv("conv4", 256, 3)
    n.conv("conv5", 256, 3)
    n.pool("maxpool3", 3, 2)
    n.fc("fc6", 4096)
    n.fc("fc7", 4096)
    n.fc("fc8", 1000)
    return n


def resnet50():
    n = Net("resnet50", 224, 224, 3)
    n.conv("conv1", 64, 7, s=2, p=3, bias=0)
    n.pool("maxpool", 3, 2, p=1)
    for stage, (width, blocks) in enumerate([(64, 3), (128, 4), (256, 6), (512, 3)], start=2):
        for b in range(blocks):
            tag = f"res{stage}_{b}"
            stride = 2 if b == 0 and stage > 2 else 1
            src = n.shape
            n.conv(f"{tag}_a", width, 1, bias=0)
            n.conv(f"{tag}_b", width, 3, s=stride, bias=0)
            n.conv(f"{tag}_c", width * 4, 1, bias=0)
            if b == 0:
                n.conv(f"{tag}_downsample", width * 4, 1, s=stride, src=src, bias=0)
            n.add(f"{tag}_add")
    n.global_pool("avgpool")
    n.fc("fc", 1000)
    return n


def yolov2():
    n = Net("yolov2", 416, 416, 3)
    idx = [0]

    def c(out_c, k):
        idx[0] += 1
        return n.conv(f"conv{idx[0]}", out_c, k)

    def mp():
        n.pool(f"maxpool{idx[0]}", 2, 2)

    c(32, 3); mp()
    c(64, 3); mp()
    c(128, 3); c(64, 1); c(128, 3); mp()
    c(256, 3); c(128, 1); c(256, 3); mp()
    c(512, 3); c(256, 1); c(512, 3); c(256, 1)
    route = c(512, 3)
    mp()
    c(1024, 3); c(512, 1); c(1024, 3); c(512, 1); c(1024, 3)
    c(1024, 3)
    trunk = c(1024, 3)
    idx[0] += 1
    pas = n.conv(f"conv{idx[0]}", 64, 1, src=route)
    h, w, ch = pas
    n.mem("reorg", h * w * ch, 0, (h // 2, w // 2, ch * 4))
    th, tw, tc = trunk
    n.mem("concat", th * tw * ch * 4, th * tw * tc, (th, tw, tc + ch * 4))
    c(1024, 3)
    c(125, 1)
    return n


BUILDERS = [squeezenet, yolo_lite, kws, googlenet, alexnet, resnet50, yolov2]


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "assets" / "networks"
    out.mkdir(parents=True, exist_ok=True)
    for build in BUILDERS:
        net = build()
        path = out / f"{net.name}.json"
        path.write_text(json.dumps(net.to_json(), indent=1) + "\n")
        print(f"{path}: {len(net.layers)} layers")


if __name__ == "__main__":
    main()
