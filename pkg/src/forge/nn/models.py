"""The three concrete networks: skip-connection denoiser (also the GAN
generator), reduced-VGG classifier, and patch discriminator."""

from __future__ import annotations

import numpy as np

from .layers import (
    BatchNorm2D,
    Conv2D,
    Dense,
    LeakyReLU,
    MaxPool2,
    ReLU,
    UpsampleNearest2,
    softmax_xent,
)


class Model:
    """Flat, ordered parameter access shared by all three networks."""

    def layers(self):
        raise NotImplementedError

    def params(self):
        out = []
        for i, layer in enumerate(self.layers()):
            for name, value, grad in layer.params():
                out.append((f"{i}.{name}", value, grad))
        return out

    def buffers(self):
        out = []
        for i, layer in enumerate(self.layers()):
            for name, value in layer.buffers():
                out.append((f"{i}.{name}", value))
        return out

    def zero_grads(self):
        for _, _, grad in self.params():
            grad[:] = 0

    def state_arrays(self):
        """(name, array) pairs covering parameters and buffers."""
        return [(n, v) for n, v, _ in self.params()] + self.buffers()

    def assert_finite(self):
        for name, value, _ in self.params():
            if not np.isfinite(value).all():
                raise FloatingPointError(f"non-finite parameter {name}")


class DenoiserNet(Model):
    """3-stage encoder/decoder with skip concatenation and a linear head.

    Spatial size must be divisible by 8; output matches input size.
    """

    def __init__(self, cin, cout, seed=0, widths=(32, 64, 128)):
        rng = np.random.default_rng(seed)
        w1, w2, w3 = widths
        self.cin = cin
        self.cout = cout
        self.widths = tuple(widths)
        self.enc1 = Conv2D(cin, w1, rng)
        self.enc2 = Conv2D(w1, w2, rng)
        self.enc3 = Conv2D(w2, w3, rng)
        self.dec3 = Conv2D(w3 + w3, w2, rng)
        self.dec2 = Conv2D(w2 + w2, w1, rng)
        self.dec1 = Conv2D(w1 + w1, w1, rng)
        self.head = Conv2D(w1, cout, rng)
        self.acts = [LeakyReLU(0.1) for _ in range(6)]
        self.pools = [MaxPool2() for _ in range(3)]
        self.ups = [UpsampleNearest2() for _ in range(3)]

    def layers(self):
        return [self.enc1, self.enc2, self.enc3,
                self.dec3, self.dec2, self.dec1, self.head]

    def forward(self, x, train=True):
        if x.shape[1] != self.cin:
            raise ValueError(f"expected {self.cin} input channels, got {x.shape[1]}")
        a = self.acts
        e1 = a[0].forward(self.enc1.forward(x, train), train)
        p1 = self.pools[0].forward(e1, train)
        e2 = a[1].forward(self.enc2.forward(p1, train), train)
        p2 = self.pools[1].forward(e2, train)
        e3 = a[2].forward(self.enc3.forward(p2, train), train)
        p3 = self.pools[2].forward(e3, train)
        u3 = self.ups[2].forward(p3, train)
        d3 = a[3].forward(self.dec3.forward(
            np.concatenate([u3, e3], axis=1), train), train)
        u2 = self.ups[1].forward(d3, train)
        d2 = a[4].forward(self.dec2.forward(
            np.concatenate([u2, e2], axis=1), train), train)
        u1 = self.ups[0].forward(d2, train)
        d1 = a[5].forward(self.dec1.forward(
            np.concatenate([u1, e1], axis=1), train), train)
        self._skip_channels = (u3.shape[1], u2.shape[1], u1.shape[1])
        return self.head.forward(d1, train)

    def backward(self, dy):
        a = self.acts
        c3, c2, c1 = self._skip_channels
        dd1 = self.dec1.backward(a[5].backward(self.head.backward(dy)))
        du1, de1_skip = dd1[:, :c1], dd1[:, c1:]
        dd2 = self.dec2.backward(a[4].backward(self.ups[0].backward(du1)))
        du2, de2_skip = dd2[:, :c2], dd2[:, c2:]
        dd3 = self.dec3.backward(a[3].backward(self.ups[1].backward(du2)))
        du3, de3_skip = dd3[:, :c3], dd3[:, c3:]
        de3 = self.pools[2].backward(self.ups[2].backward(du3)) + de3_skip
        dp2 = self.enc3.backward(a[2].backward(de3))
        de2 = self.pools[1].backward(dp2) + de2_skip
        dp1 = self.enc2.backward(a[1].backward(de2))
        de1 = self.pools[0].backward(dp1) + de1_skip
        return self.enc1.backward(a[0].backward(de1))


class ClassifierNet(Model):
    """Reduced-VGG: 5 conv/BN/ReLU/pool blocks + 3 fully-connected layers."""

    def __init__(self, cin, n_classes, input_size, seed=0,
                 widths=(32, 32, 64, 64, 128), fc=(256, 100)):
        rng = np.random.default_rng(seed)
        if input_size % 32 != 0:
            raise ValueError("input size must be divisible by 32")
        self.n_classes = n_classes
        self.convs = []
        self.bns = []
        prev = cin
        for w in widths:
            self.convs.append(Conv2D(prev, w, rng))
            self.bns.append(BatchNorm2D(w))
            prev = w
        self.relus = [ReLU() for _ in range(len(widths) + len(fc))]
        self.pools = [MaxPool2() for _ in widths]
        feat = widths[-1] * (input_size // 32) ** 2
        self.fcs = []
        prev = feat
        for w in fc:
            self.fcs.append(Dense(prev, w, rng))
            prev = w
        self.fcs.append(Dense(prev, n_classes, rng))

    def layers(self):
        out = []
        for conv, bn in zip(self.convs, self.bns):
            out.extend([conv, bn])
        out.extend(self.fcs)
        return out

    @property
    def learnable_layer_count(self):
        return len(self.convs) + len(self.fcs)

    def forward(self, x, train=True):
        for i, (conv, bn, pool) in enumerate(zip(self.convs, self.bns, self.pools)):
            x = pool.forward(self.relus[i].forward(
                bn.forward(conv.forward(x, train), train), train), train)
        self._flat_shape = x.shape
        x = x.reshape(x.shape[0], -1)
        n_conv = len(self.convs)
        for j, fcl in enumerate(self.fcs[:-1]):
            x = self.relus[n_conv + j].forward(fcl.forward(x, train), train)
        return self.fcs[-1].forward(x, train)

    def backward(self, dy):
        n_conv = len(self.convs)
        dy = self.fcs[-1].backward(dy)
        for j in range(len(self.fcs) - 2, -1, -1):
            dy = self.fcs[j].backward(self.relus[n_conv + j].backward(dy))
        dy = dy.reshape(self._flat_shape)
        for i in range(n_conv - 1, -1, -1):
            dy = self.convs[i].backward(self.bns[i].backward(
                self.relus[i].backward(self.pools[i].backward(dy))))
        return dy

    def loss(self, x, labels, train=True):
        logits = self.forward(x, train)
        return softmax_xent(logits, labels)

    def predict(self, x, batch=64):
        preds = []
        for i in range(0, len(x), batch):
            logits = self.forward(x[i:i + batch], train=False)
            preds.append(logits.argmax(axis=1))
        return np.concatenate(preds)


class DiscriminatorNet(Model):
    """Strided conv stack ending in a per-patch real/fake logit map."""

    def __init__(self, cin, seed=0, widths=(32, 64, 128, 128)):
        rng = np.random.default_rng(seed)
        self.convs = []
        prev = cin
        for w in widths:
            self.convs.append(Conv2D(prev, w, rng, stride=2))
            prev = w
        self.head = Conv2D(prev, 1, rng, k=1, pad=0)
        self.acts = [LeakyReLU(0.2) for _ in widths]

    def layers(self):
        return self.convs + [self.head]

    def forward(self, x, train=True):
        for conv, act in zip(self.convs, self.acts):
            x = act.forward(conv.forward(x, train), train)
        return self.head.forward(x, train)

    def backward(self, dy):
        dy = self.head.backward(dy)
        for conv, act in zip(reversed(self.convs), reversed(self.acts)):
            dy = conv.backward(act.backward(dy))
        return dy
