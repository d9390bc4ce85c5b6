from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Adam:
    """Adam on a dict of named arrays; ``sign=-1`` turns it into ascent."""

    lr: float | dict = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def _lr(self, name):
        return self.lr[name] if isinstance(self.lr, dict) else self.lr

    def step(self, params: dict, grads: dict, sign: float = -1.0) -> None:
        """Update ``params`` in place."""
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[name] += sign * self._lr(name) * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict:
        out = {}
        for name in self.m:
            out[f"adam_m_{name}"] = self.m[name]
            out[f"adam_v_{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict, t: int) -> None:
        self.t = int(t)
        for key, value in arrays.items():
            if key.startswith("adam_m_"):
                self.m[key[len("adam_m_"):]] = np.array(value)
            elif key.startswith("adam_v_"):
                self.v[key[len("adam_v_"):]] = np.array(value)
