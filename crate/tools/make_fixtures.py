"""Regenerate the committed fixture policies under fixtures/networks/.

Each policy is a ReLU MLP fitted to the logits of a smooth hand-written
controller for its environment, then exported in the network JSON format with
three probe points. Run from the repository root:

    python3 tools/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np
import torch

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "networks"
CONSTANTS = json.loads((ROOT / "fixtures" / "constants.json").read_text())


def ball_logits(s):
    p, v = s[:, 0], s[:, 1]
    # Hit more often when the ball is falling fast.
    diff = -2.5 + 1.5 * np.tanh(-v / 3.0)
    return np.stack([np.zeros_like(p), diff], axis=1)


def cruise_logits(s):
    lead = CONSTANTS["cruise_control"]["lead_speed"]
    x, v = s[:, 0], s[:, 1]
    # Decelerate when closing in faster than the gap allows.
    diff = 0.6 * ((v - lead) - 0.5 * (x - 3.0))
    return np.stack([np.zeros_like(x), diff], axis=1)


def pendulum_logits(s):
    theta, omega = s[:, 0], s[:, 1]
    push = -(4.0 * theta + 1.0 * omega)
    return np.stack([np.full_like(theta, 0.5), -1.5 * push, 1.5 * push], axis=1)


SPECS = {
    "bouncing_ball": dict(
        hidden=(32, 32), logits=ball_logits, box=[[0.0, 12.0], [-15.0, 15.0]],
        probes=[[7.0, -0.05], [2.0, -8.0], [5.5, 6.0]],
    ),
    "cruise_control": dict(
        hidden=(64, 64), logits=cruise_logits, box=[[-2.0, 14.0], [24.0, 34.0]],
        probes=[[5.0, 28.0], [3.0, 32.0], [10.0, 26.0]],
    ),
    "pendulum": dict(
        hidden=(64, 64), logits=pendulum_logits, box=[[-0.8, 0.8], [-3.0, 3.0]],
        probes=[[0.0, 0.0], [0.1, -0.2], [-0.3, 0.5]],
    ),
}


def mlp(inputs, hidden, actions):
    layers, width = [], inputs
    for h in hidden:
        layers += [torch.nn.Linear(width, h), torch.nn.ReLU()]
        width = h
    layers.append(torch.nn.Linear(width, actions))
    return torch.nn.Sequential(*layers)


def fit(spec, seed):
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    box = np.array(spec["box"])
    lo, hi = box[:, 0], box[:, 1]
    states = rng.uniform(lo, hi, size=(20000, len(lo)))
    targets = spec["logits"](states)
    # Normalise inputs inside the first layer afterwards.
    centre, scale = (lo + hi) / 2.0, (hi - lo) / 2.0
    x = torch.tensor((states - centre) / scale, dtype=torch.float32)
    y = torch.tensor(targets, dtype=torch.float32)
    net = mlp(x.shape[1], spec["hidden"], y.shape[1])
    opt = torch.optim.Adam(net.parameters(), lr=5e-3)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=1000, gamma=0.3)
    for step in range(3000):
        idx = torch.randint(0, x.shape[0], (1024,))
        loss = torch.mean((net(x[idx]) - y[idx]) ** 2)
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
    with torch.no_grad():
        final = torch.mean((net(x) - y) ** 2).item()
    return net.double(), centre, scale, final


def export(name, spec, net, centre, scale):
    linears = [m for m in net if isinstance(m, torch.nn.Linear)]
    layers = []
    for i, lin in enumerate(linears):
        w = lin.weight.detach().numpy().astype(np.float64)
        b = lin.bias.detach().numpy().astype(np.float64)
        if i == 0:
            # Fold the input normalisation (s - centre) / scale into layer 1.
            b = b - w @ (centre / scale)
            w = w / scale
        layers.append({
            "weights": w.tolist(),
            "bias": b.tolist(),
            "activation": "linear" if i == len(linears) - 1 else "relu",
        })
    doc = {"inputs": len(centre), "actions": len(layers[-1]["bias"]), "layers": layers}
    probes = []
    with torch.no_grad():
        for p in spec["probes"]:
            x = torch.tensor((np.array(p) - centre) / scale, dtype=torch.float64)
            probes.append({"input": p, "logits": net(x).tolist()})
    doc["probes"] = probes
    (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for seed, (name, spec) in enumerate(SPECS.items()):
        net, centre, scale, loss = fit(spec, seed)
        export(name, spec, net, centre, scale)
        print(f"{name}: hidden={spec['hidden']} logit mse={loss:.2e}")


if __name__ == "__main__":
    main()
