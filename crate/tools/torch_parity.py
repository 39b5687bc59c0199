"""Reference forward passes in PyTorch for the LPS and SE networks.

Writes random float32 weights in the NCKM format plus probe inputs and the
float64 PyTorch outputs. crates/core/tests/interfaces.rs loads the same
files and compares.

    python tools/torch_parity.py crates/core/tests/fixtures/parity
"""

import json
import struct
import sys
from pathlib import Path

import numpy as np
import torch
from torch import nn

N_FEATURES = 15
N_Q = 16
LPS_TARGETS = 48
DIMS = {"d_model": 32, "n_heads": 4, "n_layers": 2, "d_mlp": 48, "d_head_mlp": 16}
N_PROBES = 32


def head(d, h):
    return nn.Sequential(nn.Linear(d, h), nn.GELU(), nn.Linear(h, 1))


class Backbone(nn.Module):
    def __init__(self):
        super().__init__()
        d = DIMS["d_model"]
        layer = nn.TransformerEncoderLayer(
            d, DIMS["n_heads"], DIMS["d_mlp"], dropout=0.0,
            activation="gelu", batch_first=True, norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, DIMS["n_layers"], norm=nn.LayerNorm(d), enable_nested_tensor=False,
        )


class Lps(Backbone):
    def __init__(self):
        super().__init__()
        d = DIMS["d_model"]
        self.target_tokens = nn.Parameter(torch.zeros(LPS_TARGETS, d))
        self.pos_embed = nn.Parameter(torch.zeros(LPS_TARGETS + N_FEATURES, d))
        for name in ["head_direct", "head_link", "head_noise", "head_mask"]:
            setattr(self, name, head(d, DIMS["d_head_mlp"]))

    def forward(self, feats, edges):
        ple = torch.stack([ple_encode(feats[j], edges[j]) for j in range(N_FEATURES)])
        x = torch.cat([self.target_tokens, ple]) + self.pos_embed
        y = self.encoder(x.unsqueeze(0))[0, :LPS_TARGETS]
        q = torch.cat([
            self.head_direct(y[:16]), self.head_link(y[16:32]), self.head_noise(y[32:48]),
        ]).squeeze(-1)
        m = torch.sigmoid(self.head_mask(y).squeeze(-1))
        return q, m


class Se(Backbone):
    def __init__(self):
        super().__init__()
        d = DIMS["d_model"]
        self.cat_embed = nn.Parameter(torch.zeros(4, d))
        self.target_token = nn.Parameter(torch.zeros(d))
        self.target_pos = nn.Parameter(torch.zeros(d))
        self.head = head(d, DIMS["d_head_mlp"])

    def forward(self, cdfs, cats, edges):
        rows = []
        for q, c in zip(cdfs, cats):
            enc = torch.cat([ple_encode(v, edges) for v in q])
            rows.append(enc + self.cat_embed[c - 1])
        rows.append(self.target_token + self.target_pos)
        y = self.encoder(torch.stack(rows).unsqueeze(0))[0, -1]
        return self.head(y.unsqueeze(0))[0, 0]


def ple_encode(x, edges):
    x = torch.as_tensor(x, dtype=torch.float64)
    return ((x - edges[:-1]) / (edges[1:] - edges[:-1])).clamp(0.0, 1.0)


def randomize(model, gen):
    with torch.no_grad():
        for name, p in model.named_parameters():
            v = torch.rand(p.shape, generator=gen, dtype=torch.float64) * 0.4 - 0.2
            if name.endswith(("norm1.weight", "norm2.weight")) or name == "encoder.norm.weight":
                v += 1.0
            # Round through float32 so both sides use the stored values.
            p.copy_(v.to(torch.float32).to(torch.float64))


def write_nckm(path, kind, model, edges):
    state = {k: v.detach().to(torch.float32).numpy() for k, v in model.state_dict().items()}
    names = sorted(state)
    table, offset, blobs = [], 0, []
    for n in names:
        a = np.ascontiguousarray(state[n], dtype="<f4")
        table.append({"name": n, "shape": list(a.shape), "offset": offset})
        offset += a.nbytes
        blobs.append(a.tobytes())
    manifest = {"kind": kind, "dims": DIMS, "ple_edges": edges, "tensors": table}
    header = json.dumps(manifest, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(b"NCKM" + struct.pack("<IQ", 1, len(header)) + header + b"".join(blobs))


def sorted_edges(gen, n, lo, hi):
    cuts = torch.sort(torch.rand(n - 2, generator=gen, dtype=torch.float64)).values
    e = torch.cat([torch.zeros(1, dtype=torch.float64), cuts, torch.ones(1, dtype=torch.float64)])
    return (lo + (hi - lo) * e).tolist()


def main(out):
    out.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(0)
    gen = torch.Generator().manual_seed(2024)
    d = DIMS["d_model"]

    lps = Lps().double().eval()
    randomize(lps, gen)
    lps_edges = [sorted_edges(gen, d + 1, -2.0, 2.0) for _ in range(N_FEATURES)]
    write_nckm(out / "lps.nckm", "lps", lps, lps_edges)

    se = Se().double().eval()
    randomize(se, gen)
    se_edges = sorted_edges(gen, d // N_Q + 1, -160.0, -40.0)
    write_nckm(out / "se.nckm", "se", se, [se_edges])

    lps_e = [torch.tensor(e, dtype=torch.float64) for e in lps_edges]
    se_e = torch.tensor(se_edges, dtype=torch.float64)
    lps_probes, se_probes = [], []
    with torch.no_grad():
        for _ in range(N_PROBES):
            feats = (torch.rand(N_FEATURES, generator=gen, dtype=torch.float64) * 5 - 2.5).tolist()
            q, m = lps(feats, lps_e)
            lps_probes.append({"features": feats, "quantiles": q.tolist(), "mask_prob": m.tolist()})

            n_airs = int(torch.randint(1, 4, (1,), generator=gen))
            serving = int(torch.randint(0, n_airs + 1, (1,), generator=gen)) - 1
            cats = [1] + [2 if i == serving else 3 for i in range(n_airs)] + [4] * n_airs
            cdfs = []
            for _ in cats:
                base = float(torch.rand(1, generator=gen, dtype=torch.float64)) * 100 - 150
                steps = torch.rand(N_Q, generator=gen, dtype=torch.float64) * 2
                cdfs.append((base + torch.cumsum(steps, 0)).tolist())
            se_probes.append({"cdfs": cdfs, "cats": cats, "se": float(se(cdfs, cats, se_e))})

    with open(out / "probes.json", "w") as f:
        json.dump({"lps": lps_probes, "se": se_probes}, f)


if __name__ == "__main__":
    main(Path(sys.argv[1]))
