#!/usr/bin/env python3
# Copyright 2026 The sketchsynth Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the topology and sketch fixtures under fixtures/."""

import json
import os
import sys

NVLINK_NDV2 = (0.7, 46.0)
NVLINK_DGX2 = (0.7, 8.0)
IB = (1.7, 106.0)


def link(src, dst, cost):
    return {"src": src, "dst": dst, "alpha_us": cost[0], "beta_us_per_mb": cost[1]}


def both(a, b, cost):
    return [link(a, b, cost), link(b, a, cost)]


def switch_sides(ranks, policy):
    out = []
    for r in ranks:
        peers = [p for p in ranks if p != r]
        out.append({"kind": "send", "anchor": r, "peers": peers, "policy": policy})
        out.append({"kind": "recv", "anchor": r, "peers": peers, "policy": policy})
    return out


def demo2():
    return {"name": "demo2", "num_ranks": 2, "nodes": [[0, 1]],
            "links": both(0, 1, (1.0, 1.0)), "switches": []}


def ring(n, cost, name):
    links = []
    for r in range(n):
        links += both(r, (r + 1) % n, cost)
    links.sort(key=lambda l: (l["src"], l["dst"]))
    return {"name": name, "num_ranks": n, "nodes": [list(range(n))], "links": links, "switches": []}


def full(n, cost, name, switched=False):
    links = [link(a, b, cost) for a in range(n) for b in range(n) if a != b]
    return {"name": name, "num_ranks": n, "nodes": [list(range(n))], "links": links,
            "switches": switch_sides(list(range(n)), "free") if switched else []}


def ndv2_local_pairs():
    # Hybrid cube-mesh: two fully connected quads plus i <-> i+4.
    pairs = set()
    for quad in ([0, 1, 2, 3], [4, 5, 6, 7]):
        for a in quad:
            for b in quad:
                if a != b:
                    pairs.add((a, b))
    for i in range(4):
        pairs.add((i, i + 4))
        pairs.add((i + 4, i))
    return sorted(pairs)


def ndv2(num_nodes):
    links = []
    for node in range(num_nodes):
        base = 8 * node
        links += [link(base + a, base + b, NVLINK_NDV2) for a, b in ndv2_local_pairs()]
    for a in range(8 * num_nodes):
        for b in range(8 * num_nodes):
            if a // 8 != b // 8:
                links.append(link(a, b, IB))
    links.sort(key=lambda l: (l["src"], l["dst"]))
    name = "ndv2" if num_nodes == 1 else "ndv2x%d" % num_nodes
    return {"name": name, "num_ranks": 8 * num_nodes,
            "nodes": [list(range(8 * k, 8 * k + 8)) for k in range(num_nodes)],
            "links": links, "switches": []}


def dgx2(num_nodes):
    links = []
    switches = []
    n = 16 * num_nodes
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            links.append(link(a, b, NVLINK_DGX2 if a // 16 == b // 16 else IB))
    for node in range(num_nodes):
        switches += switch_sides(list(range(16 * node, 16 * node + 16)), "free")
    name = "dgx2" if num_nodes == 1 else "dgx2x%d" % num_nodes
    return {"name": name, "num_ranks": n,
            "nodes": [list(range(16 * k, 16 * k + 16)) for k in range(num_nodes)],
            "links": links, "switches": switches}


DGX2_SK_1 = """{
    // sketch for intra-node policy
    "intranode_sketch": {
        "strategy": "switch",
        "switches": [[0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15]],
        "switch_hyperedge_strategy": ["uc-min"]
    },

    // sketch for communication policy between any two nodes
    "internode_sketch": {
        "strategy": "relay",
        "internode_conn": {"1" : [0], "3" : [2], "5" : [4], "7" : [6], "9" : [8], "11" : [10], "13" : [12], "15" : [14]}, // "i": [j1, j2] implies GPU i in a node will only send data to GPU j1 and j2 of another node
        "beta_split": {"1": 1, "3": 1, "5": 1, "7" : 1, "9" : 1, "11" : 1, "13" : 1, "15" : 1}, // "i": n implies inter-node sends from a GPU i of a node will use 1/n-th of the inter-node bandwidth
        "chunk_to_relay_map": [2,1] // maps chunk to a sender relay GPU. [r1,r2] means chunk c will be send to another node via GPU (rp//r1)*r1 + r2, where rp is the precondition GPU for chunk c
    },

    // enforces rotational symmetry.
    // [(o,g), ..]: o is the rotational offset and g is the group size for the rotational symmetry.
    // : eg. send(c,src,r) == send( (c + o)
    "symmetry_offsets": [[2, 16], [16, 32]],

    "hyperparameters": {
        "input_chunkup": 2, // Data at each GPU is partitioned into 2 chunks that can be independently routed
        "input_size": "1M"
    }
}
"""

NDV2_SK_1 = {
    "name": "ndv2-sk-1",
    "intranode_sketch": {"strategy": "none"},
    # GPU 1 sends and GPU 0 receives; both share the NIC's PCIe switch.
    "internode_sketch": {"strategy": "relay", "internode_conn": {"1": [0]}, "beta_split": {"1": 1}},
    "symmetry_offsets": [[8, 16]],
    "hyperparameters": {"input_chunkup": 1, "input_size": "1M"},
}


def switch_sketch(policy):
    return {
        "name": "switch3-" + policy,
        "intranode_sketch": {"strategy": "switch", "switches": [[0, 1, 2]],
                             "switch_hyperedge_strategy": [policy]},
        "internode_sketch": {"strategy": "none"},
        # One extra hop lets a chunk relay through the third rank.
        "hyperparameters": {"input_chunkup": 1, "input_size": "1M", "shortest_path_slack": 1},
    }


def main():
    root = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures")
    os.makedirs(root, exist_ok=True)

    def dump(name, doc):
        with open(os.path.join(root, name), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")

    dump("demo2.json", demo2())
    dump("switch3.json", full(3, (1.0, 1.0), "switch3", switched=True))
    dump("ring4.json", ring(4, NVLINK_NDV2, "ring4"))
    dump("ring8.json", ring(8, NVLINK_NDV2, "ring8"))
    dump("fc8.json", full(8, NVLINK_NDV2, "fc8"))
    dump("ndv2.json", ndv2(1))
    dump("ndv2x2.json", ndv2(2))
    dump("dgx2x2.json", dgx2(2))
    dump("ndv2-sk-1.json", NDV2_SK_1)
    dump("switch3-uc-min.json", switch_sketch("uc-min"))
    dump("switch3-uc-max.json", switch_sketch("uc-max"))
    with open(os.path.join(root, "dgx2-sk-1.json"), "w") as f:
        f.write(DGX2_SK_1)


if __name__ == "__main__":
    main()
