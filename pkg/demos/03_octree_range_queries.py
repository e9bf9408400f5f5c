"""The spatial index behind the neighbor search.

Builds the flat-array octree over a small point set, shows its structure,
runs a few radius queries against a brute-force scan, and demonstrates the
structural self-check.
"""

import numpy as np

from sphlab import QueryWorkspace, build_octree, range_query, validate_tree


def main():
    rng = np.random.default_rng(3)
    # two tight clusters plus background noise: the tree gets deep only
    # where the points are
    pos = np.vstack([
        rng.normal(0.25, 0.01, (400, 3)),
        rng.normal(0.75, 0.01, (400, 3)),
        rng.random((200, 3)),
    ])
    tree = build_octree(pos, leaf_capacity=8)
    print(f"{pos.shape[0]} points -> {tree.n_nodes} nodes, "
          f"root extent {tree.root_extent:.3f}")

    depths = []
    stack = [(0, 0)]
    while stack:
        node_i, depth = stack.pop()
        node = tree.node(node_i)
        if node.is_leaf:
            depths.append(depth)
        else:
            stack.extend((node.child_base + c, depth + 1) for c in range(8))
    print(f"leaf depth: min {min(depths)}, max {max(depths)} "
          "(deep only inside the clusters)")

    problems = validate_tree(tree)
    print(f"validate_tree: {len(problems)} violations")

    ws = QueryWorkspace()
    for center, radius in [((0.25, 0.25, 0.25), 0.02),
                           ((0.75, 0.75, 0.75), 0.02),
                           ((0.5, 0.5, 0.5), 0.05),
                           ((0.5, 0.5, 0.5), 1.0)]:
        idx, d2 = range_query(tree, center, radius, workspace=ws)
        brute = np.nonzero(((pos - center) ** 2).sum(axis=1)
                           <= radius * radius)[0]
        match = set(idx.tolist()) == set(brute.tolist())
        print(f"query r={radius:<5} at {center}: {idx.size:>4} hits, "
              f"brute force agrees: {match}")
        assert match


if __name__ == "__main__":
    main()
