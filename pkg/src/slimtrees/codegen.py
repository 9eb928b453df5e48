"""Standalone C++ inference source for a (pruned, refined) forest.

The emitted translation unit has no includes and no external dependencies:
per-tree constant node arrays plus a loop-based traversal behind
``predict(const float* x, float* out)``. Arithmetic and stored constants
are 32-bit floats, printed as shortest round-trip decimals, so the same
forest always emits byte-identical source.
"""

import json
from dataclasses import dataclass

import numpy as np

from .evaluation import model_size_bytes
from .forest import Forest, LEAF, _subset_indices


@dataclass
class EmittedModel:
    source_text: str
    manifest: dict


def _f32(value) -> str:
    """Shortest decimal literal that round-trips to float32."""
    return np.format_float_positional(np.float32(value), unique=True, trim="0") + "f"


def _emit_tree(lines, name, tree):
    leaf_ids = tree.leaf_node_ids()
    ordinal = {int(node): pos for pos, node in enumerate(leaf_ids)}

    rows = []
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            rows.append(f"    {{1, 0, 0.0f, -1, -1, {ordinal[i]}}},")
        else:
            rows.append(
                f"    {{0, {int(tree.feature[i])}, {_f32(tree.threshold[i])}, "
                f"{int(tree.left[i])}, {int(tree.right[i])}, -1}},"
            )
    lines.append(f"static const Node {name}_nodes[{tree.n_nodes}] = {{")
    lines.extend(rows)
    lines.append("};")

    lines.append(f"static const float {name}_leaves[{len(leaf_ids)}][N_CLASSES] = {{")
    for node in leaf_ids:
        entries = ", ".join(_f32(v) for v in tree.leaf_values[node])
        lines.append(f"    {{{entries}}},")
    lines.append("};")


def emit_source(forest: Forest, subset=None) -> EmittedModel:
    """Generate the inference source and its manifest for the ``subset`` trees.

    ``predict`` writes the uniform average of the selected trees' leaf
    vectors into ``out`` (length n_classes). The manifest records tree and
    node counts plus the byte footprint under the standard memory model.
    """
    idx = _subset_indices(forest, subset)
    trees = [forest.trees[i] for i in idx]
    n_classes = forest.n_classes
    max_feature = max((int(t.feature.max()) for t in trees if (t.feature != LEAF).any()),
                      default=-1)

    lines = [
        "// Generated decision-forest inference code. Do not edit.",
        "",
        f"#define N_TREES {len(trees)}",
        f"#define N_CLASSES {n_classes}",
        "",
        "struct Node {",
        "    unsigned char is_leaf;",
        "    int feature;",
        "    float threshold;",
        "    int left;",
        "    int right;",
        "    int payload;  // index into the tree's leaf table",
        "};",
        "",
    ]
    for pos, tree in enumerate(trees):
        _emit_tree(lines, f"tree{pos}", tree)
        lines.append("")

    lines.append("static const Node* const forest_nodes[N_TREES] = {")
    for pos in range(len(trees)):
        lines.append(f"    tree{pos}_nodes,")
    lines.append("};")
    lines.append("static const float* const forest_leaves[N_TREES] = {")
    for pos in range(len(trees)):
        lines.append(f"    &tree{pos}_leaves[0][0],")
    lines.append("};")
    lines.append("static const int forest_roots[N_TREES] = {")
    lines.append("    " + ", ".join(str(int(t.root)) for t in trees) + ",")
    lines.append("};")
    lines.extend([
        "",
        'extern "C" void predict(const float* x, float* out) {',
        "    for (int c = 0; c < N_CLASSES; ++c) {",
        "        out[c] = 0.0f;",
        "    }",
        "    for (int t = 0; t < N_TREES; ++t) {",
        "        const Node* nodes = forest_nodes[t];",
        "        int i = forest_roots[t];",
        "        while (!nodes[i].is_leaf) {",
        "            i = (x[nodes[i].feature] <= nodes[i].threshold) ? nodes[i].left",
        "                                                            : nodes[i].right;",
        "        }",
        "        const float* leaf = forest_leaves[t] + nodes[i].payload * N_CLASSES;",
        "        for (int c = 0; c < N_CLASSES; ++c) {",
        "            out[c] += leaf[c];",
        "        }",
        "    }",
        "    for (int c = 0; c < N_CLASSES; ++c) {",
        "        out[c] /= N_TREES;",
        "    }",
        "}",
        "",
    ])

    manifest = {
        "n_trees": len(trees),
        "total_nodes": sum(t.n_nodes for t in trees),
        "n_classes": n_classes,
        "n_features": max_feature + 1,
        "expected_size_bytes": model_size_bytes(forest, idx),
    }
    return EmittedModel(source_text="\n".join(lines), manifest=manifest)


def save_emitted(model: EmittedModel, source_path, manifest_path=None) -> None:
    """Write the source file and a JSON manifest sidecar next to it."""
    with open(source_path, "w") as fh:
        fh.write(model.source_text)
    if manifest_path is None:
        manifest_path = str(source_path) + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(model.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
