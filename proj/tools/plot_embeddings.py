#!/usr/bin/env python3
"""2-D scatter plot of an exported embeddings.tsv (video_id, label, hexfloat dims)."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def read_embeddings(path):
    ids, labels, vecs = [], [], []
    with open(path) as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                continue
            ids.append(parts[0])
            labels.append(int(parts[1]))
            vecs.append([float.fromhex(x) for x in parts[2:]])
    return ids, np.array(labels), np.array(vecs)


def reduce_2d(x, method, seed):
    if x.shape[1] <= 2:
        out = np.zeros((x.shape[0], 2))
        out[:, : x.shape[1]] = x
        return out
    if method == "pca":
        c = x - x.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        return c @ vt[:2].T
    from sklearn.manifold import TSNE

    perplexity = min(30.0, max(5.0, (x.shape[0] - 1) / 4))
    return TSNE(n_components=2, random_state=seed, init="pca",
                perplexity=perplexity).fit_transform(x)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("embeddings", help="embeddings.tsv produced by the retrieve/pretrain commands")
    ap.add_argument("--out", default="embeddings.png")
    ap.add_argument("--method", choices=["tsne", "pca"], default="tsne")
    ap.add_argument("--first-n-classes", type=int, default=0,
                    help="plot only the lowest N labels (0 = all)")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    ids, labels, vecs = read_embeddings(args.embeddings)
    if len(ids) == 0:
        sys.exit(f"no rows in {args.embeddings}")
    if args.first_n_classes > 0:
        keep = labels < args.first_n_classes
        labels, vecs = labels[keep], vecs[keep]

    xy = reduce_2d(vecs, args.method, args.seed)
    classes = np.unique(labels)
    cmap = plt.get_cmap("tab10" if len(classes) <= 10 else "tab20")
    fig, ax = plt.subplots(figsize=(7, 6))
    for i, cls in enumerate(classes):
        m = labels == cls
        ax.scatter(xy[m, 0], xy[m, 1], s=18, color=cmap(i % cmap.N), label=f"class {cls}")
    ax.set_title(f"{args.method} projection of {len(labels)} video embeddings")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
