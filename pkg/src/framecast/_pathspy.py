"""Pure-Python simple-path enumeration kernel.

Mirrors the compiled kernel in `_pathscy.pyx`; the shim in `_paths` picks
whichever is available.  Graphs arrive CSR-encoded with integer labels so
both implementations share one calling convention.
"""

from __future__ import annotations


def enumerate_simple_paths(indptr, labels, dsts, starts, target_mask, max_len):
    """All simple label paths (no node revisited) leaving `starts`.

    indptr/labels/dsts: CSR adjacency over nodes 0..n-1.
    starts: start node ids; the empty path is never reported.
    target_mask: per-node flags; when given, only paths ending on a flagged
        node are collected (they may still be extended past it).
    max_len: maximum number of labels per path; <= 0 means unbounded
        (simple paths are bounded by the node count anyway).

    Returns a set of label-id tuples, deduplicated across node paths.
    """
    n = len(indptr) - 1
    cap = max_len if max_len > 0 else n
    result: set[tuple[int, ...]] = set()
    visited = bytearray(n)
    path: list[int] = []
    for start in starts:
        visited[start] = 1
        stack: list[list[int]] = [[start, indptr[start]]]
        while stack:
            frame = stack[-1]
            node, ei = frame
            if ei < indptr[node + 1] and len(path) < cap:
                frame[1] = ei + 1
                dst = dsts[ei]
                if visited[dst]:
                    continue
                visited[dst] = 1
                path.append(labels[ei])
                if target_mask is None or target_mask[dst]:
                    result.add(tuple(path))
                stack.append([dst, indptr[dst]])
            else:
                stack.pop()
                visited[node] = 0
                if path:
                    path.pop()
    return result
