# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled simple-path enumeration kernel.

Same contract as `_pathspy.enumerate_simple_paths`; see that module for the
parameter documentation.  This version keeps the DFS bookkeeping in C
buffers and only touches Python objects when a path is collected.
"""

from libc.stdlib cimport free, malloc


def enumerate_simple_paths(indptr, labels, dsts, starts, target_mask, max_len):
    cdef const int[:] indptr_v = indptr
    cdef const int[:] labels_v = labels
    cdef const int[:] dsts_v = dsts
    cdef const int[:] starts_v = starts
    cdef const signed char[:] mask_v
    cdef bint has_mask = target_mask is not None
    if has_mask:
        mask_v = target_mask

    cdef int n = indptr_v.shape[0] - 1
    cdef int cap = max_len if max_len > 0 else n
    if cap > n:
        cap = n

    cdef int *stack_node = <int *> malloc((cap + 1) * sizeof(int))
    cdef int *stack_ei = <int *> malloc((cap + 1) * sizeof(int))
    cdef int *path = <int *> malloc((cap + 1) * sizeof(int))
    cdef signed char *visited = <signed char *> malloc(n * sizeof(signed char))
    if stack_node == NULL or stack_ei == NULL or path == NULL or visited == NULL:
        free(stack_node); free(stack_ei); free(path); free(visited)
        raise MemoryError()

    cdef int i, si, start, depth, plen, node, ei, dst
    cdef set result = set()
    try:
        for i in range(n):
            visited[i] = 0
        for si in range(starts_v.shape[0]):
            start = starts_v[si]
            visited[start] = 1
            stack_node[0] = start
            stack_ei[0] = indptr_v[start]
            depth = 0
            plen = 0
            while depth >= 0:
                node = stack_node[depth]
                ei = stack_ei[depth]
                if ei < indptr_v[node + 1] and plen < cap:
                    stack_ei[depth] = ei + 1
                    dst = dsts_v[ei]
                    if visited[dst]:
                        continue
                    visited[dst] = 1
                    path[plen] = labels_v[ei]
                    plen += 1
                    if not has_mask or mask_v[dst]:
                        result.add(tuple([path[i] for i in range(plen)]))
                    depth += 1
                    stack_node[depth] = dst
                    stack_ei[depth] = indptr_v[dst]
                else:
                    visited[node] = 0
                    depth -= 1
                    if plen > 0:
                        plen -= 1
    finally:
        free(stack_node)
        free(stack_ei)
        free(path)
        free(visited)
    return result
