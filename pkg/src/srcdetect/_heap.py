"""Array-backed binary min-heap of int64 keys for numba kernels.

Callers encode ``(time, node)`` as ``time * n + node`` so that ordering is by
time first and node id second.
"""
from numba import njit


@njit(cache=True, inline="always")
def push(heap, size, key):
    i = size
    heap[i] = key
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= key:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = key
    return size + 1


@njit(cache=True, inline="always")
def pop(heap, size):
    top = heap[0]
    size -= 1
    if size > 0:
        last = heap[size]
        i = 0
        while True:
            child = 2 * i + 1
            if child >= size:
                break
            if child + 1 < size and heap[child + 1] < heap[child]:
                child += 1
            if heap[child] >= last:
                break
            heap[i] = heap[child]
            i = child
        heap[i] = last
    return top, size


def capacity(m: int, n: int) -> int:
    # every relaxation pushes once and each edge relaxes at most once, plus roots
    return m + n + 1

