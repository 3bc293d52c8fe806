"""Set partitions of coefficient indices and their tree encoding.

A partition of the coefficient index set describes which subsets of random
coefficients are allowed to covary: entries of the covariance matrix are
estimated inside a block and fixed to exactly zero across blocks.  The
resulting matrix is block diagonal up to a permutation of indices, which is
equivalent to the nonzero off-diagonal pattern forming a disjoint union of
cliques.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Partition",
    "TreeRepr",
    "iter_partitions",
    "partition_to_tree",
    "tree_to_partition",
    "pattern_is_clique_union",
]


@dataclass(frozen=True)
class Partition:
    """Canonical set partition of ``{0, ..., size-1}``.

    Blocks are stored sorted ascending internally and ordered by their least
    element, so equal partitions always compare equal and the text form is
    unique.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        canon = canonicalize(self.blocks)
        if canon != self.blocks:
            raise ValueError("blocks not in canonical form; use Partition.of()")
        seen = sorted(itertools.chain.from_iterable(self.blocks))
        if not self.blocks or any(len(b) == 0 for b in self.blocks):
            raise ValueError("empty block")
        if seen != list(range(len(seen))):
            raise ValueError("blocks must partition a contiguous 0-based index range")

    @staticmethod
    def of(blocks) -> "Partition":
        return Partition(canonicalize(blocks))

    @staticmethod
    def one_block(size: int) -> "Partition":
        return Partition((tuple(range(size)),))

    @staticmethod
    def singletons(size: int) -> "Partition":
        return Partition(tuple((i,) for i in range(size)))

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_nonzeros(self) -> int:
        """Nonzero count of the induced pattern, diagonal included."""
        return sum(len(b) ** 2 for b in self.blocks)

    def pattern(self) -> np.ndarray:
        """Boolean (size, size) mask: True where the entry is estimated."""
        z = np.zeros((self.size, self.size), dtype=bool)
        for b in self.blocks:
            idx = np.array(b)
            z[np.ix_(idx, idx)] = True
        return z

    def block_of(self, i: int) -> int:
        for t, b in enumerate(self.blocks):
            if i in b:
                return t
        raise IndexError(i)

    def refines(self, other: "Partition") -> bool:
        """True if every block of self lies inside a block of other."""
        if self.size != other.size:
            return False
        owner = {i: t for t, b in enumerate(other.blocks) for i in b}
        return all(len({owner[i] for i in b}) == 1 for b in self.blocks)

    def permute(self, perm) -> "Partition":
        """Relabel index i as perm[i]."""
        p = list(perm)
        return Partition.of([[p[i] for i in b] for b in self.blocks])

    def sort_key(self):
        return self.blocks

    def __str__(self) -> str:
        return format_partition(self)


def canonicalize(blocks) -> tuple[tuple[int, ...], ...]:
    bs = [tuple(sorted(int(i) for i in b)) for b in blocks]
    bs.sort(key=lambda b: b[0] if b else -1)
    return tuple(bs)


def format_partition(p: Partition) -> str:
    """Render with 1-based indices, e.g. ``{1,2,3}{4,5}{6}{7}{8}``."""
    return "".join("{" + ",".join(str(i + 1) for i in b) + "}" for b in p.blocks)


_BLOCK_RE = re.compile(r"\{([^{}]*)\}")


def parse_partition(text: str, size: int | None = None) -> Partition:
    """Parse the 1-based text form; ``full``/``diagonal`` aliases need size."""
    s = text.strip().lower()
    if s in ("full", "one-block"):
        if size is None:
            raise ValueError("alias 'full' requires the coefficient count")
        return Partition.one_block(size)
    if s in ("diagonal", "diag", "singletons"):
        if size is None:
            raise ValueError("alias 'diagonal' requires the coefficient count")
        return Partition.singletons(size)
    body = text.strip()
    matched = "".join(m.group(0) for m in _BLOCK_RE.finditer(body))
    if matched.replace(" ", "") != body.replace(" ", "") or not body:
        raise ValueError(f"malformed partition text: {text!r}")
    blocks = []
    for m in _BLOCK_RE.finditer(body):
        items = [t for t in m.group(1).split(",") if t.strip()]
        if not items:
            raise ValueError(f"empty block in {text!r}")
        blocks.append([int(t) - 1 for t in items])
    flat = sorted(itertools.chain.from_iterable(blocks))
    if any(i < 0 for i in flat):
        raise ValueError("indices are 1-based and must be positive")
    if len(set(flat)) != len(flat):
        raise ValueError(f"duplicated index in {text!r}")
    if size is not None and flat != list(range(size)):
        raise ValueError(f"partition {text!r} does not cover 1..{size}")
    part = Partition.of(blocks)
    return part


def iter_partitions(size: int):
    """Yield every partition of {0..size-1} in canonical recursive order.

    The count follows the Bell numbers: 1, 2, 5, 15, 52, 203, ...
    """
    if size == 0:
        yield Partition(())
        return

    def rec(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        # first always joins the block listed first, keeping canonical order
        for r in range(len(rest) + 1):
            for mates in itertools.combinations(rest, r):
                remaining = [i for i in rest if i not in mates]
                for tail in rec(remaining):
                    yield [(first, *mates)] + tail

    for blocks in rec(tuple(range(size))):
        yield Partition(tuple(blocks))


def pattern_is_clique_union(z: np.ndarray) -> bool:
    """Check that each connected component of the nonzero graph is a clique."""
    z = np.asarray(z)
    n = z.shape[0]
    if not np.array_equal(z, z.T):
        return False
    adj = z.copy()
    np.fill_diagonal(adj, True)
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if seen[i]:
            continue
        comp = [i]
        seen[i] = True
        stack = [i]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(adj[u]):
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        idx = np.array(comp)
        if not adj[np.ix_(idx, idx)].all():
            return False
    return True


def partition_from_pattern(z: np.ndarray) -> Partition:
    if not pattern_is_clique_union(z):
        raise ValueError("pattern is not a disjoint union of cliques")
    n = z.shape[0]
    adj = np.asarray(z).copy()
    np.fill_diagonal(adj, True)
    seen = np.zeros(n, dtype=bool)
    blocks = []
    for i in range(n):
        if seen[i]:
            continue
        members = list(np.flatnonzero(adj[i]))
        for m in members:
            seen[m] = True
        blocks.append(members)
    return Partition.of(blocks)


@dataclass(frozen=True)
class TreeRepr:
    """Tree encoding of a block structure.

    Nodes are indexed 0..2R: node 0 is the root, nodes 1..R are candidate
    block nodes (included iff ``y`` is set), nodes R+1..2R are the coefficient
    leaves.  ``x[i, j]`` marks a directed edge i -> j.  A valid tree has one
    incoming block edge per leaf, one root edge per included block, and
    exactly (#included blocks + R + 1) - 1 edges.
    """

    size: int
    x: np.ndarray
    y: np.ndarray

    @property
    def n_nodes(self) -> int:
        return 2 * self.size + 1

    def leaf_node(self, i: int) -> int:
        return self.size + 1 + i

    def block_node(self, t: int) -> int:
        return 1 + t

    def __eq__(self, other):
        return (
            isinstance(other, TreeRepr)
            and self.size == other.size
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )


def partition_to_tree(p: Partition) -> TreeRepr:
    """Build the tree: root -> one node per block -> member leaves."""
    r = p.size
    x = np.zeros((2 * r + 1, 2 * r + 1), dtype=np.int8)
    y = np.zeros(r, dtype=np.int8)
    for t, block in enumerate(p.blocks):
        y[t] = 1
        x[0, 1 + t] = 1
        for i in block:
            x[1 + t, r + 1 + i] = 1
    return TreeRepr(size=r, x=x, y=y)


def tree_to_partition(tree: TreeRepr) -> Partition:
    """Invert :func:`partition_to_tree`, validating the tree invariants."""
    r = tree.size
    x, y = np.asarray(tree.x), np.asarray(tree.y)
    root, blocks, leaves = 0, range(1, r + 1), range(r + 1, 2 * r + 1)
    if x.shape != (2 * r + 1, 2 * r + 1):
        raise ValueError("edge matrix has the wrong shape")
    if x[:, root].any():
        raise ValueError("root node has an incoming edge")
    if x[list(leaves), :].any():
        raise ValueError("a leaf node has an outgoing edge")
    if np.diagonal(x).any():
        raise ValueError("self arc present")
    for b in blocks:
        if x[root, b] != y[b - 1]:
            raise ValueError("included block nodes must hang off the root")
        if not y[b - 1] and x[b, :].any():
            raise ValueError("excluded block node has edges")
    members: dict[int, list[int]] = {}
    for i, leaf in enumerate(leaves):
        parents = [b for b in blocks if x[b, leaf]]
        if len(parents) != 1:
            raise ValueError(f"leaf {i} must belong to exactly one block")
        members.setdefault(parents[0], []).append(i)
    n_nodes = int(y.sum()) + r + 1
    if int(x.sum()) != n_nodes - 1:
        raise ValueError("edge count must equal node count minus one")
    if set(members) != {b for b in blocks if y[b - 1]}:
        raise ValueError("included block node has no leaves")
    return Partition.of(list(members.values()))
