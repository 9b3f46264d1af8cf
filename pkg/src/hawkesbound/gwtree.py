"""Multitype Galton-Watson trees with Poisson offspring.

A type-``a`` individual has ``Pois(H[a, b])`` children of type ``b``,
independently over ``b`` and over individuals. Types are 1-based in every
public structure and 0-based in arrays.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from hawkesbound import rng as rngmod
from hawkesbound.errors import Diverged, NodeCapExceeded, NonConvergence, OutOfRange
from hawkesbound.spectral import as_matrix

DEFAULT_MAX_NODES = 1_000_000
OVERFLOW_GUARD = 700.0
LIMIT_TOL = 1e-12
LIMIT_MAX_GENS = 10_000


@dataclass(frozen=True)
class TypedTree:
    """Ulam-Harris labelled tree: ``nodes[i] = (label, type)``, root label ``()``.

    Nodes are stored in breadth-first order, siblings in label order.
    """

    nodes: tuple

    def __len__(self):
        return len(self.nodes)

    @property
    def labels(self):
        return [label for label, _ in self.nodes]

    @property
    def types(self):
        return [tp for _, tp in self.nodes]

    def validate(self):
        """Check prefix closure and gap-free sibling numbering."""
        labels = set(self.labels)
        if len(labels) != len(self.nodes) or () not in labels:
            raise ValueError("labels must be unique and include the root")
        n_children = {}
        for label in labels:
            if label:
                if label[:-1] not in labels:
                    raise ValueError(f"parent of {label} missing")
                n_children[label[:-1]] = max(n_children.get(label[:-1], 0), label[-1])
        for parent, k in n_children.items():
            if any(parent + (j,) not in labels for j in range(1, k + 1)):
                raise ValueError(f"sibling indices under {parent} have gaps")


@dataclass
class Forest:
    """Flat breadth-first arrays of a batch of trees grown together.

    ``parent`` holds global node indices (-1 for roots), ``tree`` the root
    index each node descends from, ``type`` 0-based types and ``offset`` the
    birth date relative to the root (all zero when no dates are drawn).
    """

    tree: np.ndarray
    parent: np.ndarray
    type: np.ndarray
    offset: np.ndarray
    generation: np.ndarray
    truncated: bool = False

    def sizes(self, n_trees):
        return np.bincount(self.tree, minlength=n_trees)


def grow_forest(h, root_types, rng, max_nodes=DEFAULT_MAX_NODES, increments=None,
                prune=None, groups=None, truncate=False):
    """Grow independent trees from ``root_types`` generation by generation.

    Parameters
    ----------
    h : InteractionMatrix or array_like
        Mean offspring matrix, ``[parent type, child type]``.
    root_types : array_like of int
        0-based root types, one tree each.
    rng : numpy.random.Generator
    max_nodes : int
        Cap on the number of nodes per group.
    increments : nested list of callables, optional
        ``increments[a][b](n, rng)`` draws ``n`` birth-date gaps for type-``b``
        children of type-``a`` parents. Without it all offsets stay zero.
    prune : callable, optional
        ``prune(tree_ids, offsets) -> keep_mask`` applied to each new
        generation; dropped children are not grown further.
    groups : array_like of int, optional
        Group id of each root for the node cap (default: one group per tree).
    truncate : bool
        On crossing the cap, return the generations completed so far with
        ``truncated=True`` instead of raising.

    Raises
    ------
    NodeCapExceeded
        With ``replicate`` set to the first offending group id.
    """
    a = as_matrix(h).entries
    m = a.shape[0]
    root_types = np.asarray(root_types, dtype=np.int64)
    n_roots = root_types.size
    groups = np.arange(n_roots) if groups is None else np.asarray(groups, dtype=np.int64)
    n_groups = int(groups.max()) + 1 if n_roots else 0
    counts = np.bincount(groups, minlength=n_groups)
    if n_roots and counts.max() > max_nodes:
        raise NodeCapExceeded(max_nodes, replicate=int(np.argmax(counts > max_nodes)))

    parts = [(np.arange(n_roots), np.full(n_roots, -1), root_types, np.zeros(n_roots))]
    f_tree, f_idx, f_type, f_off = parts[0][0], np.arange(n_roots), root_types, np.zeros(n_roots)
    next_index = n_roots
    truncated = False
    while f_idx.size:
        c_tree, c_par, c_type, c_off = [], [], [], []
        for b in range(m):
            lam = a[f_type, b]
            if not lam.any():
                continue
            k = rng.poisson(lam)
            if not k.any():
                continue
            sel = np.repeat(np.arange(f_idx.size), k)
            offsets = f_off[sel].copy()
            if increments is not None:
                src = f_type[sel]
                for src_type in range(m):
                    mask = src == src_type
                    n = int(mask.sum())
                    if n:
                        offsets[mask] += increments[src_type][b](n, rng)
            c_tree.append(f_tree[sel])
            c_par.append(f_idx[sel])
            c_type.append(np.full(sel.size, b))
            c_off.append(offsets)
        if not c_tree:
            break
        c_tree = np.concatenate(c_tree)
        c_par = np.concatenate(c_par)
        c_type = np.concatenate(c_type)
        c_off = np.concatenate(c_off)
        if prune is not None:
            keep = prune(c_tree, c_off)
            c_tree, c_par, c_type, c_off = c_tree[keep], c_par[keep], c_type[keep], c_off[keep]
        order = np.lexsort((c_type, c_par))
        c_tree, c_par, c_type, c_off = c_tree[order], c_par[order], c_type[order], c_off[order]
        counts += np.bincount(groups[c_tree], minlength=n_groups)
        if counts.max() > max_nodes:
            if truncate:
                truncated = True
                break
            raise NodeCapExceeded(max_nodes, replicate=int(np.argmax(counts > max_nodes)))
        c_idx = np.arange(next_index, next_index + c_tree.size)
        next_index += c_tree.size
        parts.append((c_tree, c_par, c_type, c_off))
        f_tree, f_idx, f_type, f_off = c_tree, c_idx, c_type, c_off

    gens = np.concatenate([np.full(p[0].size, g) for g, p in enumerate(parts)])
    return Forest(
        tree=np.concatenate([p[0] for p in parts]),
        parent=np.concatenate([p[1] for p in parts]),
        type=np.concatenate([p[2] for p in parts]).astype(np.int64),
        offset=np.concatenate([p[3] for p in parts]),
        generation=gens,
        truncated=truncated,
    )


def ulam_harris_labels(parent):
    """Labels for a single BFS-ordered tree given its parent index array."""
    labels = [()] * len(parent)
    next_child = [0] * len(parent)
    for i in range(1, len(parent)):
        p = parent[i]
        next_child[p] += 1
        labels[i] = labels[p] + (next_child[p],)
    return labels


def sample_gw_tree(h, root_type, rng_seed, max_nodes=DEFAULT_MAX_NODES):
    """Sample one tree rooted at a node of (1-based) ``root_type``.

    Raises
    ------
    NodeCapExceeded
        ``partial`` holds the tree built from the generations completed
        before the cap was crossed.
    """
    a = as_matrix(h).entries
    if not 1 <= root_type <= a.shape[0]:
        raise ValueError(f"root_type must lie in [1, {a.shape[0]}]")
    rng = rngmod.generator(rng_seed, rngmod.STREAM_TREES)
    forest = grow_forest(a, [root_type - 1], rng, max_nodes, truncate=True)
    if forest.truncated:
        raise NodeCapExceeded(max_nodes, partial=_to_tree(forest))
    return _to_tree(forest)


def _to_tree(forest):
    labels = ulam_harris_labels(forest.parent)
    return TypedTree(tuple(zip(labels, (int(t) + 1 for t in forest.type))))


def sample_gw_sizes(h, root_types, rng_seed, max_nodes=DEFAULT_MAX_NODES, threads=1):
    """Total progeny of ``len(root_types)`` independent trees (1-based root types)."""
    a = as_matrix(h).entries
    root_types = np.asarray(root_types, dtype=np.int64) - 1

    def run(c, start, stop):
        rng = rngmod.generator(rng_seed, rngmod.STREAM_TREES, c)
        try:
            forest = grow_forest(a, root_types[start:stop], rng, max_nodes)
        except NodeCapExceeded as exc:
            raise NodeCapExceeded(max_nodes, replicate=start + exc.replicate) from exc
        return forest.sizes(stop - start)

    parts = rngmod.map_chunks(run, root_types.size, threads)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def gw_mgf_recursion(h, t, n_gens, guard=OVERFLOW_GUARD):
    """Log-MGF of the tree size clipped at generation ``n_gens``, per root type.

    Iterates ``g_{n+1} = t + H (exp(g_n) - 1)`` from ``g_0 = t``.

    Raises
    ------
    Diverged
        When a component passes ``guard``: ``t`` is beyond the abscissa of
        convergence of the MGF.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = as_matrix(h).entries
    g = np.full(a.shape[0], float(t))
    for n in range(1, n_gens + 1):
        g = t + a @ np.expm1(g)
        if g.max() > guard:
            raise Diverged(n, t)
    return g


def gw_mgf_limit(h, t, tol=LIMIT_TOL, max_gens=LIMIT_MAX_GENS, guard=OVERFLOW_GUARD):
    """Limit of :func:`gw_mgf_recursion`, i.e. log E exp(t |T|) per root type.

    Stops once successive iterates differ by less than ``tol`` in sup norm.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    a = as_matrix(h).entries
    g = np.full(a.shape[0], float(t))
    for n in range(1, max_gens + 1):
        nxt = t + a @ np.expm1(g)
        if nxt.max() > guard:
            raise Diverged(n, t)
        step = float(np.abs(nxt - g).max())
        g = nxt
        if step < tol:
            return g
    raise NonConvergence(float(g.min()), float(g.max()), max_gens)


def gw_mgf_bound(cert, t):
    """Upper bound ``t * C_{r,K}`` on log E exp(t |T|), valid for ``0 <= t <= xi_{r,K}``."""
    from hawkesbound.spectral import bound_constants

    consts = bound_constants(cert)
    if t < 0 or t > consts.xi * (1 + 1e-12):
        raise OutOfRange(f"t={t} outside [0, xi_rK={consts.xi}]")
    return t * consts.c


def borel_progeny_pmf(alpha, n):
    """P(|T| = n) for a Poisson(``alpha``) Galton-Watson tree (Borel law).

    ``exp(-alpha n) (alpha n)^(n-1) / n!``, evaluated in log space. Accepts
    arrays for ``n``.
    """
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    n = np.asarray(n)
    if np.any(n < 1):
        raise ValueError("n must be a positive integer")
    if alpha == 0:
        out = (n == 1).astype(float)
    else:
        nf = n.astype(float)
        out = np.exp(-alpha * nf + (nf - 1) * np.log(alpha * nf) - gammaln(nf + 1))
    return float(out) if out.ndim == 0 else out


def univariate_optimal_xi(alpha):
    """Largest ``xi`` with finite E exp(xi |T|) for Poisson(``alpha``) offspring.

    ``x = xi + alpha (e^x - 1)`` has a positive root iff ``xi`` is at most the
    tangency value ``log(1/alpha) - (1 - alpha)``, and the log-MGF is the
    smallest positive root.

    Returns
    -------
    xi_max : float
    log_mgf_at : callable
        ``log_mgf_at(xi)`` returns the smallest positive root, found by
        bracketed root finding on ``[xi, log(1/alpha)]`` to 1e-12; raises
        :class:`OutOfRange` for ``xi > xi_max``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    x_star = math.log(1 / alpha)
    xi_max = x_star - (1 - alpha)

    def log_mgf_at(xi):
        if xi < 0:
            raise OutOfRange("xi must be nonnegative")
        if xi > xi_max:
            raise OutOfRange(f"xi={xi} exceeds xi_max={xi_max}: the MGF is infinite")
        if xi == 0:
            return 0.0

        def phi(x):
            return xi + alpha * math.expm1(x) - x

        if phi(x_star) >= 0:
            return x_star
        return brentq(phi, xi, x_star, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)

    return xi_max, log_mgf_at
