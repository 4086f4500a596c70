"""Numba-compiled tree growing, bit-identical to the numpy reference.

The kernels mirror ``cart._grow`` / ``cart._best_split`` operation for
operation: the same score and gain expressions evaluated in the same order,
first-maximum tie-break scanned feature-major, midpoint thresholds, and
preorder node/pool consumption. Node values use a sequential sum, matching
the reference's cumsum-based mean, so serialized trees from either engine
compare equal byte for byte.

Instead of re-sorting each node's rows per feature (the reference does a
stable argsort per candidate column), a kernel presorts every column once
and maintains the per-feature sorted row lists through splits by stable
partition. A stable partition of a stably presorted list yields exactly the
stable argsort of the child segment — segments always hold ascending row
indices, so tie order matches — which keeps every gathered value and prefix
sum bitwise identical to the reference while dropping the per-node sort.
List maintenance is skipped when neither child can split again (too deep or
too small), since those segments are never searched.

``forest_kernel`` and ``gbdt_kernel`` run a whole ensemble fit plus test
prediction in one call, reusing the growth buffers across trees/rounds;
their outputs equal the tree-at-a-time routes exactly (tests assert it).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _grow(
    XT,
    y,
    S,
    idx,
    max_depth,
    min_leaf,
    min_split,
    min_imp,
    pool,
    use_pool,
    feature,
    threshold,
    value,
    nsamp,
    left,
    right,
    train_pred,
    all_features,
    tmp,
    xs,
    prefix,
    side,
    stack_node,
    stack_lo,
    stack_hi,
    stack_depth,
):
    """Grow one tree into the passed node arrays; returns the node count.

    ``S`` must hold each feature's stable column order for the rows of
    ``XT`` (shape (p, n)); it is consumed destructively. ``idx`` must be
    arange(n). All other arrays are scratch or output buffers.
    """
    p = XT.shape[0]
    n0 = XT.shape[1]
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n0
    stack_depth[0] = 0
    top = 1
    n_nodes = 1
    pool_pos = 0

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        m = hi - lo

        s = 0.0
        for i in range(lo, hi):
            s += y[idx[i]]
        node_value = s / m
        value[node] = node_value
        nsamp[node] = m
        feature[node] = -1

        split_done = False
        if depth < max_depth and m >= min_split:
            ymin = y[idx[lo]]
            ymax = ymin
            for i in range(lo + 1, hi):
                v = y[idx[i]]
                if v < ymin:
                    ymin = v
                if v > ymax:
                    ymax = v
            if ymax - ymin != 0.0:
                if use_pool:
                    feats = pool[pool_pos]
                    pool_pos += 1
                else:
                    feats = all_features

                best_sc = -np.inf
                best_f = -1
                best_total = 0.0
                best_xlo = 0.0
                best_xhi = 0.0
                for jj in range(feats.shape[0]):
                    f = feats[jj]
                    csum = 0.0
                    for i in range(m):
                        row = S[f, lo + i]
                        xs[i] = XT[f, row]
                        csum += y[row]
                        prefix[i] = csum
                    total = prefix[m - 1]
                    for pos in range(min_leaf - 1, m - min_leaf):
                        if xs[pos + 1] > xs[pos]:
                            nl = np.float64(pos + 1)
                            ls = prefix[pos]
                            rs = total - ls
                            sc = ls * ls / nl + rs * rs / (m - nl)
                            if sc > best_sc:
                                best_sc = sc
                                best_f = f
                                best_total = total
                                best_xlo = xs[pos]
                                best_xhi = xs[pos + 1]

                if best_f >= 0:
                    gain = best_sc - best_total * best_total / m
                    if gain > min_imp:
                        thr = (best_xlo + best_xhi) / 2.0

                        n_l = 0
                        for i in range(lo, hi):
                            r = idx[i]
                            if XT[best_f, r] <= thr:
                                side[r] = 1
                                tmp[n_l] = r
                                n_l += 1
                            else:
                                side[r] = 0
                        k = n_l
                        for i in range(lo, hi):
                            r = idx[i]
                            if side[r] == 0:
                                tmp[k] = r
                                k += 1
                        for i in range(m):
                            idx[lo + i] = tmp[i]

                        # Keep the sorted lists only if some child can
                        # split again; leaf-bound segments are never read.
                        if depth + 1 < max_depth and (
                            n_l >= min_split or m - n_l >= min_split
                        ):
                            for f2 in range(p):
                                c = 0
                                for i in range(lo, hi):
                                    r = S[f2, i]
                                    if side[r] == 1:
                                        tmp[c] = r
                                        c += 1
                                for i in range(lo, hi):
                                    r = S[f2, i]
                                    if side[r] == 0:
                                        tmp[c] = r
                                        c += 1
                                for i in range(m):
                                    S[f2, lo + i] = tmp[i]

                        left_id = n_nodes
                        right_id = n_nodes + 1
                        n_nodes += 2
                        feature[node] = best_f
                        threshold[node] = thr
                        left[node] = left_id
                        right[node] = right_id
                        # Push right first so the left child pops next
                        # (preorder, matching the reference recursion).
                        stack_node[top] = right_id
                        stack_lo[top] = lo + n_l
                        stack_hi[top] = hi
                        stack_depth[top] = depth + 1
                        top += 1
                        stack_node[top] = left_id
                        stack_lo[top] = lo
                        stack_hi[top] = lo + n_l
                        stack_depth[top] = depth + 1
                        top += 1
                        split_done = True

        if not split_done:
            for i in range(lo, hi):
                train_pred[idx[i]] = node_value

    return n_nodes


@njit(cache=True)
def grow_tree(
    XT,
    y,
    order0,
    max_depth,
    min_leaf,
    min_split,
    min_imp,
    pool,
    use_pool,
):
    """Grow one tree. ``XT`` is the (p, n) transposed feature matrix and
    ``order0`` the (p, n) stable argsort of each feature's column."""
    p = XT.shape[0]
    n0 = XT.shape[1]
    cap = 2 * (n0 // max(1, min_leaf)) + 3

    feature = np.empty(cap, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    value = np.zeros(cap, dtype=np.float64)
    nsamp = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    train_pred = np.empty(n0, dtype=np.float64)

    S = order0.copy()
    idx = np.arange(n0)
    n_nodes = _grow(
        XT, y, S, idx, max_depth, min_leaf, min_split, min_imp,
        pool, use_pool,
        feature, threshold, value, nsamp, left, right, train_pred,
        np.arange(p),
        np.empty(n0, dtype=np.int64),
        np.empty(n0, dtype=np.float64),
        np.empty(n0, dtype=np.float64),
        np.zeros(n0, dtype=np.uint8),
        np.empty(cap, dtype=np.int64),
        np.empty(cap, dtype=np.int64),
        np.empty(cap, dtype=np.int64),
        np.empty(cap, dtype=np.int64),
    )
    return feature, threshold, value, nsamp, left, right, n_nodes, train_pred


@njit(cache=True)
def forest_kernel(
    XTall,
    order_all,
    y_all,
    pools,
    use_pool,
    Xtest,
    max_depth,
    min_leaf,
    min_split,
    min_imp,
):
    """Fit every tree of a forest and return the mean test prediction.

    ``XTall``/``order_all``/``y_all`` hold each tree's (bootstrapped)
    transposed matrix, column orders, and targets; ``pools[t]`` that tree's
    per-split feature subsets. Accumulation order matches
    ``forest_predict`` (tree 0 first, then divide), so results are equal
    bitwise.
    """
    T = XTall.shape[0]
    p = XTall.shape[1]
    n0 = XTall.shape[2]
    n_test = Xtest.shape[0]
    cap = 2 * (n0 // max(1, min_leaf)) + 3

    feature = np.empty(cap, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    value = np.zeros(cap, dtype=np.float64)
    nsamp = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    train_pred = np.empty(n0, dtype=np.float64)
    all_features = np.arange(p)
    tmp = np.empty(n0, dtype=np.int64)
    xs = np.empty(n0, dtype=np.float64)
    prefix = np.empty(n0, dtype=np.float64)
    side = np.zeros(n0, dtype=np.uint8)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    S = np.empty((p, n0), dtype=np.int64)
    idx = np.empty(n0, dtype=np.int64)

    acc = np.zeros(n_test, dtype=np.float64)
    for t in range(T):
        S[:] = order_all[t]
        for i in range(n0):
            idx[i] = i
        _grow(
            XTall[t], y_all[t], S, idx,
            max_depth, min_leaf, min_split, min_imp,
            pools[t], use_pool,
            feature, threshold, value, nsamp, left, right, train_pred,
            all_features, tmp, xs, prefix, side,
            stack_node, stack_lo, stack_hi, stack_depth,
        )
        for i in range(n_test):
            node = 0
            while feature[node] >= 0:
                if Xtest[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc[i] += value[node]
    for i in range(n_test):
        acc[i] /= T
    return acc


@njit(cache=True)
def gbdt_kernel(
    XT,
    order0,
    y,
    base,
    Xtest,
    n_rounds,
    lr,
    max_depth,
    min_leaf,
    min_split,
    min_imp,
):
    """Run a full boosting fit and return the test predictions.

    Residual and prediction updates are elementwise ``v + lr * pred``,
    matching the vectorized updates in ``gbdt_fit``/``gbdt_predict``
    bitwise. ``base`` is the numpy mean of ``y`` (pairwise summation),
    computed by the caller.
    """
    p = XT.shape[0]
    n0 = XT.shape[1]
    n_test = Xtest.shape[0]
    cap = 2 * (n0 // max(1, min_leaf)) + 3

    feature = np.empty(cap, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    value = np.zeros(cap, dtype=np.float64)
    nsamp = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    train_pred = np.empty(n0, dtype=np.float64)
    all_features = np.arange(p)
    tmp = np.empty(n0, dtype=np.int64)
    xs = np.empty(n0, dtype=np.float64)
    prefix = np.empty(n0, dtype=np.float64)
    side = np.zeros(n0, dtype=np.uint8)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    S = np.empty((p, n0), dtype=np.int64)
    idx = np.empty(n0, dtype=np.int64)
    dummy_pool = np.zeros((1, 1), dtype=np.int64)

    current = np.empty(n0, dtype=np.float64)
    resid = np.empty(n0, dtype=np.float64)
    for i in range(n0):
        current[i] = base
    test_pred = np.empty(n_test, dtype=np.float64)
    for i in range(n_test):
        test_pred[i] = base

    for r in range(n_rounds):
        for i in range(n0):
            resid[i] = y[i] - current[i]
        S[:] = order0
        for i in range(n0):
            idx[i] = i
        _grow(
            XT, resid, S, idx,
            max_depth, min_leaf, min_split, min_imp,
            dummy_pool, False,
            feature, threshold, value, nsamp, left, right, train_pred,
            all_features, tmp, xs, prefix, side,
            stack_node, stack_lo, stack_hi, stack_depth,
        )
        for i in range(n0):
            current[i] = current[i] + lr * train_pred[i]
        for i in range(n_test):
            node = 0
            while feature[node] >= 0:
                if Xtest[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            test_pred[i] = test_pred[i] + lr * value[node]

    return test_pred


def presort(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(XT, order0) inputs for the kernels from a row-major matrix."""
    XT = np.ascontiguousarray(X.T)
    # Sorting along the contiguous axis of XT equals a per-column stable
    # argsort of X but runs on sequential memory.
    order0 = np.argsort(XT, axis=1, kind="stable")
    return XT, order0
