"""Compiled tree-induction and traversal kernels.

Trees are stored as flat parallel arrays (feature, threshold, left,
right, per-node payload); ``feature == -1`` marks a leaf. All random
choices inside the kernels come from an explicit splitmix64 stream so
results are identical regardless of platform or scheduling.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _next_u64(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _rand_unit(state):
    state, z = _next_u64(state)
    return state, float(z >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _sample_features(state, d, m, buf):
    """Partial Fisher-Yates: put m distinct columns from 0..d-1 in buf[:m]."""
    for i in range(d):
        buf[i] = i
    for i in range(m):
        state, z = _next_u64(state)
        j = i + np.int64(z % np.uint64(d - i))
        tmp = buf[i]
        buf[i] = buf[j]
        buf[j] = tmp
    return state


@njit(cache=True)
def grow_classification_tree(
    X,
    y,
    sample_idx,
    n_classes,
    max_depth,
    min_samples_split,
    n_candidates,
    random_thresholds,
    seed,
    smoothing,
):
    """CART induction with Gini impurity over ``sample_idx`` rows.

    ``sample_idx`` may contain duplicates (bootstrap resamples).
    ``max_depth < 0`` means unlimited. Splits minimize the weighted child
    Gini; ties go to the lowest feature index, then lowest threshold, so
    the result does not depend on candidate-draw order.

    Returns (feature, threshold, left, right, dist, n_nodes).
    """
    m = sample_idx.shape[0]
    d = X.shape[1]
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    dist = np.zeros((cap, n_classes), dtype=np.float64)

    idx = sample_idx.copy()
    scratch = np.empty(m, dtype=np.int64)
    vals = np.empty(m, dtype=np.float64)
    feat_buf = np.empty(d, dtype=np.int64)
    left_counts = np.empty(n_classes, dtype=np.float64)
    counts = np.empty(n_classes, dtype=np.float64)

    # stack: start, end, depth, parent, is_left
    stack = np.empty((cap, 5), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = m
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0
    state = np.uint64(seed)

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        is_left = stack[top, 4]

        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        total = end - start
        for c in range(n_classes):
            counts[c] = 0.0
        for i in range(start, end):
            counts[y[idx[i]]] += 1.0
        denom = float(total) + smoothing * n_classes
        for c in range(n_classes):
            dist[node, c] = (counts[c] + smoothing) / denom

        pure = False
        for c in range(n_classes):
            if counts[c] == total:
                pure = True
        if (
            pure
            or total < min_samples_split
            or (max_depth >= 0 and depth >= max_depth)
        ):
            continue

        n_cand = n_candidates if n_candidates < d else d
        state = _sample_features(state, d, n_cand, feat_buf)

        best_score = np.inf  # weighted child Gini, lower is better
        best_f = np.int64(-1)
        best_thr = 0.0

        for ci in range(n_cand):
            f = feat_buf[ci]
            for i in range(total):
                vals[i] = X[idx[start + i], f]

            if random_thresholds == 1:
                lo = vals[0]
                hi = vals[0]
                for i in range(1, total):
                    if vals[i] < lo:
                        lo = vals[i]
                    if vals[i] > hi:
                        hi = vals[i]
                if lo == hi:
                    continue
                state, u = _rand_unit(state)
                thr = lo + u * (hi - lo)
                if thr >= hi:
                    thr = lo
                for c in range(n_classes):
                    left_counts[c] = 0.0
                nl = 0
                for i in range(total):
                    if vals[i] <= thr:
                        left_counts[y[idx[start + i]]] += 1.0
                        nl += 1
                nr = total - nl
                # sum squared proportions first, then subtract once:
                # invariant under mirrored candidates, so exact-arithmetic
                # ties stay exact ties in float
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    pl = left_counts[c] / nl
                    pr = (counts[c] - left_counts[c]) / nr
                    sl += pl * pl
                    sr += pr * pr
                score = (nl * (1.0 - sl) + nr * (1.0 - sr)) / total
                if score < best_score or (
                    score == best_score
                    and (f < best_f or (f == best_f and thr < best_thr))
                ):
                    best_score = score
                    best_f = f
                    best_thr = thr
            else:
                order = np.argsort(vals[:total])
                for c in range(n_classes):
                    left_counts[c] = 0.0
                for i in range(total - 1):
                    row = idx[start + order[i]]
                    left_counts[y[row]] += 1.0
                    a = vals[order[i]]
                    b = vals[order[i + 1]]
                    if a == b:
                        continue
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    nl = i + 1
                    nr = total - nl
                    sl = 0.0
                    sr = 0.0
                    for c in range(n_classes):
                        pl = left_counts[c] / nl
                        pr = (counts[c] - left_counts[c]) / nr
                        sl += pl * pl
                        sr += pr * pr
                    score = (nl * (1.0 - sl) + nr * (1.0 - sr)) / total
                    if score < best_score or (
                        score == best_score
                        and (f < best_f or (f == best_f and thr < best_thr))
                    ):
                        best_score = score
                        best_f = f
                        best_thr = thr

        if best_f < 0:
            continue  # all candidate columns constant: stay a leaf

        nl = 0
        nr = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_thr:
                scratch[nl] = idx[i]
                nl += 1
            else:
                nr += 1
                scratch[total - nr] = idx[i]
        for i in range(total):
            idx[start + i] = scratch[i]

        feature[node] = best_f
        threshold[node] = best_thr
        # right child first so the left child pops first (cosmetic only)
        stack[top, 0] = start + nl
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        dist[:n_nodes].copy(),
        n_nodes,
    )


@njit(cache=True)
def tree_apply(X, feature, threshold, left, right):
    """Leaf index reached by each row."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def grow_regression_tree(
    X,
    target,
    col_order,
    max_depth,
    min_samples_split,
    n_candidates,
    seed,
    stamp_buf,
    stamp_base,
):
    """Variance-reduction regression tree using presorted columns.

    ``col_order[:, f]`` holds row ids sorted by feature f; it is computed
    once per booster fit and shared across every tree. ``stamp_buf`` is a
    reusable int64 scratch of length n; membership of a row in the node
    being split is encoded as ``stamp_buf[row] == stamp`` where stamps
    start at ``stamp_base`` (caller advances the base between calls).

    Returns (feature, threshold, left, right, value, n_nodes, stamps_used).
    """
    n, d = X.shape
    cap = 2 * n + 1
    if max_depth >= 0:
        full = 2 ** (max_depth + 1) + 1
        if full < cap:
            cap = full
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    feat_buf = np.empty(d, dtype=np.int64)

    # stack rows: stamp, count, depth, parent, is_left
    stack = np.empty((cap, 5), dtype=np.int64)
    for row in range(n):
        stamp_buf[row] = stamp_base
    stack[0, 0] = stamp_base
    stack[0, 1] = n
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0
    next_stamp = stamp_base + 1
    state = np.uint64(seed)

    while top > 0:
        top -= 1
        stamp = stack[top, 0]
        total = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        is_left = stack[top, 4]

        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node
            else:
                right[parent] = node

        s_total = 0.0
        for row in range(n):
            if stamp_buf[row] == stamp:
                s_total += target[row]
        value[node] = s_total / total

        if total < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        n_cand = n_candidates if n_candidates < d else d
        if n_cand < d:
            state = _sample_features(state, d, n_cand, feat_buf)
        else:
            for i in range(d):
                feat_buf[i] = i

        best_gain = -np.inf  # sum_L^2/n_L + sum_R^2/n_R, higher is better
        base_gain = s_total * s_total / total
        best_f = np.int64(-1)
        best_thr = 0.0

        for ci in range(n_cand):
            f = feat_buf[ci]
            cnt = 0
            s_left = 0.0
            prev_val = 0.0
            for oi in range(n):
                row = col_order[oi, f]
                if stamp_buf[row] != stamp:
                    continue
                v = X[row, f]
                if cnt > 0 and v != prev_val:
                    thr = 0.5 * (prev_val + v)
                    if thr >= v:
                        thr = prev_val
                    nr = total - cnt
                    s_right = s_total - s_left
                    gain = (
                        s_left * s_left / cnt + s_right * s_right / nr
                    )
                    if gain > best_gain or (
                        gain == best_gain
                        and (f < best_f or (f == best_f and thr < best_thr))
                    ):
                        best_gain = gain
                        best_f = f
                        best_thr = thr
                s_left += target[row]
                cnt += 1
                prev_val = v

        if best_f < 0 or best_gain <= base_gain:
            continue  # no variance reduction available

        left_stamp = next_stamp
        right_stamp = next_stamp + 1
        next_stamp += 2
        nl = 0
        for row in range(n):
            if stamp_buf[row] == stamp:
                if X[row, best_f] <= best_thr:
                    stamp_buf[row] = left_stamp
                    nl += 1
                else:
                    stamp_buf[row] = right_stamp

        feature[node] = best_f
        threshold[node] = best_thr
        stack[top, 0] = right_stamp
        stack[top, 1] = total - nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1
        stack[top, 0] = left_stamp
        stack[top, 1] = nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        n_nodes,
        next_stamp - stamp_base,
    )


@njit(cache=True)
def boosted_raw_scores(
    X, feature, threshold, left, right, value, offsets, n_classes, learning_rate
):
    """Sum of shrunken leaf values over all stacked trees, per class.

    Trees are laid out round-major, class-minor: tree t addresses class
    ``t % n_classes``. Node links are relative to each tree's own base.
    """
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    scores = np.zeros((n, n_classes), dtype=np.float64)
    for t in range(n_trees):
        base = offsets[t]
        c = t % n_classes
        for i in range(n):
            node = 0
            while feature[base + node] >= 0:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            scores[i, c] += learning_rate * value[base + node]
    return scores
