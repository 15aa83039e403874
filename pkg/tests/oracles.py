"""Independent brute-force oracles used to verify the production code.

Everything here is written as literally as possible (explicit loops over
the defining formulas) and stays independent of the library's vectorized
paths.
"""

import numpy as np


# -- morphology ---------------------------------------------------------------


def naive_erode(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            ok = True
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    inside = 0 <= yy < h and 0 <= xx < w
                    if not (inside and mask[yy, xx]):
                        ok = False
                        break
                if not ok:
                    break
            out[y, x] = 1 if ok else 0
    return out


def naive_dilate(mask, k):
    h, w = mask.shape
    r = k // 2
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            hit = False
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
                        hit = True
                        break
                if hit:
                    break
            out[y, x] = 1 if hit else 0
    return out


def naive_opening(mask, k):
    return naive_dilate(naive_erode(mask, k), k)


# -- metrics ------------------------------------------------------------------


def naive_jaccard(pred, gt):
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    inter = 0
    union = 0
    for y in range(pred.shape[0]):
        for x in range(pred.shape[1]):
            if pred[y, x] and gt[y, x]:
                inter += 1
            if pred[y, x] or gt[y, x]:
                union += 1
    if union == 0:
        return 100.0
    return 100.0 * inter / union


def naive_boundary(mask):
    mask = mask.astype(bool)
    h, w = mask.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                yy, xx = y + dy, x + dx
                if not (0 <= yy < h and 0 <= xx < w) or not mask[yy, xx]:
                    out[y, x] = True
                    break
    return out


def naive_disk_dilate(mask, r):
    mask = mask.astype(bool)
    h, w = mask.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if dy * dy + dx * dx > r * r:
                        continue
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        out[yy, xx] = True
    return out


def naive_boundary_f(pred, gt, radius):
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    if not pred.any() and not gt.any():
        return 100.0
    if pred.any() != gt.any():
        return 0.0
    pb = naive_boundary(pred)
    gb = naive_boundary(gt)
    prec = (pb & naive_disk_dilate(gb, radius)).sum() / pb.sum()
    rec = (gb & naive_disk_dilate(pb, radius)).sum() / gb.sum()
    if prec + rec == 0:
        return 0.0
    return 100.0 * 2 * prec * rec / (prec + rec)


# -- correlation volumes ---------------------------------------------------------


def naive_correlation_normalized(f_cur, f_adj):
    """Quadruple-loop exp inner products, normalized over the last two axes."""
    c, h, w = f_cur.shape
    cv = np.zeros((h, w, h, w))
    for x in range(h):
        for y in range(w):
            for u in range(h):
                for v in range(w):
                    s = 0.0
                    for ch in range(c):
                        s += f_cur[ch, x, y] * f_adj[ch, u, v]
                    cv[x, y, u, v] = np.exp(s)
    norm = np.zeros_like(cv)
    for x in range(h):
        for y in range(w):
            total = cv[x, y].sum()
            norm[x, y] = cv[x, y] / total
    return norm


def naive_aggregate(lam_out, normalized):
    """out[c,x,y] = sum_{u,v} lam_out[c,u,v] * normalized[x,y,u,v]."""
    c, h, w = lam_out.shape
    out = np.zeros((c, h, w))
    for ch in range(c):
        for x in range(h):
            for y in range(w):
                s = 0.0
                for u in range(h):
                    for v in range(w):
                        s += lam_out[ch, u, v] * normalized[x, y, u, v]
                out[ch, x, y] = s
    return out


def naive_conv2d(x, w, b=None, padding=0):
    """Plain cross-correlation of a (C, H, W) map with an (O, C, kh, kw) kernel."""
    c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    oh = h + 2 * padding - kh + 1
    ow = wd + 2 * padding - kw + 1
    out = np.zeros((o, oh, ow))
    for oc in range(o):
        for i in range(oh):
            for j in range(ow):
                s = 0.0
                for ic in range(c):
                    for di in range(kh):
                        for dj in range(kw):
                            s += w[oc, ic, di, dj] * xp[ic, i + di, j + dj]
                out[oc, i, j] = s + (b[oc] if b is not None else 0.0)
    return out


def scripted_group_mixing(tau, params, groups):
    """Step-by-step transcription of the group-mixing refiner.

    params: dict with the production parameter arrays for one mixer
    (expand/groupN/merge2/merge3/out weights and biases).
    """
    expanded = naive_conv2d(tau, params["expand.weight"], params["expand.bias"])
    thread = None
    seconds = []
    thirds = []
    for i in range(groups):
        g = expanded[3 * i : 3 * i + 3]
        if thread is not None:
            g = np.concatenate([g, thread], axis=0)
        mixed = naive_conv2d(
            g, params[f"group{i + 1}.weight"], params[f"group{i + 1}.bias"]
        )
        thread = mixed[0:1]
        seconds.append(mixed[1:2])
        thirds.append(mixed[2:3])
    n2 = naive_conv2d(
        np.concatenate(seconds, axis=0), params["merge2.weight"], params["merge2.bias"], padding=1
    )
    n3 = naive_conv2d(
        np.concatenate(thirds, axis=0), params["merge3.weight"], params["merge3.bias"], padding=1
    )
    n = n2 * n3
    return tau + naive_conv2d(n, params["out.weight"], params["out.bias"], padding=1)


# -- loss ---------------------------------------------------------------------


def naive_weight_map(gt, kernel=31, gain=5.0):
    pad = kernel // 2
    padded = np.pad(gt.astype(float), pad, mode="symmetric")
    h, w = gt.shape
    pooled = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            pooled[y, x] = padded[y : y + kernel, x : x + kernel].mean()
    return 1.0 + gain * np.abs(pooled - gt)


def naive_loss(prob, gt, eps=1.0):
    """Elementwise transcription of the weighted BCE + IoU loss."""
    w = naive_weight_map(gt)
    p = np.clip(prob, 1e-12, 1 - 1e-12)
    bce = -(gt * np.log(p) + (1 - gt) * np.log(1 - p))
    wbce = (w * bce).sum() / w.sum()
    inter = (w * prob * gt).sum()
    union = (w * (prob + gt - prob * gt)).sum()
    wiou = 1.0 - (inter + eps) / (union + eps)
    return wbce + wiou, wbce, wiou
