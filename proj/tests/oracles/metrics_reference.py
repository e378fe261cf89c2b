"""Generates tests/data/metrics_reference.json: random image pairs with PSNR and SSIM computed by
numpy and scikit-image. Pixels are stored as
8-bit levels.

SSIM: luma 0.299 R + 0.587 G + 0.114 B, Gaussian weights (sigma 1.5, 11x11), population
covariance, data range 1, averaged over windows fully inside the image. Masked pairs average the
SSIM map only at window centers valid in both images.
"""

import json
import pathlib

import numpy as np
from skimage.metrics import structural_similarity

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "metrics_reference.json"


def luma(img):
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def psnr(a, b, valid):
    diff = (a - b)[valid]
    mse = float(np.mean(diff * diff))
    return 99.0 if mse == 0 else min(99.0, 10 * np.log10(1 / mse))


def ssim(a, b, valid):
    _, smap = structural_similarity(luma(a), luma(b), gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False, data_range=1.0, full=True)
    pad = 5
    inner = smap[pad:-pad, pad:-pad]
    centers = valid[pad:-pad, pad:-pad]
    return float(inner[centers].mean())


def make_pair(rng, kind, h, w):
    a = rng.random((h, w, 3))
    if kind == "noise":
        b = np.clip(a + rng.normal(0, rng.uniform(0.01, 0.2), a.shape), 0, 1)
    elif kind == "smooth":
        y, x = np.mgrid[0:h, 0:w]
        base = 0.5 + 0.4 * np.sin(x[..., None] / rng.uniform(2, 6) + np.arange(3)) * np.cos(y[..., None] / 5)
        a = base
        b = np.clip(base * rng.uniform(0.8, 1.2) + rng.uniform(-0.05, 0.05), 0, 1)
    else:
        b = rng.random((h, w, 3))
    # 8-bit levels; the C++ side rebuilds each value as float(level / 255.0)
    qa, qb = np.round(a * 255).astype(int), np.round(b * 255).astype(int)
    return qa, qb


def levels_to_float(q):
    return (q / 255.0).astype(np.float32).astype(np.float64)


def main():
    rng = np.random.default_rng(20240601)
    cases = []
    kinds = ["noise", "smooth", "independent"]
    for i in range(20):
        h, w = int(rng.integers(16, 33)), int(rng.integers(16, 41))
        qa, qb = make_pair(rng, kinds[i % 3], h, w)
        a, b = levels_to_float(qa), levels_to_float(qb)
        mask_a = np.ones((h, w), dtype=bool)
        mask_b = np.ones((h, w), dtype=bool)
        masked = i % 4 == 3
        if masked:
            mask_a = rng.random((h, w)) > 0.2
            mask_b = rng.random((h, w)) > 0.2
            mask_a[h // 2, w // 2] = mask_b[h // 2, w // 2] = True
        valid = mask_a & mask_b
        case = {
            "width": w,
            "height": h,
            "a": qa.reshape(-1).tolist(),
            "b": qb.reshape(-1).tolist(),
            "psnr": psnr(a, b, valid),
            "ssim": ssim(a, b, valid),
        }
        if masked:
            case["mask_a"] = mask_a.reshape(-1).astype(int).tolist()
            case["mask_b"] = mask_b.reshape(-1).astype(int).tolist()
        cases.append(case)
    OUT.write_text(json.dumps({"generator": "tests/oracles/metrics_reference.py", "cases": cases}))


if __name__ == "__main__":
    main()
