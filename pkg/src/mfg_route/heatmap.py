"""Binary PPM (P6) heatmaps of a distribution over grid cells."""

import numpy as np

# intensity stops 0 / 128 / 255: white, orange, red
_STOPS = np.array([[255, 255, 255], [255, 165, 0], [255, 0, 0]], dtype=np.int64)
OBSTACLE_RGB = (0, 0, 0)


def colormap(level):
    """RGB triples for integer intensities in ``[0, 255]``."""
    v = np.asarray(level, dtype=np.int64)
    lo = v <= 128
    a = np.where(lo[..., None], _STOPS[0], _STOPS[1])
    b = np.where(lo[..., None], _STOPS[1], _STOPS[2])
    num = np.where(lo, v, v - 128)[..., None]
    den = np.where(lo, 128, 127)[..., None]
    # round-half-up in integer arithmetic
    rgb = a + ((b - a) * num * 2 + den) // (2 * den)
    return rgb.astype(np.uint8)


def heatmap_pixels(P, sc):
    """``(height, width, 3)`` uint8 image of ``P`` on the scenario grid."""
    P = np.asarray(P, dtype=float)
    if P.shape != (sc.num_cells,):
        raise ValueError(f"distribution must have {sc.num_cells} entries, got {P.shape}")
    blocked = sc.obstacle_mask()
    free = np.where(blocked, 0.0, P)
    peak = free.max()
    level = np.zeros(sc.num_cells, dtype=np.int64)
    if peak > 0:
        level = np.rint(255.0 * free / peak).astype(np.int64)
    rgb = colormap(level)
    rgb[blocked] = OBSTACLE_RGB
    return rgb.reshape(sc.height, sc.width, 3)


def render_heatmap(P, sc, out_path, scale=1):
    """Write ``P`` as a P6 PPM, one ``scale x scale`` block per cell."""
    img = heatmap_pixels(P, sc)
    if scale > 1:
        img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    h, w = img.shape[:2]
    with open(out_path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(img).tobytes())
    return out_path


def read_ppm(path):
    """Parse a P6 file written by :func:`render_heatmap`."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not an 8-bit P6 image")
    w, h = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
