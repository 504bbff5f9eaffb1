"""Default neck template, averaged from simulator-rendered neck crops."""
from __future__ import annotations

from dataclasses import replace
from importlib import resources
from itertools import product

import numpy as np

from .roi import TEMPLATE_SHAPE, Template, build_template, load_template
from .scene import SceneParams, SceneSpec, render_exact

DEFAULT_TEMPLATE_DIR = "neck_template"


def template_crops() -> list[np.ndarray]:
    """Sixteen stationary neck renders over pose, distance and ambient level."""
    crops = []
    for z, tilt, ambient, radius in product((380.0, 420.0), (0.2, 0.4), (0.1, 18.4), (0.37, 0.43)):
        spec = SceneSpec(params=replace(SceneParams(), ambient_product=ambient, noise_amplitude=0.0),
                         z_neck=z, theta_x_neck=tilt)
        layout = spec.layout()
        img = np.full(layout.shape, spec.params.ambient_product + layout.background)
        skin = layout.skin
        img[skin] = render_exact(spec.params, layout.z_p[skin], layout.theta_x[skin],
                                 layout.theta_y[skin], layout.carotid[skin])
        rows, cols = layout.neck_rect.slices
        crop = img[rows, cols]
        # vary apparent neck width by stretching the central columns
        width = int(round(TEMPLATE_SHAPE[1] * radius / 0.4))
        crops.append(_recentre(crop, width))
    return crops


def _recentre(crop: np.ndarray, width: int) -> np.ndarray:
    from .resize import resize
    out_w = crop.shape[1]
    stretched = resize(crop, (crop.shape[0], width))
    if width >= out_w:
        off = (width - out_w) // 2
        return stretched[:, off:off + out_w]
    pad_l = (out_w - width) // 2
    pad_r = out_w - width - pad_l
    return np.pad(stretched, ((0, 0), (pad_l, pad_r)), mode="edge")


def make_default_template() -> Template:
    return build_template(template_crops(), TEMPLATE_SHAPE, "simulated neck average")


def default_template() -> Template:
    """The packaged template asset."""
    ref = resources.files("nirvitals") / "data" / DEFAULT_TEMPLATE_DIR
    with resources.as_file(ref) as path:
        return load_template(path)
