"""Pre-wired model bundles."""
from ..errors import BadParameter
from ..graph import GraphDescription
from .base import Bundle
from .custom import CustomBundle
from .gmgan import GmganBundle, build_gmgan, gmgan_dag, gmgan_posterior_k, posterior_logits
from .ssgan import SsganBundle, build_ssgan, motion_analogy, ssgan_dag, ssgan_rollout


def bundle_from_config(cfg):
    """Rebuild a bundle from the dict produced by ``bundle.config()``."""
    cfg = dict(cfg)
    kind = cfg.pop("instance", "custom")
    for key in ("hidden", "transition_hidden", "frame_shape"):
        if key in cfg and cfg[key] is not None:
            cfg[key] = tuple(cfg[key])
    if kind == "gmgan":
        return GmganBundle(**cfg)
    if kind == "ssgan":
        return SsganBundle(**cfg)
    if kind == "custom":
        desc = GraphDescription.from_dict(cfg.pop("description"))
        return CustomBundle(desc, **cfg)
    raise BadParameter(f"unknown instance {kind!r}")


__all__ = [
    "Bundle", "CustomBundle", "GmganBundle", "SsganBundle", "build_gmgan", "build_ssgan",
    "bundle_from_config", "gmgan_dag", "gmgan_posterior_k", "motion_analogy", "posterior_logits",
    "ssgan_dag", "ssgan_rollout",
]
