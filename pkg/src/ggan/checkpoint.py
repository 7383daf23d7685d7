"""Checkpoints: a JSON manifest plus a little-endian float64 sidecar.

A checkpoint is a directory holding ``manifest.json`` and ``params.bin``.
The sidecar stores, for every parameter in manifest order, its values
followed by its two Adam moment buffers.
"""
import json
import os

import numpy as np

from .errors import CorruptManifest, VersionMismatch
from .numerics import ParamStore

VERSION = "ggan-ckpt-1"
MANIFEST = "manifest.json"
SIDECAR = "params.bin"


def save_checkpoint(path, store, meta=None):
    os.makedirs(path, exist_ok=True)
    entries = []
    chunks = []
    for name in store.names():
        p = store[name]
        entries.append({"name": name, "shape": list(p.data.shape), "owner": store.owner[name],
                        "adam_step": int(store.t[name])})
        for arr in (p.data, store.m[name], store.v[name]):
            chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    manifest = {"version": VERSION, "sidecar": SIDECAR, "meta": meta or {}, "params": entries}
    with open(os.path.join(path, SIDECAR), "wb") as f:
        f.write(b"".join(chunks))
    with open(os.path.join(path, MANIFEST), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")


def load_checkpoint(path):
    """Return ``(store, meta)``."""
    try:
        with open(os.path.join(path, MANIFEST)) as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"{path}: unreadable manifest ({exc})") from exc
    if manifest.get("version") != VERSION:
        raise VersionMismatch(f"{path}: version {manifest.get('version')!r}, expected {VERSION!r}")
    try:
        with open(os.path.join(path, manifest.get("sidecar", SIDECAR)), "rb") as f:
            raw = f.read()
        entries = manifest["params"]
        need = sum(3 * 8 * int(np.prod(e["shape"], dtype=np.int64)) for e in entries)
    except (OSError, KeyError, TypeError) as exc:
        raise CorruptManifest(f"{path}: {exc}") from exc
    if len(raw) != need:
        raise CorruptManifest(f"{path}: sidecar has {len(raw)} bytes, manifest needs {need}")
    store = ParamStore()
    off = 0
    for e in entries:
        n = int(np.prod(e["shape"], dtype=np.int64))
        arrs = []
        for _ in range(3):
            arrs.append(np.frombuffer(raw, dtype="<f8", count=n, offset=off)
                        .astype(np.float64).reshape(e["shape"]))
            off += 8 * n
        store.add(e["name"], arrs[0], e["owner"])
        store.m[e["name"]], store.v[e["name"]] = arrs[1], arrs[2]
        store.t[e["name"]] = int(e["adam_step"])
    return store, manifest.get("meta", {})


def restore_params(target, source):
    """Copy values and Adam state from ``source`` into same-named parameters of ``target``."""
    if set(target.names()) != set(source.names()):
        missing = set(target.names()) ^ set(source.names())
        raise CorruptManifest(f"parameter names differ: {sorted(missing)[:5]}")
    for name in target.names():
        if target[name].data.shape != source[name].data.shape:
            raise CorruptManifest(f"shape mismatch for {name}")
        if target.owner[name] != source.owner[name]:
            raise CorruptManifest(f"owner mismatch for {name}")
        target[name].data = source[name].data.copy()
        target.m[name] = source.m[name].copy()
        target.v[name] = source.v[name].copy()
        target.t[name] = source.t[name]


def save_state(state, path, extra=None):
    meta = {"step": state.step, "trainer": state.config.to_dict(),
            "bundle": state.bundle.config(), "extra": extra or {}}
    save_checkpoint(path, state.store, meta)


def load_state(path):
    """Rebuild bundle, discriminators and optimiser state from a checkpoint."""
    from .instances import bundle_from_config
    from .trainer import TrainerConfig, init_state

    store, meta = load_checkpoint(path)
    try:
        config = TrainerConfig.from_dict(meta["trainer"])
        bundle = bundle_from_config(meta["bundle"])
    except (KeyError, TypeError) as exc:
        raise CorruptManifest(f"{path}: incomplete metadata ({exc})") from exc
    state = init_state(config, bundle)
    restore_params(state.store, store)
    state.step = int(meta["step"])
    return state, meta
