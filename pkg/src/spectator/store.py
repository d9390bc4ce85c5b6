"""
Artifact containers: a directory with ``manifest.json`` and one raw little-endian
float64 file per named array (row-major).

Manifests are written with sorted keys and no timestamps, so rerunning a
stage with the same inputs reproduces every byte.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .adam import Adam
from .classifier import MlpClassifier
from .graybox import GrayboxModel
from .pulses import PulseSequence
from .simulator import CharacterizationSet, MeasurementBasisSet
from .quantum import pauli

SCHEMA_VERSION = 1
_DTYPE = "<f8"


class ArtifactError(RuntimeError):
    """Missing, malformed or incompatible artifact."""


def write_container(path, kind: str, arrays: dict, meta: dict) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, value in arrays.items():
        a = np.ascontiguousarray(value, dtype=_DTYPE)
        fname = f"{name}.f64"
        (path / fname).write_bytes(a.tobytes(order="C"))
        entries[name] = {"file": fname, "shape": list(a.shape), "dtype": _DTYPE}
    manifest = {"schema_version": SCHEMA_VERSION, "kind": kind, "arrays": entries, **meta}
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (path / "manifest.json").write_text(text, encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    path = Path(path)
    mf = path / "manifest.json"
    if not path.is_dir() or not mf.exists():
        raise ArtifactError(f"{path}: not an artifact directory (manifest.json missing)")
    try:
        manifest = json.loads(mf.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{mf}: invalid JSON ({exc})") from None
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ArtifactError(f"{mf}: field 'schema_version' is {manifest.get('schema_version')!r}, "
                            f"expected {SCHEMA_VERSION}")
    return manifest


def read_container(path, kind: str | None = None):
    """Return ``(arrays, manifest)``; ``kind`` checks the manifest's ``kind`` field."""
    path = Path(path)
    manifest = read_manifest(path)
    if kind is not None and manifest.get("kind") != kind:
        raise ArtifactError(f"{path}: field 'kind' is {manifest.get('kind')!r}, expected {kind!r}")
    arrays = {}
    for name, entry in manifest.get("arrays", {}).items():
        if entry.get("dtype") != _DTYPE:
            raise ArtifactError(f"{path}: field 'arrays.{name}.dtype' is {entry.get('dtype')!r}")
        raw = (path / entry["file"]).read_bytes()
        shape = tuple(entry["shape"])
        if len(raw) != 8 * int(np.prod(shape)):
            raise ArtifactError(f"{path}: field 'arrays.{name}.shape' {list(shape)} does not match "
                                f"{len(raw)} stored bytes")
        arrays[name] = np.frombuffer(raw, dtype=_DTYPE).reshape(shape).astype(float)
    return arrays, manifest


def _require(manifest, key, path):
    if key not in manifest:
        raise ArtifactError(f"{path}: manifest field '{key}' missing")
    return manifest[key]


# ---- measurement basis -------------------------------------------------------

def basis_arrays(basis: MeasurementBasisSet) -> dict:
    rhos = np.stack([rho for rho, _ in basis.pairs])
    return {"basis_rho_real": rhos.real, "basis_rho_imag": rhos.imag}


def basis_from(arrays: dict, manifest: dict) -> MeasurementBasisSet:
    rhos = arrays["basis_rho_real"] + 1j * arrays["basis_rho_imag"]
    return MeasurementBasisSet(tuple((r, pauli(a)) for r, a in zip(rhos, manifest["basis_axes"])))


# ---- datasets ------------------------------------------------------------------

def save_dataset(path, ds: CharacterizationSet, basis: MeasurementBasisSet, meta: dict) -> Path:
    arrays = {"A": ds.amplitudes, "mu": ds.centers, "features": ds.features, "samples": ds.samples,
              **basis_arrays(basis)}
    info = {"profile": ds.profile, "sigma": ds.sigma, "T": ds.T, "M": ds.M,
            "count": len(ds), "basis_axes": basis.axes, "dataset": ds.metadata, **meta}
    return write_container(path, "dataset", arrays, info)


def load_dataset(path):
    arrays, m = read_container(path, "dataset")
    for key in ("profile", "sigma", "T", "M"):
        _require(m, key, path)
    ds = CharacterizationSet(arrays["A"], arrays["mu"], float(m["sigma"]), float(m["T"]), int(m["M"]),
                             arrays["features"], m["profile"], dict(m.get("dataset", {})))
    return ds, basis_from(arrays, m), m


# ---- graybox models ------------------------------------------------------------

def save_graybox(path, model: GrayboxModel, history: dict, meta: dict) -> Path:
    arrays = {"w_tilde": model.w_tilde, "beta_hat": model.beta_hat,
              "mse_train": history["train"], "mse_test": history["test"],
              **model.optimizer.state_arrays(), **basis_arrays(model.basis)}
    opt = model.optimizer
    info = {"profile": model.profile, "T": model.T, "M": model.M, "omega": model.omega,
            "K_model": model.K, "iteration": model.iteration, "basis_axes": model.basis.axes,
            "adam": {"lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2, "eps": opt.eps, "t": opt.t},
            **meta}
    return write_container(path, "graybox", arrays, info)


def load_graybox(path):
    arrays, m = read_container(path, "graybox")
    a = m["adam"]
    opt = Adam(lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"])
    opt.load_state_arrays({k: v for k, v in arrays.items() if k.startswith("adam_")}, a["t"])
    model = GrayboxModel(float(m["T"]), int(m["M"]), float(m["omega"]), basis_from(arrays, m),
                         arrays["w_tilde"].copy(), arrays["beta_hat"].copy(), opt,
                         int(m["iteration"]), m["profile"])
    history = {"train": arrays["mse_train"], "test": arrays["mse_test"]}
    return model, history, m


# ---- pulses --------------------------------------------------------------------

def save_pulse(path, p: PulseSequence, meta: dict, history=None) -> Path:
    arrays = {"A": p.amplitudes, "mu": p.centers, "samples": p.samples}
    if history is not None:
        arrays["objective_history"] = history
    info = {"sigma": p.sigma, "n": p.n, "T": p.T, "M": p.M, **meta}
    path = write_container(path, "pulse", arrays, info)
    if history is not None:
        rows = "".join(f"{i},{v!r}\n" for i, v in enumerate(np.asarray(history, dtype=float).tolist()))
        write_text(path / "history.csv", "iteration,objective\n" + rows)
    return path


def load_pulse(path):
    arrays, m = read_container(path, "pulse")
    p = PulseSequence(arrays["A"], arrays["mu"], float(m["sigma"]), float(m["T"]), int(m["M"]))
    return p, m


# ---- classifiers -------------------------------------------------------------

def save_classifier(path, clf: MlpClassifier, history: dict, meta: dict) -> Path:
    arrays = {**clf.params, "loss_train": history["train"], "loss_test": history["test"]}
    info = {"labels": clf.labels, "layers": len(clf.weights),
            "test_accuracy": history.get("test_accuracy"), **meta}
    return write_container(path, "classifier", arrays, info)


def load_classifier(path):
    arrays, m = read_container(path, "classifier")
    n = int(_require(m, "layers", path))
    clf = MlpClassifier([arrays[f"W{k}"] for k in range(n)], [arrays[f"b{k}"] for k in range(n)],
                        list(m["labels"]))
    return clf, m


def write_text(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    path.write_text(text, encoding="utf-8")
