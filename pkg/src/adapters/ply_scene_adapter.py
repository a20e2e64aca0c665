# -*- coding: utf-8 -*-
import logging
from typing import List, Tuple

import numpy as np
from plyfile import PlyData, PlyElement, PlyElementParseError, PlyHeaderParseError
from scipy.special import expit, logit

from src.core.domain.errors import (
    IngestError,
    MalformedHeaderError,
    OutputError,
    TruncatedFileError,
    UnsupportedFieldLayoutError,
)
from src.core.domain.models import Gaussian3D, Scene, SceneFileReport
from src.core.ports.scene_port import ScenePort

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = (
    ["x", "y", "z"]
    + [f"f_dc_{i}" for i in range(3)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)
# f_rest count -> SH degree
REST_COUNTS = {3 * ((degree + 1) ** 2 - 1): degree for degree in range(4)}
OPACITY_EPSILON = 1e-12
QUATERNION_TOLERANCE = 1e-6


class PlySceneAdapter(ScenePort):
    def load_scene(self, path: str) -> Tuple[Scene, SceneFileReport]:
        """
        Load a binary little-endian 3DGS point cloud.

        Stored log-scales are exponentiated, opacity logits pass through a
        sigmoid and quaternions (w, x, y, z) are normalized. Records with
        non-finite values or a zero quaternion are dropped and counted.

        :param path: Path of the .ply file.
        :return: Scene and SceneFileReport.
        :raises MalformedHeaderError: If the header cannot be parsed.
        :raises UnsupportedFieldLayoutError: If fields are missing or the f_rest
            count matches no degree in 0..3.
        :raises TruncatedFileError: If the body is shorter than declared.
        """
        try:
            plydata = PlyData.read(path)
        except PlyHeaderParseError as e:
            raise MalformedHeaderError(f"Failed to parse header of {path}: {e}")
        except PlyElementParseError as e:
            raise TruncatedFileError(f"Failed to read records of {path}: {e}")
        except OSError as e:
            raise IngestError(f"Failed to read scene {path}: {e}")
        except Exception as e:
            raise MalformedHeaderError(f"Failed to load scene {path}: {e}")

        if "vertex" not in plydata:
            raise UnsupportedFieldLayoutError(f"{path} has no vertex element")
        vertex = plydata["vertex"]
        names = [p.name for p in vertex.properties]
        missing = [name for name in REQUIRED_FIELDS if name not in names]
        if missing:
            raise UnsupportedFieldLayoutError(f"{path} lacks fields: {', '.join(missing)}")

        rest_names = sorted(
            (name for name in names if name.startswith("f_rest_")),
            key=lambda name: int(name.split("_")[-1]),
        )
        if len(rest_names) not in REST_COUNTS:
            raise UnsupportedFieldLayoutError(
                f"{path} has {len(rest_names)} f_rest fields; expected one of {sorted(REST_COUNTS)}"
            )
        degree = REST_COUNTS[len(rest_names)]
        coeffs = (degree + 1) ** 2

        def column(name: str) -> np.ndarray:
            return np.asarray(vertex[name], dtype=np.float64)

        means = np.stack([column(n) for n in ("x", "y", "z")], axis=1)
        dc = np.stack([column(f"f_dc_{i}") for i in range(3)], axis=1)
        rest = (
            np.stack([column(n) for n in rest_names], axis=1)
            if rest_names
            else np.zeros((len(means), 0))
        )
        opacity_logits = column("opacity")
        log_scales = np.stack([column(f"scale_{i}") for i in range(3)], axis=1)
        quats = np.stack([column(f"rot_{i}") for i in range(4)], axis=1)

        report = SceneFileReport(sh_degree=degree)
        gaussians: List[Gaussian3D] = []
        with np.errstate(over="ignore", under="ignore"):
            scales = np.exp(log_scales)
        opacities = np.clip(expit(opacity_logits), OPACITY_EPSILON, 1.0 - OPACITY_EPSILON)

        for i in range(len(means)):
            raw = np.concatenate([means[i], dc[i], rest[i], [opacity_logits[i]], log_scales[i], quats[i]])
            if not np.all(np.isfinite(raw)):
                report.reject("non-finite value")
                continue
            norm = float(np.linalg.norm(quats[i]))
            if norm == 0.0:
                report.reject("zero quaternion")
                continue
            if not np.all(np.isfinite(scales[i])) or np.any(scales[i] <= 0.0):
                report.reject("degenerate scale")
                continue
            if abs(norm - 1.0) > QUATERNION_TOLERANCE:
                report.normalized_quaternions += 1

            sh = np.zeros((coeffs, 3))
            sh[0] = dc[i]
            # f_rest is channel-major: f_rest[c * (K - 1) + (k - 1)]
            sh[1:] = rest[i].reshape(3, coeffs - 1).T
            gaussians.append(Gaussian3D(means[i], quats[i] / norm, scales[i], opacities[i], sh))

        report.gaussian_count = len(gaussians)
        if report.rejected_records:
            logger.warning(
                "Dropped %d records from %s: %s", report.rejected_records, path, report.rejection_reasons
            )
        if report.normalized_quaternions:
            logger.info("Normalized %d quaternions in %s", report.normalized_quaternions, path)
        return Scene.from_list(gaussians), report

    def save_scene(self, path: str, scene: Scene) -> None:
        """
        Write a scene as a binary little-endian point cloud (float32 fields).

        :param path: Destination path.
        :param scene: Scene to write; lower-degree Gaussians are zero-padded.
        """
        degree = max((g.sh_degree for g in scene), default=0)
        coeffs = (degree + 1) ** 2
        rest_count = 3 * (coeffs - 1)
        fields = (
            ["x", "y", "z", "nx", "ny", "nz"]
            + [f"f_dc_{i}" for i in range(3)]
            + [f"f_rest_{i}" for i in range(rest_count)]
            + ["opacity"]
            + [f"scale_{i}" for i in range(3)]
            + [f"rot_{i}" for i in range(4)]
        )
        records = np.empty(len(scene), dtype=[(name, "<f4") for name in fields])
        rows = []
        for g in scene:
            sh = np.zeros((coeffs, 3))
            sh[: g.sh_coeffs.shape[0]] = g.sh_coeffs
            rows.append(
                np.concatenate(
                    [
                        g.mean,
                        np.zeros(3),
                        sh[0],
                        sh[1:].T.reshape(-1),
                        [logit(g.opacity)],
                        np.log(g.scale),
                        g.rotation,
                    ]
                )
            )
        if rows:
            records[:] = list(map(tuple, np.asarray(rows, dtype=np.float32)))
        try:
            PlyData([PlyElement.describe(records, "vertex")], byte_order="<").write(path)
        except Exception as e:
            raise OutputError(f"Failed to save scene: {e}")
