# -*- coding: utf-8 -*-
import json
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.core.application.gaussian_ops import quat_to_rotmat
from src.core.domain.errors import (
    IngestError,
    MissingFieldError,
    NonOrthonormalRotationError,
    OutputError,
)
from src.core.domain.models import CameraModel
from src.core.ports.camera_port import CameraPort

ROTATION_TOLERANCE = 1e-4
REQUIRED_KEYS = ("width", "height", "fx", "fy", "position")
VECTOR_LENGTHS = {"rotation": 9, "quaternion": 4, "position": 3}


def _orthonormal(rotation: np.ndarray, where: str) -> np.ndarray:
    """Validate a world-to-camera rotation and snap it onto SO(3) when needed."""
    gram = rotation @ rotation.T
    if np.max(np.abs(gram - np.eye(3))) > ROTATION_TOLERANCE or np.linalg.det(rotation) <= 0.0:
        raise NonOrthonormalRotationError(f"{where}: rotation is not a proper rotation")
    if np.allclose(gram, np.eye(3), atol=1e-6):
        return rotation
    u, _, vt = np.linalg.svd(rotation)
    return u @ vt


class CameraFileAdapter(CameraPort):
    def _parse_blocks(self, path: str) -> List[Tuple[str, Dict[str, str]]]:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                lines = handle.readlines()
        except OSError as e:
            raise IngestError(f"Failed to read cameras {path}: {e}")

        blocks = []
        for number, line in enumerate(lines, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise IngestError(f"{path}:{number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "camera":
                blocks.append((value, {}))
                continue
            if not blocks:
                raise IngestError(f"{path}:{number}: '{key}' outside a camera block")
            blocks[-1][1][key] = value
        return blocks

    def _camera_from_block(self, path: str, camera_id: str, fields: Dict[str, str]) -> CameraModel:
        where = f"{path}: camera {camera_id}"
        for key in REQUIRED_KEYS:
            if key not in fields:
                raise MissingFieldError(f"{where}: missing '{key}'")
        if "rotation" not in fields and "quaternion" not in fields:
            raise MissingFieldError(f"{where}: missing 'rotation' or 'quaternion'")

        def numbers(key: str) -> np.ndarray:
            try:
                values = np.array([float(v) for v in fields[key].split()])
            except ValueError:
                raise IngestError(f"{where}: '{key}' is not numeric")
            expected = VECTOR_LENGTHS.get(key, 1)
            if values.size != expected:
                raise IngestError(f"{where}: '{key}' needs {expected} values")
            return values

        if "rotation" in fields:
            rotation = _orthonormal(numbers("rotation").reshape(3, 3), where)
        else:
            quaternion = numbers("quaternion")
            if np.linalg.norm(quaternion) == 0.0:
                raise NonOrthonormalRotationError(f"{where}: zero quaternion")
            rotation = quat_to_rotmat(quaternion)

        width, height = int(numbers("width")[0]), int(numbers("height")[0])
        cx = numbers("cx")[0] if "cx" in fields else width / 2.0
        cy = numbers("cy")[0] if "cy" in fields else height / 2.0
        near = numbers("near")[0] if "near" in fields else 0.01
        try:
            return CameraModel(
                position=numbers("position"),
                orientation=rotation,
                focal=(numbers("fx")[0], numbers("fy")[0]),
                principal_point=(cx, cy),
                resolution=(width, height),
                near_plane=near,
            )
        except ValueError as e:
            raise IngestError(f"{where}: {e}")

    def load_cameras(self, path: str) -> List[CameraModel]:
        """
        Load the cameras of a key-value camera file.

        Each block starts with ``camera = <id>`` and holds width, height, fx,
        fy, position and either a row-major world-to-camera ``rotation``
        (9 values) or a ``quaternion`` (w x y z); cx, cy and near are optional.

        :param path: Path of the camera file.
        :return: Cameras in file order.
        :raises MissingFieldError: If a block lacks a required key.
        :raises NonOrthonormalRotationError: If a rotation is off by more than 1e-4
            or is a reflection.
        """
        blocks = self._parse_blocks(path)
        if not blocks:
            raise MissingFieldError(f"{path}: no camera blocks")
        return [self._camera_from_block(path, camera_id, fields) for camera_id, fields in blocks]

    def save_cameras(self, path: str, cameras: Sequence[CameraModel]) -> None:
        """
        Write cameras in the key-value camera format.

        :param path: Destination path.
        :param cameras: Cameras to write.
        """

        def join(values) -> str:
            return " ".join(repr(float(v)) for v in np.ravel(values))

        lines = []
        for camera_id, cam in enumerate(cameras):
            lines += [
                f"camera = {camera_id}",
                f"width = {cam.width}",
                f"height = {cam.height}",
                f"fx = {repr(float(cam.focal[0]))}",
                f"fy = {repr(float(cam.focal[1]))}",
                f"cx = {repr(float(cam.principal_point[0]))}",
                f"cy = {repr(float(cam.principal_point[1]))}",
                f"rotation = {join(cam.orientation)}",
                f"position = {join(cam.position)}",
                f"near = {repr(cam.near_plane)}",
                "",
            ]
        try:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("\n".join(lines))
        except OSError as e:
            raise OutputError(f"Failed to save cameras: {e}")

    def load_cameras_json(self, path: str) -> List[CameraModel]:
        """
        Convert a 3DGS ``cameras.json`` file. Its rotations are camera-to-world
        and are transposed; the principal point is the image center.

        :param path: Path of the JSON file.
        :return: Cameras in file order.
        :raises MissingFieldError: If an entry lacks a required key.
        """
        try:
            with open(path, "r", encoding="utf-8") as handle:
                entries = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise IngestError(f"Failed to read cameras {path}: {e}")

        cameras = []
        for number, entry in enumerate(entries):
            where = f"{path}: entry {entry.get('id', number)}"
            for key in ("width", "height", "position", "rotation", "fx", "fy"):
                if key not in entry:
                    raise MissingFieldError(f"{where}: missing '{key}'")
            camera_to_world = np.asarray(entry["rotation"], dtype=np.float64).reshape(3, 3)
            rotation = _orthonormal(camera_to_world.T, where)
            width, height = int(entry["width"]), int(entry["height"])
            cameras.append(
                CameraModel(
                    position=entry["position"],
                    orientation=rotation,
                    focal=(entry["fx"], entry["fy"]),
                    principal_point=(width / 2.0, height / 2.0),
                    resolution=(width, height),
                )
            )
        return cameras
